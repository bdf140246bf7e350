"""Command-line surface: sample, check, entropy, realize, converge, count.

Every run writes a manifest next to its outputs; reruns with the same
arguments and seed reproduce output files byte-for-byte.  Exit codes: 0 ok,
2 input problem, 3 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .colored import ResourceLimitError
from .convert import adapted_counts, realize
from .dists import (
    DegenerateDistributionError,
    NeighborhoodDist,
    SupportExplosionError,
    extend_exact,
    j_h,
    truncate_dist,
)
from .graphs import empirical_dist, graph_to_json
from .metrics import exact_log_count, lp_upper, stirling_log_count, tv_distance
from .trees import MarkSpace
from .ugwt import ColoredDegreeLaw, involution_check, sample_cugwt, sample_ugwt, sampler_for

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RESOURCE = 3


class _InputError(Exception):
    pass


def _load_dist(path: str, marks: MarkSpace, mode: str) -> NeighborhoodDist:
    try:
        with open(path) as fh:
            obj = json.load(fh)
        dist = NeighborhoodDist.from_json(obj, marks)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise _InputError(f"cannot load distribution from {path}: {exc}") from exc
    if mode == "float" and dist.mode != "float":
        dist = dist.as_float()
    return dist


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(args, command: str, outputs: list[str], started: float) -> None:
    manifest = {
        "command": command,
        "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
        "outputs": outputs,
    }
    path = _out_dir(args) / f"{command}.manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_sample(args) -> int:
    started = time.time()
    marks = MarkSpace()
    out = _out_dir(args) / args.out
    if args.kind == "ugwt":
        dist = _load_dist(args.dist, marks, args.mode)
        sampler = sampler_for(dist)
        depth = args.depth if args.depth is not None else dist.h
        if depth < dist.h:
            raise _InputError(f"--depth {depth} is below the law's depth h={dist.h}")
        with open(out, "w") as fh:
            for i in range(args.n):
                tree = sampler.sample(depth, (args.seed, i))
                fh.write(json.dumps(tree.to_json(marks), sort_keys=True))
                fh.write("\n")
    else:
        try:
            with open(args.dist) as fh:
                obj = json.load(fh)
            law = ColoredDegreeLaw(
                int(obj["L"]),
                {tuple(tuple(r) for r in m): Fraction(p) for m, p in obj["atoms"]},
            )
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise _InputError(f"cannot load colored degree law from {args.dist}: {exc}") from exc
        depth = args.depth if args.depth is not None else 3
        with open(out, "w") as fh:
            for i in range(args.n):
                tree = sample_cugwt(law, depth, (args.seed, i))
                fh.write(
                    json.dumps(
                        {
                            "seed": repr((args.seed, i)),
                            "n_vertices": tree.n_vertices(),
                            "ctype": [list(c) if c else None for c in tree.ctype],
                            "parent": tree.parent,
                            "degree_matrices": [
                                [list(r) for r in m] for m in tree.degree_matrix
                            ],
                        },
                        sort_keys=True,
                    )
                )
                fh.write("\n")
    _write_manifest(args, "sample", [str(out)], started)
    return EXIT_OK


def cmd_check(args) -> int:
    started = time.time()
    marks = MarkSpace()
    dist = _load_dist(args.dist, marks, args.mode)
    ok, pair = dist.is_admissible()
    print(f"admissible: {'true' if ok else 'false'}")
    if not ok:
        print(f"violating pair: {pair[0]} vs {pair[1]}")
    lines = [f"admissible: {ok}"]
    if ok and args.consistency:
        extended = extend_exact(dist)
        back = truncate_dist(extended, dist.h)
        dev = tv_distance(back, dist)
        print(f"consistency max deviation (TV of marginal roundtrip): {float(dev):.3e}")
        lines.append(f"consistency_tv: {float(dev):.3e}")
    if ok and args.unimodularity:
        theta = dist.items_sorted()[0][0].root_mark

        def f(tree, _a, b):
            return 1.0 if tree.vmark[b] == theta else 0.0

        report = involution_check(dist, f, args.n, args.seed, radius=1)
        print(report)
        lines.append(str(report))
    out = _out_dir(args) / "check.txt"
    out.write_text("\n".join(lines) + "\n")
    _write_manifest(args, "check", [str(out)], started)
    return EXIT_OK


def cmd_entropy(args) -> int:
    started = time.time()
    marks = MarkSpace()
    dist = _load_dist(args.dist, marks, args.mode)
    rows = []
    current = dist
    for level in range(args.ladder):
        value = j_h(current)
        rows.append((current.h, value, len(current)))
        print(f"J_{current.h} = {value:.12f}  (support {len(current)})")
        if level + 1 < args.ladder:
            current = extend_exact(current, max_support=args.max_support)
    out = _out_dir(args) / "entropy.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h", "j_h", "support"])
        writer.writerows(rows)
    _write_manifest(args, "entropy", [str(out)], started)
    return EXIT_OK


def cmd_realize(args) -> int:
    started = time.time()
    marks = MarkSpace()
    dist = _load_dist(args.dist, marks, args.mode)
    if args.h is not None and args.h != dist.h:
        raise _InputError(f"--h {args.h} disagrees with the law's depth {dist.h}")
    m, u = adapted_counts(dist.mean_marked_degree(), dist.root_mark_law(), args.n)
    graph, plan = realize(dist, args.n, m, u, args.seed, max_attempts=args.max_attempts)
    out = _out_dir(args) / args.out
    with open(out, "w") as fh:
        json.dump(graph_to_json(graph, marks), fh, sort_keys=True)
        fh.write("\n")
    plan_path = _out_dir(args) / args.plan
    with open(plan_path, "w") as fh:
        json.dump(plan.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"realized n={args.n} h={dist.h} in {plan.attempts} attempt(s); "
        f"{plan.vertices_rebalanced} vertices rebalanced, "
        f"{len(plan.edges_added)} edges added, {len(plan.edges_removed)} removed, "
        f"{len(plan.marks_changed)} marks changed"
    )
    _write_manifest(args, "realize", [str(out), str(plan_path)], started)
    return EXIT_OK


def cmd_converge(args) -> int:
    started = time.time()
    marks = MarkSpace()
    dist = _load_dist(args.dist, marks, args.mode)
    schedule = [int(x) for x in args.schedule.split(",")]
    h = dist.h
    sampler = sampler_for(dist)
    # reference depth-(h+1) law from sampled trees
    from collections import Counter

    counts: Counter = Counter()
    for i in range(args.samples):
        counts[sampler.sample(h + 1, (args.seed, "ref", i)).canonical(h + 1)] += 1
    sampled_law = {cls: Fraction(c, args.samples) for cls, c in counts.items()}
    ladder = [j_h(dist)]
    rows = []
    for n in schedule:
        m, u = adapted_counts(dist.mean_marked_degree(), dist.root_mark_law(), n)
        graph, _plan = realize(dist, n, m, u, (args.seed, n), max_attempts=args.max_attempts)
        marginals_g = [empirical_dist(graph, d).probs for d in range(h + 2)]
        marginals_p = [truncate_dist(dist, d).probs for d in range(h + 1)] + [sampled_law]
        tvs = [float(tv_distance(marginals_g[d], marginals_p[d])) for d in range(h + 2)]
        bound = lp_upper(marginals_g, marginals_p).lp_upper
        rows.append([n] + [f"{t:.6f}" for t in tvs] + [f"{bound:.6f}"] + [f"{j:.9f}" for j in ladder])
        print(f"n={n}: " + " ".join(f"tv_{d}={t:.4f}" for d, t in enumerate(tvs)) + f" lp_upper={bound:.4f}")
    out = _out_dir(args) / "converge.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["n"] + [f"tv_{d}" for d in range(h + 2)] + ["lp_upper"] + [f"j_{h}"]
        )
        writer.writerows(rows)
    _write_manifest(args, "converge", [str(out)], started)
    return EXIT_OK


def cmd_count(args) -> int:
    started = time.time()
    m = {}
    for chunk in (args.m or "").split(";"):
        if not chunk:
            continue
        key, val = chunk.split("=")
        x, y = key.split(",")
        m[(int(x), int(y))] = int(val)
    u = {}
    for chunk in (args.u or "").split(";"):
        if not chunk:
            continue
        key, val = chunk.split("=")
        u[int(key)] = int(val)
    exact = exact_log_count(args.n, m, u)
    print(f"exact log count: {exact}")
    lines = [f"exact: {exact}"]
    if args.d and args.q:
        d = {}
        for chunk in args.d.split(";"):
            key, val = chunk.split("=")
            x, y = key.split(",")
            d[(int(x), int(y))] = float(val)
        q = {}
        for chunk in args.q.split(";"):
            key, val = chunk.split("=")
            q[int(key)] = float(val)
        stirling = stirling_log_count(args.n, m, u, d, q)
        print(f"stirling log count: {stirling}")
        lines.append(f"stirling: {stirling}")
    out = _out_dir(args) / "count.txt"
    out.write_text("\n".join(lines) + "\n")
    _write_manifest(args, "count", [str(out)], started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locallim",
        description="Samplers, conversions, and entropy reports for sparse marked graphs",
    )
    parser.add_argument("--seed", default=0, help="run seed (global flag)")
    parser.add_argument("--mode", choices=["rational", "float"], default="rational")
    parser.add_argument("--out-dir", default=".", help="directory for outputs and manifests")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw tree samples (JSON lines)")
    p.add_argument("--dist", required=True)
    p.add_argument("--kind", choices=["ugwt", "cugwt"], default="ugwt")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default="samples.jsonl")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("check", help="admissibility / consistency / unimodularity checks")
    p.add_argument("--dist", required=True)
    p.add_argument("--consistency", action="store_true")
    p.add_argument("--unimodularity", action="store_true")
    p.add_argument("--n", type=int, default=20000, help="samples for the unimodularity test")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("entropy", help="J_h ladder via exact depth extension")
    p.add_argument("--dist", required=True)
    p.add_argument("--ladder", type=int, default=1)
    p.add_argument("--max-support", type=int, default=200000)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("realize", help="realize a law as a finite marked graph")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=int, default=None)
    p.add_argument("--out", default="G.json")
    p.add_argument("--plan", default="plan.json")
    p.add_argument("--max-attempts", type=int, default=1000000)
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("converge", help="TV profile of realized graphs over an n-schedule")
    p.add_argument("--dist", required=True)
    p.add_argument("--schedule", default="200,800,3200")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--max-attempts", type=int, default=1000000)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("count", help="ensemble counts for given mark-count vectors")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", default="", help='edge counts, e.g. "0,0=3;0,1=2"')
    p.add_argument("--u", default="", help='vertex counts, e.g. "0=2;1=1"')
    p.add_argument("--d", default="", help="average degree vector (stirling)")
    p.add_argument("--q", default="", help="root mark law (stirling)")
    p.set_defaults(func=cmd_count)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, DegenerateDistributionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ResourceLimitError, SupportExplosionError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
