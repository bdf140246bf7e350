"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  Tolerances are pinned here and nowhere else.
"""

from __future__ import annotations

import hashlib
import math
import random
import sys
import time
from collections import Counter
from contextlib import contextmanager
from fractions import Fraction
from itertools import combinations

import pytest

from locallim import (
    CanonicalTree,
    ColoredDegreeSequence,
    HalfTree,
    MarkedGraph,
    NeighborhoodDist,
    adapted_counts,
    canonicalize,
    colored_degree,
    colored_of,
    empirical_dist,
    etype,
    exact_count,
    exact_n_h,
    extend_exact,
    half_tree_cut,
    involution_check,
    j_h,
    leaf,
    mark_counts,
    mcb,
    message_types,
    neighborhood,
    oplus,
    point_mass,
    realize,
    sample_girth_constrained,
    stirling_log_count,
    truncate,
    truncate_dist,
    tv_distance,
)
from locallim.colored import enumerate_configurations, exact_config_count, sample_cm
from locallim.exhaustive import all_marked_graphs, tree_class_counts, trees_by_size
from locallim.metrics import exact_log_count, mark_count_key
from locallim.trees import eh_table
from locallim.ugwt import UgwtSampler, sampler_for

from helpers import (
    bounded_dist,
    conditional_extension_law,
    oracle_rooted_isomorphic,
    shuffled_labeled_tree,
    tree_as_graph,
)

pytestmark = pytest.mark.acceptance

EXPECTED_CLASS_COUNTS = [2, 16, 200, 2864, 45140, 754640]  # recurrence, 1..6 vertices

TOL_J_MONOTONE = 1e-9
TOL_J_CLOSED_FORM = 1e-12
TOL_MARKOV_SAMPLED_TV = 0.03
TOL_REALIZE_TV_H = 0.05
TOL_REALIZE_TV_H1 = 0.08
N_UNIMODULARITY = 100_000
N_MARKOV = 100_000
N_CM_UNIFORMITY = 100_000
N_REALIZE_REFERENCE = 100_000


@contextmanager
def criterion(number: int, description: str):
    started = time.time()
    try:
        yield
    except BaseException:
        print(f"[criterion {number:02d}] {description}: FAIL", file=sys.stderr, flush=True)
        raise
    print(
        f"[criterion {number:02d}] {description}: PASS ({time.time() - started:.1f}s)",
        file=sys.stderr,
        flush=True,
    )


@pytest.fixture(scope="module")
def corpus6():
    """All iso-classes with <= 6 vertices, |edge marks| = |vertex marks| = 2."""
    return trees_by_size(6, 2, 2)


@pytest.fixture(scope="module")
def j_corpus():
    """50 random admissible depth-1 laws (bounded degree keeps the two-step
    exact extension tractable)."""
    out = []
    i = 0
    while len(out) < 50:
        i += 1
        P = bounded_dist(
            1,
            seed=9000 + i,
            n=12 + (i % 4),
            max_degree=3,
            n_edge_marks=1 + (i % 2),
            n_vertex_marks=2,
        )
        if P.mean_degree() > 0:
            out.append(P)
    return out


def test_c01_canonical_form(corpus6):
    with criterion(1, "canonical-form correctness on all trees with <= 6 vertices"):
        # enumeration matches the independent recurrence
        counts = [len(corpus6[v]) for v in range(1, 7)]
        assert counts == EXPECTED_CLASS_COUNTS == tree_class_counts(6, 2, 2)[1:]

        # soundness: relabeled representatives re-canonicalize identically;
        # completeness: all classes have pairwise-distinct keys
        rng = random.Random(20260811)
        seen = set()
        for size in range(1, 7):
            for t in corpus6[size]:
                assert t.key not in seen
                seen.add(t.key)
                root, marks, adj = shuffled_labeled_tree(t, rng)
                assert canonicalize(root, dict(enumerate(marks)), adj).key == t.key
        assert len(seen) == sum(EXPECTED_CLASS_COUNTS)

        # direct brute-force oracle agreement, exhaustive at <= 4 vertices
        small = [t for v in range(1, 5) for t in corpus6[v]]
        graphs = {t.key: tree_as_graph(t) for t in small}
        for t in small:
            root, marks, adj = shuffled_labeled_tree(t, rng)
            relabeled = canonicalize(root, dict(enumerate(marks)), adj)
            assert relabeled.key == t.key
            assert oracle_rooted_isomorphic(graphs[t.key], 0, tree_as_graph(relabeled), 0)
        buckets: dict = {}
        for t in small:
            inv = (
                t.nverts,
                t.depth,
                t.root_mark,
                tuple(sorted((mr, mc) for mr, mc, _s in t.children)),
            )
            buckets.setdefault(inv, []).append(t)
        checked = 0
        for group in buckets.values():
            for a, b in combinations(group, 2):
                assert a.key != b.key
                assert not oracle_rooted_isomorphic(graphs[a.key], 0, graphs[b.key], 0)
                checked += 1
        assert checked > 1000


def test_c02_tree_algebra_lemmas(corpus6):
    with criterion(2, "tree-algebra lemmas exhaustive on the <= 6-vertex corpus"):
        # joint-child lemma: equal branches and equal upward marks force equal
        # upward views (checked through labeled cuts)
        from locallim.exhaustive import materialize

        for size in range(2, 7):
            for t in corpus6[size]:
                dup_groups = []
                run = [0]
                for i in range(1, len(t.children)):
                    if t.children[i] == t.children[i - 1]:
                        run.append(i)
                    else:
                        if len(run) > 1:
                            dup_groups.append(run)
                        run = [i]
                if len(run) > 1:
                    dup_groups.append(run)
                if not dup_groups:
                    continue
                vmarks, adj = materialize(t)
                marks_map = dict(enumerate(vmarks))
                root_children = [w for w, _a, _b in adj[0]]
                for group in dup_groups:
                    cuts = [
                        half_tree_cut(root_children[i], 0, marks_map, adj)
                        for i in group[:3]
                    ]
                    assert all(c == cuts[0] for c in cuts[1:])

        # join-cancellation lemma: t1 + t' = t2 + t' and equal marks imply
        # t1 = t2, over all pairs fitting in 6 vertices
        halves_by_size: dict[int, list[HalfTree]] = {}
        for size in range(1, 6):
            halves_by_size[size] = [
                HalfTree(m, t) for t in corpus6[size] for m in (0, 1)
            ]
        for tp_size in range(1, 6):
            for tp in halves_by_size[tp_size]:
                seen: dict = {}
                for t_size in range(1, 7 - tp_size):
                    for t in halves_by_size[t_size]:
                        key = (t.mark, oplus(t, tp).key)
                        assert key not in seen
                        seen[key] = t

        # positive-count identity: E_{l+1,k}(t,t') equals the relaxed count
        for size in range(1, 7):
            for t in corpus6[size]:
                k = max(t.depth, 1)
                for l in (1, 2):
                    for (up, br), count in eh_table(t, l + 1, k).items():
                        relaxed = sum(
                            1
                            for mr, mc, sub in t.children
                            if mr == up.mark
                            and HalfTree(mc, truncate(sub, k - 1)) == br
                        )
                        assert count == relaxed

        # uniqueness: root mark plus the full E_h table pins the tree (h=5
        # covers every corpus tree; smaller h on the depth-filtered subcorpus)
        table_index: dict[bytes, bytes] = {}
        for size in range(1, 7):
            for t in corpus6[size]:
                blob = bytearray()
                for (up, br), count in sorted(
                    eh_table(t, 5).items(),
                    key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key()),
                ):
                    blob += up.mark.to_bytes(1, "big")
                    blob += up.subtree.key
                    blob += br.mark.to_bytes(1, "big")
                    blob += br.subtree.key
                    blob += count.to_bytes(2, "big")
                blob.append(t.root_mark)
                digest = hashlib.blake2b(bytes(blob), digest_size=16).digest()
                key_digest = hashlib.blake2b(t.key, digest_size=16).digest()
                assert table_index.setdefault(digest, key_digest) == key_digest
        del table_index
        for h in (1, 2, 3):
            seen_tables: dict = {}
            for size in range(1, 5):
                for t in corpus6[size]:
                    if t.depth > h:
                        continue
                    frozen = (
                        t.root_mark,
                        tuple(
                            sorted(
                                eh_table(t, h).items(),
                                key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key()),
                            )
                        ),
                    )
                    assert seen_tables.setdefault(frozen, t.key) == t.key


def test_c03_size_biased_normalization(j_corpus):
    with criterion(3, "size-biased kernel normalization exact on 50 random laws"):
        for P in j_corpus:
            assert P.mode == "rational"
            ok, pair = P.is_admissible()
            assert ok, pair
            for t, tp in P.e_table():
                kern = P.size_biased(t, tp)
                assert kern.total() == 1
                for half in kern.atoms():
                    assert half.truncated(P.h - 1) == t


def test_c04_markov_consistency():
    with criterion(4, "Markov consistency: exact marginal + kernel identity + sampled TV"):
        for h, seed in ((1, 301), (1, 302), (2, 303)):
            P = bounded_dist(h, seed=seed, n=12, max_degree=3, n_edge_marks=1)
            Q = extend_exact(P)
            assert len(Q) <= 50, len(Q)
            # exact identity: the depth-h marginal of the extension is P
            assert truncate_dist(Q, h).probs == P.probs
            # kernel identity, exact in rational arithmetic
            for (s, sp), e in Q.e_table().items():
                if e > 0:
                    assert Q.size_biased(s, sp).table == conditional_extension_law(P, s, sp)

        # sampled TV between the two processes at depth h+2
        h = 1
        P = bounded_dist(h, seed=304, n=12, max_degree=3, n_edge_marks=1)
        Q = extend_exact(P)
        deep = sampler_for(P)
        shallow = sampler_for(Q)
        counts_p: Counter = Counter()
        counts_q: Counter = Counter()
        for i in range(N_MARKOV):
            counts_p[deep.sample(h + 2, ("mc-p", i)).canonical(h + 2)] += 1
            counts_q[shallow.sample(h + 2, ("mc-q", i)).canonical(h + 2)] += 1
        law_p = {c: Fraction(k, N_MARKOV) for c, k in counts_p.items()}
        law_q = {c: Fraction(k, N_MARKOV) for c, k in counts_q.items()}
        tv = float(tv_distance(law_p, law_q))
        assert tv <= TOL_MARKOV_SAMPLED_TV, tv


def test_c05_unimodularity():
    with criterion(5, "involution invariance on 10 laws + negative control"):
        rng = random.Random(515)
        passed = 0
        for i in range(10):
            P = bounded_dist(
                1, seed=7000 + i, n=14, max_degree=4, n_edge_marks=1 + (i % 2)
            )
            theta = i % 2

            def f(tree, _a, b, theta=theta):
                return 1.0 if tree.vmark[b] == theta else 0.0

            report = involution_check(P, f, N_UNIMODULARITY, ("acc5", i), radius=1, z=3.0)
            assert report.consistent, str(report)
            passed += 1
        assert passed == 10

        # negative control: root size-biased by (degree + 1), rejected at 5 sigma
        import copy

        P = bounded_dist(1, seed=7100, n=14, max_degree=4)
        weights = {cls: p * (cls.degree() + 1) for cls, p in P.probs.items()}
        total = sum(weights.values())
        control = copy.copy(UgwtSampler(P))
        atoms = sorted(weights, key=lambda c: c.key)
        cum, acc = [], 0.0
        for cls in atoms:
            acc += float(weights[cls] / total)
            cum.append(acc)
        control._ball_atoms, control._ball_cum = atoms, cum

        def f0(tree, _a, b):
            return 1.0 if tree.vmark[b] == 0 else 0.0

        report = involution_check(
            P, f0, N_UNIMODULARITY, "acc5-neg", radius=1, z=5.0, sampler=control.sample
        )
        assert not report.consistent, str(report)


def test_c06_j_monotone(j_corpus):
    with criterion(6, "J_1 >= J_2 >= J_3 via exact extension on the corpus"):
        for P in j_corpus:
            j1 = j_h(P)
            Q = extend_exact(P)
            j2 = j_h(Q)
            j3 = j_h(extend_exact(Q))
            assert j1 >= j2 - TOL_J_MONOTONE, (j1, j2)
            assert j2 >= j3 - TOL_J_MONOTONE, (j2, j3)


def test_c07_j_closed_forms():
    with criterion(7, "J_1 closed forms for regular point masses"):
        star2 = CanonicalTree(0, [(0, 0, leaf(0))] * 2)
        assert j_h(point_mass(star2, h=1)) == -1.0
        for d in range(1, 9):
            star = CanonicalTree(0, [(0, 0, leaf(0))] * d)
            expected = -d / 2 + (d / 2) * math.log(d) - math.log(math.factorial(d))
            assert abs(j_h(point_mass(star, h=1)) - expected) < TOL_J_CLOSED_FORM


def test_c08_exact_ensemble_count():
    with criterion(8, "exact ensemble count vs full enumeration at n <= 4"):
        for n in (1, 2, 3, 4):
            buckets: Counter = Counter()
            total = 0
            for g in all_marked_graphs(n, 2, 2):
                buckets[mark_count_key(g)] += 1
                total += 1
            assert total == 5 ** (n * (n - 1) // 2) * 2**n
            recovered = 0
            for (m_items, u_items), count in buckets.items():
                formula = exact_count(n, dict(m_items), dict(u_items))
                assert formula == count, (n, m_items, u_items)
                recovered += formula
            assert recovered == total
            # infeasible vectors report empty
            assert exact_count(n, {(0, 0): n * n}, {0: n}) == 0


def test_c09_configuration_uniformity():
    with criterion(9, "configuration-model uniformity and exact |Sigma|"):
        cases = [
            ColoredDegreeSequence(1, [((2,),)] * 3),
            ColoredDegreeSequence(
                2, [((0, 1), (1, 0)), ((0, 1), (1, 0)), ((0, 2), (2, 0))]
            ),
        ]
        for dvec in cases:
            assert dvec.total_half_edges() <= 8
            exact: Counter = Counter()
            total = 0
            for g in enumerate_configurations(dvec):
                exact[g.frozen()] += 1
                total += 1
            assert total == exact_config_count(dvec)
        # empirical frequencies on the 2-regular triple
        dvec = ColoredDegreeSequence(1, [((2,),)] * 3)
        exact = Counter()
        for g in enumerate_configurations(dvec):
            exact[g.frozen()] += 1
        total = sum(exact.values())
        rng = random.Random(909)
        seen: Counter = Counter()
        for _ in range(N_CM_UNIFORMITY):
            seen[sample_cm(dvec, rng).frozen()] += 1
        for key, count in exact.items():
            p = count / total
            sigma = math.sqrt(p * (1 - p) / N_CM_UNIFORMITY)
            emp = seen.get(key, 0) / N_CM_UNIFORMITY
            assert abs(emp - p) <= 4 * sigma, (p, emp)
        assert set(seen) <= set(exact)


def test_c10_conversion_roundtrip():
    with criterion(10, "MCB/colored round trips preserve all neighborhoods"):
        from helpers import random_treelike_graph

        rng = random.Random(1010)
        graphs = []
        for i in range(20):
            h = 1 if i % 2 == 0 else 2
            n = rng.randrange(12, 41)
            graphs.append((h, random_treelike_graph(n, h, 2, 2, rng, extra_edges=2)))
        for idx, (h, g) in enumerate(graphs):
            table, beta, dvec = colored_degree(g, h)
            reference = [neighborhood(g, v, h) for v in range(g.n)]
            for rep in range(5):
                h_graph, _att = sample_girth_constrained(dvec, 2 * h + 1, (idx, rep))
                rebuilt = mcb(h_graph, table, beta)
                for v in range(g.n):
                    assert neighborhood(rebuilt, v, h) == reference[v]
                table2, h2 = colored_of(rebuilt, h)
                remap = {
                    i2: table.index(half) for i2, half in enumerate(table2.half_trees)
                }
                om = {
                    ((remap[c[0]], remap[c[1]]), u, v): k
                    for (c, u, v), k in h2.omega.items()
                }
                assert om == dict(h_graph.omega)


def test_c11_message_passing_oracle():
    with criterion(11, "message passing equals the direct cut; triangle mismatch"):
        from helpers import random_treelike_graph

        rng = random.Random(1111)
        for i in range(20):
            h = 1 if i % 2 == 0 else 2
            g = random_treelike_graph(rng.randrange(12, 41), h, 2, 2, rng, extra_edges=2)
            messages = message_types(g, h)
            for (v, w), msg in messages.items():
                assert msg == etype(g, w, v, h)[1]

        # the triangle counterexample: colors disagree with recomputed types
        from locallim.colored import DirectedColoredMultigraph
        from locallim.convert import TypeTable

        path = CanonicalTree(0, [(0, 0, CanonicalTree(0, [(0, 0, leaf(0))]))])
        g_half = HalfTree(1, path)
        table = TypeTable([g_half])
        h_graph = DirectedColoredMultigraph(3, 1)
        for u, v in ((0, 1), (0, 2), (1, 2)):
            h_graph.add_pair((0, 0), u, v)
        marked = mcb(h_graph, table, [0, 0, 0])
        for (u, v) in marked.edges:
            tu, tv = etype(marked, u, v, 2)
            assert tu != g_half and tv != g_half
        for msg in message_types(marked, 2).values():
            assert msg != g_half


def test_c12_realization_convergence():
    with criterion(12, "realization pipeline converges over n = 200/800/3200"):
        specs = [
            (1, 1201, 1),
            (1, 1202, 2),
            (2, 1203, 1),
        ]
        for h, seed, edge_marks in specs:
            P = bounded_dist(h, seed=seed, n=14, max_degree=3, n_edge_marks=edge_marks)
            sampler = sampler_for(P)
            counts: Counter = Counter()
            for i in range(N_REALIZE_REFERENCE):
                counts[sampler.sample(h + 1, ("ref", seed, i)).canonical(h + 1)] += 1
            sampled_law = {
                cls: Fraction(c, N_REALIZE_REFERENCE) for cls, c in counts.items()
            }
            exact_law = extend_exact(P)
            # the sampled reference itself must sit close to the exact law
            assert float(tv_distance(sampled_law, exact_law.probs)) < 0.02

            tv_h = []
            tv_h1 = []
            for n in (200, 800, 3200):
                m, u = adapted_counts(P.mean_marked_degree(), P.root_mark_law(), n)
                g, _plan = realize(P, n, m, u, seed=(seed, n))
                assert mark_counts(g).m == {k: v for k, v in m.items() if v}
                tv_h.append(float(tv_distance(empirical_dist(g, h), P)))
                tv_h1.append(
                    float(tv_distance(empirical_dist(g, h + 1).probs, sampled_law))
                )
            assert tv_h[0] >= tv_h[1] >= tv_h[2], tv_h
            assert tv_h[2] <= TOL_REALIZE_TV_H, tv_h
            assert tv_h1[2] <= TOL_REALIZE_TV_H1, tv_h1


def test_c13_n_h_counting():
    with criterion(13, "N_h counting equals brute force over the full ensemble"):
        # n = 5, single marks (1024 graphs)
        targets5 = [
            MarkedGraph(5, [0] * 5, {(0, 1): (0, 0), (1, 2): (0, 0), (2, 3): (0, 0), (3, 4): (0, 0)}),
            MarkedGraph(5, [0] * 5, {(0, 1): (0, 0), (1, 2): (0, 0), (1, 3): (0, 0), (1, 4): (0, 0)}),
            MarkedGraph(5, [0] * 5, {(0, 1): (0, 0), (2, 3): (0, 0)}),
        ]
        buckets5: Counter = Counter()
        for g in all_marked_graphs(5, 1, 1):
            buckets5[_dist_key(g, 1)] += 1
        for g in targets5:
            assert exact_n_h(g, 1) == buckets5[_dist_key(g, 1)]

        # n = 4, two edge and two vertex marks (250k graphs)
        targets4 = [
            MarkedGraph(4, [0, 1, 0, 1], {(0, 1): (0, 1), (1, 2): (1, 1), (2, 3): (0, 0)}),
            MarkedGraph(4, [0, 0, 1, 1], {(0, 1): (0, 0), (2, 3): (1, 1)}),
            MarkedGraph(4, [1, 1, 1, 1], {(0, 1): (1, 1), (1, 2): (1, 1), (1, 3): (1, 1)}),
        ]
        buckets4: Counter = Counter()
        for g in all_marked_graphs(4, 2, 2):
            buckets4[_dist_key(g, 1)] += 1
        for g in targets4:
            assert exact_n_h(g, 1) == buckets4[_dist_key(g, 1)]


def _dist_key(g: MarkedGraph, h: int):
    return tuple(
        sorted((cls.key, mass) for cls, mass in empirical_dist(g, h).probs.items())
    )


def test_c14_stirling_consistency():
    with criterion(14, "Stirling form closes in on the exact count as n doubles"):
        targets = [
            ({(0, 0): Fraction(2)}, {0: Fraction(1)}),
            ({(0, 0): Fraction(3, 2), (0, 1): Fraction(1, 2), (1, 1): Fraction(1)},
             {0: Fraction(1, 3), 1: Fraction(2, 3)}),
            ({(0, 1): Fraction(1)}, {0: Fraction(1, 2), 1: Fraction(1, 2)}),
        ]
        for d, q in targets:
            errors = []
            for n in (50, 100, 200, 400):
                m, u = adapted_counts(d, q, n)
                exact = exact_log_count(n, m, u)
                stirling = stirling_log_count(n, m, u, d, q)
                errors.append(abs(exact - stirling) / n)
            assert errors[0] > errors[1] > errors[2] > errors[3], errors
