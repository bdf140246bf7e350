"""Directed colored multigraphs and the colored configuration model.

Colors live in C = [L] x [L] with conjugate cbar = (j, i); a half edge of
color c must pair with one of color cbar.  Off-diagonal colors pair two stub
arrays through a uniformly shuffled bijection, diagonal colors pair
consecutive entries of one shuffled stub array (a uniform perfect matching).
Girth-constrained sampling is plain rejection; tiny instances can be counted
and enumerated exhaustively for oracle work.
"""

from __future__ import annotations

import math
import random
from collections import Counter, deque
from itertools import permutations
from typing import Iterator, Mapping, Sequence

Matrix = tuple[tuple[int, ...], ...]


def _as_rng(seed) -> random.Random:
    if isinstance(seed, random.Random):
        return seed
    if isinstance(seed, (int, float, str, bytes, bytearray)) or seed is None:
        return random.Random(seed)
    return random.Random(repr(seed))


class ResourceLimitError(RuntimeError):
    """A configured attempt/size cap was exhausted."""

    def __init__(self, message, acceptance_estimate=None):
        super().__init__(message)
        self.acceptance_estimate = acceptance_estimate


class ColoredDegreeSequence:
    """Per-vertex L x L colored degree matrices D(v)."""

    def __init__(self, L: int, matrices: Sequence):
        self.L = L
        self.matrices: list[Matrix] = [
            tuple(tuple(int(x) for x in row) for row in m) for m in matrices
        ]
        for m in self.matrices:
            if len(m) != L or any(len(r) != L for r in m):
                raise ValueError("each colored degree matrix must be L x L")
            if any(x < 0 for row in m for x in row):
                raise ValueError("colored degrees must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.matrices)

    def color_sum(self, i: int, j: int) -> int:
        return sum(m[i][j] for m in self.matrices)

    def color_sums(self) -> Matrix:
        return tuple(
            tuple(self.color_sum(i, j) for j in range(self.L)) for i in range(self.L)
        )

    def validate(self) -> tuple[bool, str | None]:
        """Membership in D_n: the color-sum matrix S must be symmetric with an
        even diagonal."""
        s = self.color_sums()
        for i in range(self.L):
            if s[i][i] % 2:
                return False, f"odd diagonal color sum S[{i}][{i}] = {s[i][i]}"
            for j in range(i + 1, self.L):
                if s[i][j] != s[j][i]:
                    return False, (
                        f"asymmetric color sums S[{i}][{j}] = {s[i][j]} "
                        f"vs S[{j}][{i}] = {s[j][i]}"
                    )
        return True, None

    def max_entry(self) -> int:
        return max((x for m in self.matrices for row in m for x in row), default=0)

    def total_half_edges(self) -> int:
        return sum(x for m in self.matrices for row in m for x in row)

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "colors": [[i, j] for i in range(self.L) for j in range(self.L)],
            "matrices": [[list(row) for row in m] for m in self.matrices],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ColoredDegreeSequence":
        return cls(int(obj["L"]), obj["matrices"])


class DirectedColoredMultigraph:
    """Vertex set [n] with per-color multiplicities omega_c(u, v), stored with
    the directional-consistency invariant omega_c(u,v) = omega_cbar(v,u)."""

    def __init__(self, n: int, L: int):
        self.n = n
        self.L = L
        self.omega: Counter = Counter()  # ((i, j), u, v) -> multiplicity

    def add_pair(self, c: tuple[int, int], u: int, v: int) -> None:
        """Record one realized half-edge pairing: color c from u to v plus the
        conjugate edge from v to u."""
        i, j = c
        self.omega[((i, j), u, v)] += 1
        self.omega[((j, i), v, u)] += 1

    def multiplicity(self, c: tuple[int, int], u: int, v: int) -> int:
        return self.omega.get((c, u, v), 0)

    def degree_matrix(self, v: int) -> Matrix:
        d = [[0] * self.L for _ in range(self.L)]
        for (c, u, _w), k in self.omega.items():
            if u == v:
                d[c[0]][c[1]] += k
        return tuple(tuple(row) for row in d)

    def degree_sequence(self) -> ColoredDegreeSequence:
        return ColoredDegreeSequence(self.L, [self.degree_matrix(v) for v in range(self.n)])

    def frozen(self) -> frozenset:
        return frozenset(self.omega.items())

    def colorblind(self) -> "Multigraph":
        m = Multigraph(self.n)
        bar: Counter = Counter()
        for (_c, u, v), k in self.omega.items():
            bar[(u, v)] += k
        for (u, v), k in bar.items():
            if u <= v:
                m.set_count(u, v, k)
        return m

    def edge_list_by_color(self) -> dict[tuple[int, int], list[tuple[int, int, int]]]:
        out: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
        for (c, u, v), k in sorted(self.omega.items()):
            out.setdefault(c, []).append((u, v, k))
        return out


class Multigraph:
    """omega(u,v) multiplicities with even diagonal (omega(u,u)/2 loops)."""

    def __init__(self, n: int):
        self.n = n
        self.count: dict[tuple[int, int], int] = {}

    def set_count(self, u: int, v: int, k: int) -> None:
        if u > v:
            u, v = v, u
        if k:
            self.count[(u, v)] = k
        else:
            self.count.pop((u, v), None)

    def get(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        return self.count.get((u, v), 0)

    def degree(self, v: int) -> int:
        # deg(v) = sum_w omega(v, w); the diagonal entry counts both loop ends
        off = sum(k for (a, b), k in self.count.items() if (a == v) != (b == v))
        return off + self.get(v, v)

    def neighbors(self, v: int) -> Iterator[int]:
        for (a, b) in self.count:
            if a == v and b != v:
                yield b
            elif b == v and a != v:
                yield a

    def is_simple(self) -> bool:
        return all(k == 1 and u != v for (u, v), k in self.count.items())

    def has_cycle_up_to(self, h: int) -> bool:
        """True iff some cycle has length <= h; self-loops are 1-cycles and
        parallel edges 2-cycles."""
        if h >= 1 and any(u == v for (u, v) in self.count):
            return True
        if h >= 2 and any(k >= 2 for (u, v), k in self.count.items() if u != v):
            return True
        if h < 3:
            return False
        # BFS girth on the simple skeleton
        adj: dict[int, list[int]] = {v: [] for v in range(self.n)}
        for (u, v), _k in self.count.items():
            if u != v:
                adj[u].append(v)
                adj[v].append(u)
        best = math.inf
        for s in range(self.n):
            dist = {s: 0}
            parent = {s: -1}
            dq = deque([s])
            while dq:
                a = dq.popleft()
                for w in adj[a]:
                    if w not in dist:
                        dist[w] = dist[a] + 1
                        parent[w] = a
                        dq.append(w)
                    elif parent[a] != w and dist[w] >= dist[a]:
                        cycle = dist[a] + dist[w] + 1
                        if cycle < best:
                            best = cycle
            if best == 3:
                break
        return best <= h


def colorblind(g: DirectedColoredMultigraph) -> Multigraph:
    return g.colorblind()


def girth_at_most(m: Multigraph, h: int) -> bool:
    return m.has_cycle_up_to(h)


def _color_classes(L: int):
    lower = [(i, j) for i in range(L) for j in range(L) if i < j]
    diag = [(i, i) for i in range(L)]
    return lower, diag


def _stub_arrays(dvec: ColoredDegreeSequence) -> dict[tuple[int, int], list[int]]:
    stubs: dict[tuple[int, int], list[int]] = {}
    L = dvec.L
    for i in range(L):
        for j in range(L):
            arr = []
            for v, m in enumerate(dvec.matrices):
                arr.extend([v] * m[i][j])
            stubs[(i, j)] = arr
    return stubs


def sample_cm(dvec: ColoredDegreeSequence, rng: random.Random | int) -> DirectedColoredMultigraph:
    """One draw from the configuration model: a uniformly random pairing of
    conjugate half edges, mapped to its directed colored multigraph."""
    ok, why = dvec.validate()
    if not ok:
        raise ValueError(f"invalid colored degree sequence: {why}")
    r = _as_rng(rng)
    out = DirectedColoredMultigraph(dvec.n, dvec.L)
    stubs = _stub_arrays(dvec)
    lower, diag = _color_classes(dvec.L)
    for c in lower:
        cbar = (c[1], c[0])
        a = stubs[c]
        b = list(stubs[cbar])
        r.shuffle(b)
        for u, v in zip(a, b):
            out.add_pair(c, u, v)
    for c in diag:
        a = list(stubs[c])
        r.shuffle(a)
        it = iter(a)
        for u, v in zip(it, it):
            out.add_pair(c, u, v)
    return out


def sample_girth_constrained(
    dvec: ColoredDegreeSequence,
    h: int,
    rng: random.Random | int,
    max_attempts: int = 1_000_000,
) -> tuple[DirectedColoredMultigraph, int]:
    """Rejection-sample the configuration model until the colorblind
    multigraph has no cycle of length <= h; returns (graph, attempts)."""
    r = _as_rng(rng)
    for attempt in range(1, max_attempts + 1):
        g = sample_cm(dvec, r)
        if not g.colorblind().has_cycle_up_to(h):
            return g, attempt
    raise ResourceLimitError(
        f"no girth-constrained sample in {max_attempts} attempts",
        acceptance_estimate=0.0 if max_attempts else None,
    )


def _log_double_factorial(n: int) -> float:
    """log n!! for odd n >= -1 ((-1)!! = 1)."""
    if n <= 0:
        return 0.0
    return sum(math.log(k) for k in range(n, 0, -2))


def log_config_count(dvec: ColoredDegreeSequence) -> float:
    """log |Sigma|: one factorial per unordered off-diagonal color pair and
    one double factorial per diagonal color."""
    ok, why = dvec.validate()
    if not ok:
        raise ValueError(f"invalid colored degree sequence: {why}")
    lower, diag = _color_classes(dvec.L)
    total = 0.0
    for c in lower:
        total += math.lgamma(dvec.color_sum(*c) + 1)
    for c in diag:
        total += _log_double_factorial(dvec.color_sum(*c) - 1)
    return total


def log_count_girth(dvec: ColoredDegreeSequence, h: int, log_alpha: float) -> float:
    """Estimated log |G(D, h)| for h >= 2: log alpha + log |Sigma| minus the
    per-graph configuration multiplicity sum(log D_c(i)!)."""
    if h < 2:
        raise ValueError("the counting formula needs h >= 2")
    total = log_alpha + log_config_count(dvec)
    for m in dvec.matrices:
        for row in m:
            for x in row:
                if x > 1:
                    total -= math.lgamma(x + 1)
    return total


def acceptance_fraction(
    dvec: ColoredDegreeSequence, h: int, trials: int, rng: random.Random | int
) -> tuple[float, tuple[float, float]]:
    """Monte-Carlo acceptance rate of the girth constraint with a Wilson score
    interval (z = 1.96)."""
    r = _as_rng(rng)
    hits = 0
    for _ in range(trials):
        g = sample_cm(dvec, r)
        if not g.colorblind().has_cycle_up_to(h):
            hits += 1
    p = hits / trials
    z = 1.96
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    spread = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return p, (max(center - spread, 0.0), min(center + spread, 1.0))


# ---------------------------------------------------------------------------
# Exhaustive configuration enumeration (oracle scale)


def _perfect_matchings(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], list(items[1:])
    for k in range(len(rest)):
        partner = rest[k]
        remaining = rest[:k] + rest[k + 1 :]
        for match in _perfect_matchings(remaining):
            yield [(first, partner)] + match


def enumerate_configurations(dvec: ColoredDegreeSequence) -> Iterator[DirectedColoredMultigraph]:
    """Every configuration sigma in Sigma, as its multigraph Gamma(sigma);
    multigraphs repeat exactly as often as they have configurations."""
    ok, why = dvec.validate()
    if not ok:
        raise ValueError(f"invalid colored degree sequence: {why}")
    stubs = _stub_arrays(dvec)
    lower, diag = _color_classes(dvec.L)

    def rec(colors, partial):
        if not colors:
            g = DirectedColoredMultigraph(dvec.n, dvec.L)
            for c, pairs in partial:
                for u, v in pairs:
                    g.add_pair(c, u, v)
            yield g
            return
        c, kind = colors[0]
        if kind == "bijection":
            a = stubs[c]
            b = stubs[(c[1], c[0])]
            for perm in permutations(range(len(b))):
                pairs = [(a[i], b[perm[i]]) for i in range(len(a))]
                yield from rec(colors[1:], partial + [(c, pairs)])
        else:
            for match in _perfect_matchings(stubs[c]):
                yield from rec(colors[1:], partial + [(c, match)])

    colors = [(c, "bijection") for c in lower if stubs[c]] + [
        (c, "matching") for c in diag if stubs[c]
    ]
    yield from rec(colors, [])


def enumerate_girth_constrained(
    dvec: ColoredDegreeSequence, h: int, max_half_edges: int = 12
) -> list[DirectedColoredMultigraph]:
    """All distinct elements of G(D, h) by exhaustive configuration
    enumeration plus dedup; capped by total half-edge count."""
    if dvec.total_half_edges() > max_half_edges:
        raise ResourceLimitError(
            f"{dvec.total_half_edges()} half edges exceed the cap {max_half_edges}"
        )
    seen = {}
    for g in enumerate_configurations(dvec):
        if not g.colorblind().has_cycle_up_to(h):
            seen.setdefault(g.frozen(), g)
    return list(seen.values())


def exact_config_count(dvec: ColoredDegreeSequence) -> int:
    """|Sigma| as an exact integer."""
    lower, diag = _color_classes(dvec.L)
    total = 1
    for c in lower:
        total *= math.factorial(dvec.color_sum(*c))
    for c in diag:
        s = dvec.color_sum(*c)
        total *= math.factorial(s) // (math.factorial(s // 2) * 2 ** (s // 2)) if s else 1
    return total
