"""Marked <-> colored conversions and the graph-sequence realization pipeline.

`colored_of` turns an h-tree-like marked graph into a directed colored graph
whose colors are depth-h edge types; `mcb` reads a marked graph back off a
directed colored graph with simple colorblind skeleton.  `message_types` is
the independent message-passing oracle for the type computation.  `realize`
drives the whole pipeline from a finite-support admissible law to a marked
graph with exact target mark-count vectors, logging every adjustment.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .colored import (
    ColoredDegreeSequence,
    DirectedColoredMultigraph,
    ResourceLimitError,
    acceptance_fraction,
    enumerate_girth_constrained,
    log_count_girth,
    sample_girth_constrained,
)
from .dists import NeighborhoodDist
from .graphs import MarkedGraph, etype, is_h_treelike, mark_counts
from .trees import CanonicalTree, HalfTree, eh_table, leaf, otimes, truncate


class TypeTable:
    """Ordered registry of the distinct depth-(h-1) half-trees in play."""

    def __init__(self, half_trees: Sequence[HalfTree]):
        self.half_trees = list(half_trees)
        self._index = {ht: i for i, ht in enumerate(self.half_trees)}
        if len(self._index) != len(self.half_trees):
            raise ValueError("duplicate half-trees in a type table")

    @classmethod
    def from_half_trees(cls, half_trees: Iterable[HalfTree]) -> "TypeTable":
        distinct = {ht: None for ht in half_trees}
        return cls(sorted(distinct, key=lambda ht: ht.sort_key()))

    @classmethod
    def from_dist(cls, dist: NeighborhoodDist) -> "TypeTable":
        """Closure over both orientations of every support edge's type."""
        halves = []
        for cls_, _p in dist.items_sorted():
            for up, branch in eh_table(cls_, dist.h):
                halves.append(up)
                halves.append(branch)
        return cls.from_half_trees(halves)

    def __len__(self):
        return len(self.half_trees)

    def __iter__(self):
        return iter(self.half_trees)

    def index(self, half: HalfTree) -> int:
        i = self._index.get(half)
        if i is None:
            raise KeyError(f"half-tree not in the type table: {half!r}")
        return i

    def get(self, i: int) -> HalfTree:
        return self.half_trees[i]


def colored_of(g: MarkedGraph, h: int) -> tuple[TypeTable, DirectedColoredMultigraph]:
    """colored(G): one directed colored edge per orientation of each edge,
    colored by its depth-h type; fails if a type component is not a tree."""
    half: dict[tuple[int, int], HalfTree] = {}
    for (u, v) in g.edges:
        tu, tv = etype(g, u, v, h)
        for side, ht in (((u, v), tv), ((v, u), tu)):
            if not isinstance(ht.subtree, CanonicalTree):
                raise ValueError(f"edge {side} has a non-tree depth-{h} type component")
            half[side] = ht
    table = TypeTable.from_half_trees(half.values())
    out = DirectedColoredMultigraph(g.n, len(table))
    for (u, v) in g.edges:
        # the edge directed u -> v is colored etype(u, v), whose first
        # component is u's side of the cut
        c = (table.index(half[(v, u)]), table.index(half[(u, v)]))
        out.add_pair(c, u, v)
    return table, out


def mcb(h_graph: DirectedColoredMultigraph, table: TypeTable, beta: Sequence[int]) -> MarkedGraph:
    """Marked colorblind version: an edge colored (g, g') directed towards v
    gets mark g[m] towards u and g'[m] towards v; vertex marks come from beta."""
    cb = h_graph.colorblind()
    if not cb.is_simple():
        raise ValueError("marked colorblind conversion needs a simple skeleton")
    g = MarkedGraph(h_graph.n, list(beta), {})
    for (c, u, v), _k in sorted(h_graph.omega.items()):
        if v in g.adj[u]:
            continue  # the conjugate entry already placed this edge
        t, t_prime = table.get(c[0]), table.get(c[1])
        # the edge directed u -> v has color (t, t'): t[m] towards u, t'[m] towards v
        g.add_edge(u, v, t_prime.mark, t.mark)
    return g


def message_types(g: MarkedGraph, h: int) -> dict[tuple[int, int], HalfTree]:
    """Fixed-round message passing: M_{h-1}(v, w) for every directed edge.

    Messages start as (mark towards v, leaf at v's mark) and aggregate over
    in-neighbors except the recipient; on tree-like regions the message equals
    the direct cut G[w, v]_{h-1}.  Degree-1 senders keep their round-0
    message.
    """
    initial: dict[tuple[int, int], HalfTree] = {}
    for (u, v) in g.edges:
        # M_0(v, w) = (xi(w, v), leaf at v's mark) for the edge directed v -> w
        initial[(u, v)] = HalfTree(g.xi(v, u), leaf(g.vertex_marks[u]))
        initial[(v, u)] = HalfTree(g.xi(u, v), leaf(g.vertex_marks[v]))
    messages = dict(initial)
    for _round in range(1, h):
        nxt: dict[tuple[int, int], HalfTree] = {}
        for (v, w) in messages:
            if g.degree(v) == 1:
                nxt[(v, w)] = initial[(v, w)]
                continue
            kids = []
            for w_prime in g.neighbors(v):
                if w_prime == w:
                    continue
                incoming = messages[(w_prime, v)]
                piece = otimes(g.vertex_marks[v], g.xi(w_prime, v), incoming)
                kids.extend(piece.children)
            nxt[(v, w)] = HalfTree(g.xi(w, v), CanonicalTree(g.vertex_marks[v], kids))
        messages = nxt
    return messages


def n_perm_count(beta: Sequence[int], dvec: ColoredDegreeSequence) -> float:
    """log of the number of distinct relabelings of the pair sequence
    (beta(v), D(v)): log n! - sum over value-multiplicities of log mult!."""
    counts = Counter(zip(beta, dvec.matrices))
    total = math.lgamma(len(beta) + 1)
    for mult in counts.values():
        total -= math.lgamma(mult + 1)
    return total


def exact_n_perm_count(beta: Sequence[int], dvec: ColoredDegreeSequence) -> int:
    counts = Counter(zip(beta, dvec.matrices))
    total = math.factorial(len(beta))
    for mult in counts.values():
        total //= math.factorial(mult)
    return total


def log_n_h(
    g: MarkedGraph,
    h: int,
    count_mode: str = "exact",
    trials: int = 20_000,
    seed: int = 0,
) -> float:
    """log N_h(G) = log n(D, beta) + log |G(D, 2h+1)| for h-tree-like G.

    `exact` mode enumerates the girth-constrained configuration outcomes
    (tiny G only); `estimate` mode uses the counting formula with a
    Monte-Carlo acceptance fraction.
    """
    if not is_h_treelike(g, h):
        raise ValueError("N_h counting requires an h-tree-like graph")
    _table, beta, dvec = _colored_degree(g, h)
    base = n_perm_count(beta, dvec)
    if count_mode == "exact":
        outcomes = enumerate_girth_constrained(dvec, 2 * h + 1)
        return base + math.log(len(outcomes))
    if count_mode == "estimate":
        alpha, _ci = acceptance_fraction(dvec, 2 * h + 1, trials, seed)
        if alpha == 0.0:
            return float("-inf")
        return base + log_count_girth(dvec, 2 * h + 1, math.log(alpha))
    raise ValueError("count_mode must be 'exact' or 'estimate'")


def exact_n_h(g: MarkedGraph, h: int) -> int:
    """N_h(G) as an exact integer via exhaustive configuration enumeration."""
    if not is_h_treelike(g, h):
        raise ValueError("N_h counting requires an h-tree-like graph")
    _table, beta, dvec = _colored_degree(g, h)
    outcomes = enumerate_girth_constrained(dvec, 2 * h + 1)
    return exact_n_perm_count(beta, dvec) * len(outcomes)


def _colored_degree(g: MarkedGraph, h: int):
    from .graphs import colored_degree

    return colored_degree(g, h)


# ---------------------------------------------------------------------------
# Adapted count vectors


def adapted_counts(
    d: Mapping[tuple[int, int], object],
    q: Mapping[int, object],
    n: int,
) -> tuple[dict[tuple[int, int], int], dict[int, int]]:
    """Integer mark-count vectors tracking (d, Q) at size n.

    Off-diagonal entries floor(n d_{x,x'}), diagonal floor(n d_{x,x}/2),
    largest-remainder apportionment for the vertex marks; exact zeros are
    preserved.  Raises when the edge budget exceeds C(n, 2).
    """
    m: dict[tuple[int, int], int] = {}
    seen = set()
    for (x, x_prime), val in d.items():
        if Fraction(val) != Fraction(d.get((x_prime, x), val)):
            raise ValueError("average degree vector must be symmetric")
        key = (min(x, x_prime), max(x, x_prime))
        if key in seen or val == 0:
            continue
        seen.add(key)
        target = Fraction(val) * n / (2 if x == x_prime else 1)
        m[key] = int(target)  # floor for nonnegative targets
    if sum(m.values()) > n * (n - 1) // 2:
        raise ValueError(f"{sum(m.values())} edges do not fit on {n} vertices")
    u = largest_remainder({theta: Fraction(p) for theta, p in q.items()}, n)
    return m, u


def largest_remainder(weights: Mapping[int, Fraction], n: int) -> dict[int, int]:
    """Hamilton apportionment of n units; zero weights get exactly zero."""
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("weights must have positive total")
    floors: dict[int, int] = {}
    remainders = []
    assigned = 0
    for key in sorted(weights):
        w = weights[key]
        if w == 0:
            continue
        share = Fraction(w, 1) * n / total
        floors[key] = int(share)
        assigned += floors[key]
        remainders.append((-(share - floors[key]), key))
    remainders.sort()
    for _neg_frac, key in remainders[: n - assigned]:
        floors[key] += 1
    return {k: v for k, v in floors.items() if v}


# ---------------------------------------------------------------------------
# Realization pipeline


@dataclass
class RealizationPlan:
    """Audit trail of one realization run."""

    n: int
    h: int
    seed: object
    target_m: dict = field(default_factory=dict)
    target_u: dict = field(default_factory=dict)
    atom_counts: list = field(default_factory=list)  # (atom index, count)
    balance_log: list = field(default_factory=list)  # (vertex, color, removed)
    vertices_rebalanced: int = 0
    attempts: int = 0
    edges_added: list = field(default_factory=list)
    edges_removed: list = field(default_factory=list)
    marks_changed: list = field(default_factory=list)  # (vertex, old, new)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "h": self.h,
            "seed": repr(self.seed),
            "target_m": {f"{x},{y}": c for (x, y), c in sorted(self.target_m.items())},
            "target_u": {str(t): c for t, c in sorted(self.target_u.items())},
            "atom_counts": self.atom_counts,
            "balance_log": self.balance_log,
            "vertices_rebalanced": self.vertices_rebalanced,
            "attempts": self.attempts,
            "edges_added": self.edges_added,
            "edges_removed": self.edges_removed,
            "marks_changed": self.marks_changed,
        }


def realize(
    dist: NeighborhoodDist,
    n: int,
    target_m: Mapping[tuple[int, int], int],
    target_u: Mapping[int, int],
    seed,
    max_attempts: int = 1_000_000,
) -> tuple[MarkedGraph, RealizationPlan]:
    """Build a marked graph on [n] with the exact target count vectors whose
    depth-h neighborhood statistics track `dist`.

    Pipeline: quantize the law to n atoms, read off root marks and colored
    degrees, balance the color sums into D_n, draw a girth-(2h+1)-constrained
    configuration, convert through `mcb`, then edit edges and vertex marks to
    the exact targets.
    """
    ok, pair = dist.is_admissible()
    if not ok:
        raise ValueError(f"realization needs an admissible law; asymmetric at {pair}")
    h = dist.h
    if sum(target_u.values()) != n:
        raise ValueError("vertex mark counts must sum to n")
    if sum(target_m.values()) > n * (n - 1) // 2:
        raise ValueError("edge mark counts exceed the simple-graph budget")
    plan = RealizationPlan(n=n, h=h, seed=seed,
                           target_m={(min(x, y), max(x, y)): c for (x, y), c in target_m.items()},
                           target_u=dict(target_u))

    # (i) quantize the law to n atoms
    atoms = [cls for cls, _p in dist.items_sorted()]
    shares = largest_remainder(
        {i: Fraction(p) for i, (_cls, p) in enumerate(dist.items_sorted())}, n
    )
    plan.atom_counts = sorted(shares.items())
    assignment: list[CanonicalTree] = []
    for i in sorted(shares):
        assignment.extend([atoms[i]] * shares[i])

    # (ii) extract root marks and colored degrees over the distribution's table
    table = TypeTable.from_dist(dist)
    L = len(table)
    beta = [t.root_mark for t in assignment]
    matrices = []
    for t in assignment:
        mat = [[0] * L for _ in range(L)]
        for (up, branch), count in eh_table(t, h).items():
            mat[table.index(up)][table.index(branch)] = count
        matrices.append(tuple(tuple(row) for row in mat))

    # (iii) balance color sums into D_n
    dvec, balance_log = _balance(ColoredDegreeSequence(L, matrices))
    plan.balance_log = balance_log
    plan.vertices_rebalanced = len({v for v, _c, _k in balance_log})

    # (iv) girth-constrained configuration draw
    rng = random.Random(f"{seed}:realize")
    h_graph, attempts = sample_girth_constrained(dvec, 2 * h + 1, rng, max_attempts)
    plan.attempts = attempts

    # (v) marked colorblind conversion
    g = mcb(h_graph, table, beta)

    # (vi) exact count-vector edits
    _edit_to_targets(g, plan)
    return g, plan


def _balance(dvec: ColoredDegreeSequence) -> tuple[ColoredDegreeSequence, list]:
    """Reduce color sums S_c to S~_c = min(S_c, S_cbar) (even on the
    diagonal), greedily removing from vertices with the largest counts."""
    L = dvec.L
    mats = [list(list(row) for row in m) for m in dvec.matrices]
    log = []
    s = [[dvec.color_sum(i, j) for j in range(L)] for i in range(L)]
    for i in range(L):
        for j in range(L):
            target = (s[i][i] // 2) * 2 if i == j else min(s[i][j], s[j][i])
            excess = s[i][j] - target
            if excess <= 0:
                continue
            order = sorted(range(dvec.n), key=lambda v: (-mats[v][i][j], v))
            for v in order:
                if excess == 0:
                    break
                take = min(mats[v][i][j], excess)
                if take:
                    mats[v][i][j] -= take
                    log.append((v, (i, j), take))
                    excess -= take
    out = ColoredDegreeSequence(L, [tuple(tuple(r) for r in m) for m in mats])
    ok, why = out.validate()
    if not ok:
        raise AssertionError(f"balancing failed to reach D_n: {why}")
    return out, log


def _edit_to_targets(g: MarkedGraph, plan: RealizationPlan) -> None:
    """Post-hoc edge/mark edits to the exact target count vectors: additions
    touch vertices at most once, removals take lexicographically smallest
    edges, mark changes reassign over-represented marks to under-represented
    ones."""
    target_m = plan.target_m
    # removals first (frees the budget), lexicographically smallest per pair
    current = _m_counter(g)
    for key in sorted(set(current) | set(target_m)):
        have = current.get(key, 0)
        want = target_m.get(key, 0)
        if have > want:
            doomed = sorted(
                (u, v) for (u, v), (a, b) in g.edges.items()
                if (min(a, b), max(a, b)) == key
            )[: have - want]
            for u, v in doomed:
                g.remove_edge(u, v)
                plan.edges_removed.append([u, v])
    # additions: each new edge touches vertices untouched by other additions
    touched: set[int] = set()
    current = _m_counter(g)
    for key in sorted(set(target_m) | set(current)):
        want = target_m.get(key, 0)
        have = current.get(key, 0)
        if want <= have:
            continue
        x, y = key
        missing = want - have
        u = 0
        while missing:
            while u < g.n and u in touched:
                u += 1
            if u >= g.n - 1:
                raise ResourceLimitError("ran out of vertices for edge additions")
            v = u + 1
            while v < g.n and (v in touched or v in g.adj[u]):
                v += 1
            if v >= g.n:
                u += 1
                continue
            g.add_edge(u, v, y, x)  # mark y towards v, x towards u
            touched.update((u, v))
            plan.edges_added.append([u, v])
            missing -= 1
    # vertex marks: move surplus marks to deficits, smallest indices first
    want_u = Counter(plan.target_u)
    have_u = Counter(g.vertex_marks)
    surplus = {t: have_u[t] - want_u[t] for t in set(have_u) | set(want_u) if have_u[t] > want_u[t]}
    deficit = Counter({t: want_u[t] - have_u[t] for t in set(have_u) | set(want_u) if want_u[t] > have_u[t]})
    for v in range(g.n):
        if not deficit:
            break
        mark = g.vertex_marks[v]
        if surplus.get(mark, 0) > 0:
            new_mark = min(deficit)
            g.vertex_marks[v] = new_mark
            plan.marks_changed.append([v, mark, new_mark])
            surplus[mark] -= 1
            deficit[new_mark] -= 1
            if not deficit[new_mark]:
                del deficit[new_mark]
    final = mark_counts(g)
    if dict(final.m) != {k: v for k, v in plan.target_m.items() if v} or dict(
        Counter(g.vertex_marks)
    ) != {k: v for k, v in plan.target_u.items() if v}:
        raise AssertionError("count-vector edit pass missed its target")


def _m_counter(g: MarkedGraph) -> Counter:
    c: Counter = Counter()
    for (_u, _v), (a, b) in g.edges.items():
        c[(min(a, b), max(a, b))] += 1
    return c
