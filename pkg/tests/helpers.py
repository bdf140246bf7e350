"""Brute-force oracles and corpus builders shared across the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from locallim import MarkedGraph, NeighborhoodDist, empirical_dist, girth
from locallim.exhaustive import materialize, relabel
from locallim.trees import CanonicalTree


# ---------------------------------------------------------------------------
# Brute-force rooted isomorphism (permutation search)


def oracle_rooted_isomorphic(g1: MarkedGraph, r1: int, g2: MarkedGraph, r2: int) -> bool:
    """Ground-truth rooted marked isomorphism of two connected marked graphs:
    exhaustive root-fixing backtracking over vertex assignments (no refinement
    shortcuts beyond degree/mark consistency at each step)."""
    if g1.n != g2.n or g1.edge_count() != g2.edge_count():
        return False
    if sorted(g1.degree(v) for v in range(g1.n)) != sorted(g2.degree(v) for v in range(g2.n)):
        return False

    order = _bfs_order(g1, r1)
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def compatible(v: int, w: int) -> bool:
        if g1.vertex_marks[v] != g2.vertex_marks[w] or g1.degree(v) != g2.degree(w):
            return False
        for u, (m_to_u, m_to_v) in g1.adj[v].items():
            if u in mapping:
                img = mapping[u]
                if img not in g2.adj[w]:
                    return False
                if g2.xi(w, img) != m_to_u or g2.xi(img, w) != m_to_v:
                    return False
        return True

    def backtrack(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for w in range(g2.n):
            if w in used or not compatible(v, w):
                continue
            mapping[v] = w
            used.add(w)
            if backtrack(i + 1):
                return True
            del mapping[v]
            used.remove(w)
        return False

    if not compatible(r1, r2):
        return False
    mapping[r1] = r2
    used.add(r2)
    return backtrack(1)


def _bfs_order(g: MarkedGraph, root: int) -> list[int]:
    order = [root]
    seen = {root}
    i = 0
    while i < len(order):
        for w in g.adj[order[i]]:
            if w not in seen:
                seen.add(w)
                order.append(w)
        i += 1
    return order


def tree_as_graph(t: CanonicalTree) -> MarkedGraph:
    vmarks, adj = materialize(t)
    edges = {}
    for v, rows in adj.items():
        for w, m_vw, m_wv in rows:
            if v < w:
                edges[(v, w)] = (m_vw, m_wv)
    return MarkedGraph(len(vmarks), vmarks, edges)


def shuffled_labeled_tree(t: CanonicalTree, rng: random.Random):
    """A labeled representative under a random relabeling, with neighbor lists
    shuffled; root tracked through the permutation."""
    vmarks, adj = materialize(t)
    perm = list(range(len(vmarks)))
    rng.shuffle(perm)
    new_marks, new_adj = relabel(vmarks, adj, perm)
    for rows in new_adj.values():
        rng.shuffle(rows)
    return perm[0], new_marks, new_adj


# ---------------------------------------------------------------------------
# Levy-Prokhorov distance by linear search (tiny supports)


def oracle_lp_distance(mu: dict, nu: dict, dist_fn, grid: int = 4000) -> float:
    """inf eps with mu(A) <= nu(A^eps) + eps and vice versa for all A, over a
    linear epsilon grid; supports must be tiny (subset loop)."""
    support = sorted(set(mu) | set(nu), key=lambda c: c.key)
    masses_mu = [float(mu.get(c, 0)) for c in support]
    masses_nu = [float(nu.get(c, 0)) for c in support]
    dmat = [[dist_fn(a, b) for b in support] for a in support]
    subsets = []
    for bits in range(1, 1 << len(support)):
        subsets.append([i for i in range(len(support)) if bits >> i & 1])

    def ok(eps: float) -> bool:
        for subset in subsets:
            blow = [
                j
                for j in range(len(support))
                if any(dmat[i][j] < eps for i in subset)
            ]
            mu_a = sum(masses_mu[i] for i in subset)
            nu_blow = sum(masses_nu[j] for j in blow)
            if mu_a > nu_blow + eps + 1e-12:
                return False
            nu_a = sum(masses_nu[i] for i in subset)
            mu_blow = sum(masses_mu[j] for j in blow)
            if nu_a > mu_blow + eps + 1e-12:
                return False
        return True

    for k in range(1, grid + 1):
        eps = k / grid
        if ok(eps):
            return eps
    return 1.0


def local_metric(a, b) -> float:
    """d_* between two canonical classes: 1/(1+h*) with h* the deepest equal
    truncation (0 when the classes coincide)."""
    from locallim import truncate

    if a == b:
        return 0.0
    h = 0
    while truncate(a, h) == truncate(b, h):
        h += 1
    return 1.0 / h if h else 1.0


# ---------------------------------------------------------------------------
# Random corpora


def random_treelike_graph(
    n: int,
    h: int,
    n_edge_marks: int,
    n_vertex_marks: int,
    rng: random.Random,
    extra_edges: int = 0,
) -> MarkedGraph:
    """Random marked tree on [n] plus up to `extra_edges` additions that keep
    the girth above 2h+1."""
    vmarks = [rng.randrange(n_vertex_marks) for _ in range(n)]
    edges = {}
    for v in range(1, n):
        u = rng.randrange(v)
        edges[(u, v)] = (rng.randrange(n_edge_marks), rng.randrange(n_edge_marks))
    g = MarkedGraph(n, vmarks, edges)
    for _ in range(extra_edges * 4):
        if extra_edges <= 0:
            break
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or v in g.adj[u]:
            continue
        g.add_edge(u, v, rng.randrange(n_edge_marks), rng.randrange(n_edge_marks))
        if girth(g) <= 2 * h + 1:
            g.remove_edge(u, v)
        else:
            extra_edges -= 1
    return g


def random_bounded_graph(
    n: int,
    h: int,
    max_degree: int,
    rng: random.Random,
    n_edge_marks: int = 1,
    n_vertex_marks: int = 2,
    extra_edges: int = 1,
) -> MarkedGraph:
    """Random h-tree-like graph with a hard degree cap (keeps the depth-(h+2)
    class space small for sampled-law comparisons)."""
    vmarks = [rng.randrange(n_vertex_marks) for _ in range(n)]
    edges = {}
    g = MarkedGraph(n, vmarks, edges)
    for v in range(1, n):
        candidates = [u for u in range(v) if g.degree(u) < max_degree - 1]
        if not candidates:
            candidates = [0]
        u = rng.choice(candidates)
        g.add_edge(u, v, rng.randrange(n_edge_marks), rng.randrange(n_edge_marks))
    for _ in range(extra_edges * 6):
        if extra_edges <= 0:
            break
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or v in g.adj[u]:
            continue
        if g.degree(u) >= max_degree or g.degree(v) >= max_degree:
            continue
        g.add_edge(u, v, rng.randrange(n_edge_marks), rng.randrange(n_edge_marks))
        if girth(g) <= 2 * h + 1:
            g.remove_edge(u, v)
        else:
            extra_edges -= 1
    return g


def bounded_dist(h: int, seed: int, n: int = 20, max_degree: int = 3, **kw) -> NeighborhoodDist:
    rng = random.Random(seed)
    return empirical_dist(random_bounded_graph(n, h, max_degree, rng, **kw), h)


def random_admissible_dist(
    h: int,
    rng: random.Random,
    n: int = 24,
    n_edge_marks: int = 2,
    n_vertex_marks: int = 2,
    extra_edges: int = 2,
) -> NeighborhoodDist:
    """Admissible-by-construction: the depth-h empirical law of a random
    h-tree-like graph (finite graphs are unimodular)."""
    g = random_treelike_graph(n, h, n_edge_marks, n_vertex_marks, rng, extra_edges)
    return empirical_dist(g, h)


def dist_corpus(h: int, count: int, seed: int = 20240817, **kw) -> list[NeighborhoodDist]:
    rng = random.Random(seed)
    return [random_admissible_dist(h, rng, **kw) for _ in range(count)]


def conditional_extension_law(P: NeighborhoodDist, s, s_prime):
    """Independent construction of the one-step extension law for a child
    whose branch is `s` and upward view is `s_prime` (both depth <= h): glue
    the two sides, then extend each of the branch's children through P's
    kernels grouped by child triple."""
    from locallim import oplus, truncate
    from locallim.dists import _extension_combinations
    from locallim.trees import HalfTree

    h = P.h
    whole = oplus(s, s_prime)  # the child's full ball, rooted at the child
    base = s.subtree
    groups = []
    idx = 0
    while idx < len(base.children):
        triple = base.children[idx]
        mult = 1
        while idx + mult < len(base.children) and base.children[idx + mult] == triple:
            mult += 1
        mr, mc, sub = triple
        t = HalfTree(mc, truncate(sub, h - 1))
        pos = whole.children.index(triple)
        t_prime = HalfTree(mr, truncate(whole.drop_child(pos), h - 1))
        groups.append(((mr, mc), P.size_biased(t, t_prime), mult))
        idx += mult
    out = {}
    for children, prob in _extension_combinations(groups):
        extended = HalfTree(s.mark, CanonicalTree(base.root_mark, children))
        out[extended] = out.get(extended, 0) + prob
    return out
