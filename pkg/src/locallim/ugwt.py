"""Monte-Carlo samplers for the tree processes, with per-sample weights and a
statistical unimodularity (involution-invariance) test.

Sampling is depth-capped and reproducible: every vertex draws from its own
`random.Random` stream keyed by (seed, root-to-vertex child-index path), so a
given seed yields a byte-identical tree independent of evaluation order.
The root ball comes from the depth-h law; each round extends the frontier one
layer through the size-biased kernels, grafting the sampled extension onto the
labeled tree.
"""

from __future__ import annotations

import math
import random
import weakref
from collections import deque
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .dists import NeighborhoodDist, SizeBiasedKernel
from .trees import CanonicalTree, HalfTree, MarkSpace, leaf, truncate


def _vertex_rng(seed, path: str) -> random.Random:
    return random.Random(f"{seed}:{path}")


class SampledTree:
    """A labeled rooted marked tree truncated at `depth_cap`.

    Vertices are BFS-indexed from the root (index 0); `mark_up[v]` is the mark
    towards the parent, `mark_down[v]` towards `v`.  `log_gamma[v]` records the
    log-probability of the generation step that produced v's extension (the
    root entry is the log-mass of the sampled depth-h ball); entries are None
    for frontier vertices that were never extended.
    """

    __slots__ = (
        "h",
        "depth_cap",
        "seed",
        "parent",
        "depth",
        "vmark",
        "mark_up",
        "mark_down",
        "children",
        "path",
        "log_gamma",
    )

    def __init__(self, h: int, depth_cap: int, seed):
        self.h = h
        self.depth_cap = depth_cap
        self.seed = seed
        self.parent: list[int] = []
        self.depth: list[int] = []
        self.vmark: list[int] = []
        self.mark_up: list[int] = []
        self.mark_down: list[int] = []
        self.children: list[list[int]] = []
        self.path: list[str] = []
        self.log_gamma: list[float | None] = []

    # -- construction helpers ------------------------------------------------

    def _new_vertex(self, parent: int, vmark: int, mark_up: int, mark_down: int) -> int:
        v = len(self.parent)
        self.parent.append(parent)
        self.vmark.append(vmark)
        self.mark_up.append(mark_up)
        self.mark_down.append(mark_down)
        self.children.append([])
        self.log_gamma.append(None)
        if parent < 0:
            self.depth.append(0)
            self.path.append("o")
        else:
            self.depth.append(self.depth[parent] + 1)
            self.path.append(f"{self.path[parent]}/{len(self.children[parent])}")
            self.children[parent].append(v)
        return v

    # -- views ----------------------------------------------------------------

    def n_vertices(self) -> int:
        return len(self.parent)

    def subtree_degree(self, v: int) -> int:
        return len(self.children[v]) + (1 if self.parent[v] >= 0 else 0)

    def branch(self, v: int, d: int) -> CanonicalTree:
        """Canonical class of v's subtree truncated at relative depth d."""
        if d == 0 or not self.children[v]:
            return leaf(self.vmark[v])
        kids = [
            (self.mark_up[c], self.mark_down[c], self.branch(c, d - 1))
            for c in self.children[v]
        ]
        return CanonicalTree(self.vmark[v], kids)

    def upward(self, w: int, exclude: int, d: int) -> CanonicalTree:
        """Class of w's component after deleting the edge to `exclude`,
        rooted at w, truncated at depth d."""
        if d == 0:
            return leaf(self.vmark[w])
        kids = [
            (self.mark_up[c], self.mark_down[c], self.branch(c, d - 1))
            for c in self.children[w]
            if c != exclude
        ]
        p = self.parent[w]
        if p >= 0:
            kids.append((self.mark_down[w], self.mark_up[w], self.upward(p, w, d - 1)))
        return CanonicalTree(self.vmark[w], kids)

    def canonical(self, k: int | None = None) -> CanonicalTree:
        """[T, o]_k (the full materialized tree when k is omitted)."""
        return self.branch(0, self.depth_cap if k is None else k)

    def vertices_at_depth(self, k: int) -> list[int]:
        return [v for v in range(self.n_vertices()) if self.depth[v] == k]

    def to_json(self, marks: MarkSpace) -> dict:
        return {
            "seed": self.seed,
            "h": self.h,
            "depth_cap": self.depth_cap,
            "log_weight": sum(g for g in self.log_gamma if g is not None),
            "vertices": [
                {
                    "parent": self.parent[v],
                    "mark": marks.vertex_labels[self.vmark[v]],
                    "up": None if self.parent[v] < 0 else marks.edge_labels[self.mark_up[v]],
                    "down": None if self.parent[v] < 0 else marks.edge_labels[self.mark_down[v]],
                }
                for v in range(self.n_vertices())
            ],
        }


class UgwtSampler:
    """Reusable sampler for the depth-h tree process grown from P; kernels and
    the root-ball table are computed once and shared across draws."""

    def __init__(self, dist: NeighborhoodDist):
        ok, pair = dist.is_admissible()
        if not ok:
            raise ValueError(f"sampler needs an admissible law; e_P asymmetric at {pair}")
        dist._require_trees()
        self.dist = dist
        self.h = dist.h
        atoms = dist.items_sorted()
        self._ball_atoms = [cls for cls, _p in atoms]
        cum = []
        acc = 0.0
        for _cls, p in atoms:
            acc += float(p)
            cum.append(acc)
        self._ball_cum = cum
        self._kernels: dict[tuple[HalfTree, HalfTree], SizeBiasedKernel] = {}

    def kernel(self, t: HalfTree, t_prime: HalfTree) -> SizeBiasedKernel:
        key = (t, t_prime)
        k = self._kernels.get(key)
        if k is None:
            k = self._kernels[key] = self.dist.size_biased(t, t_prime)
        return k

    def sample(self, depth_cap: int, seed) -> SampledTree:
        if depth_cap < self.h:
            raise ValueError("depth_cap must be at least h")
        tree = SampledTree(self.h, depth_cap, seed)
        rng = _vertex_rng(seed, "o")
        u = rng.random() * self._ball_cum[-1]
        ball = self._ball_atoms[bisect_left(self._ball_cum, u)]
        root = tree._new_vertex(-1, ball.root_mark, -1, -1)
        tree.log_gamma[root] = math.log(float(self.dist.mass(ball)))
        _materialize(tree, root, ball)
        h = self.h
        for k in range(1, depth_cap - h + 1):
            for v in tree.vertices_at_depth(k):
                w = tree.parent[v]
                t = HalfTree(tree.mark_down[v], tree.branch(v, h - 1))
                t_prime = HalfTree(tree.mark_up[v], tree.upward(w, v, h - 1))
                kern = self.kernel(t, t_prime)
                extension = kern.sample(_vertex_rng(seed, tree.path[v]))
                _graft(tree, v, extension.subtree, h)
                tree.log_gamma[v] = math.log(float(kern.mass(extension)))
        return tree


def _materialize(tree: SampledTree, at: int, node: CanonicalTree) -> None:
    queue = deque([(at, node)])
    while queue:
        v, cn = queue.popleft()
        for mr, mc, sub in cn.children:
            w = tree._new_vertex(v, sub.root_mark, mr, mc)
            queue.append((w, sub))


def _graft(tree: SampledTree, u: int, cnode: CanonicalTree, remaining: int) -> None:
    """Extend u's labeled subtree (complete to depth remaining-1) so that it
    realizes `cnode` to depth `remaining`.  Within truncation-equivalence
    groups the pairing is arbitrary; the resulting class is the same either
    way."""
    if remaining <= 0 or not cnode.children:
        return
    if remaining == 1:
        for mr, mc, sub in cnode.children:
            tree._new_vertex(u, sub.root_mark, mr, mc)
        return
    buckets: dict[tuple[int, int, bytes], list[int]] = {}
    for c in tree.children[u]:
        key = (tree.mark_up[c], tree.mark_down[c], tree.branch(c, remaining - 2).key)
        buckets.setdefault(key, []).append(c)
    for mr, mc, sub in cnode.children:
        key = (mr, mc, truncate(sub, remaining - 2).key)
        target = buckets[key].pop()
        _graft(tree, target, sub, remaining - 1)


_SAMPLER_CACHE: "weakref.WeakKeyDictionary[NeighborhoodDist, UgwtSampler]" = weakref.WeakKeyDictionary()


def sampler_for(dist: NeighborhoodDist) -> UgwtSampler:
    s = _SAMPLER_CACHE.get(dist)
    if s is None:
        s = _SAMPLER_CACHE[dist] = UgwtSampler(dist)
    return s


def sample_ugwt(dist: NeighborhoodDist, depth_cap: int, seed) -> SampledTree:
    return sampler_for(dist).sample(depth_cap, seed)


def log_weight(sample: SampledTree, dist: NeighborhoodDist, k: int | None = None) -> float:
    """Log labeled-generation weight of the sample's depth-k prefix under the
    given law: the root-ball mass plus the kernel masses of the extension
    steps at depths 1..max(k-h, 0).  -inf when a step is impossible under the
    law."""
    if k is None:
        k = sample.depth_cap
    if k > sample.depth_cap:
        raise ValueError("k exceeds the sampled depth")
    h = dist.h
    ball = sample.canonical(h)
    p0 = dist.mass(ball)
    if p0 == 0:
        return float("-inf")
    total = math.log(float(p0))
    sampler = sampler_for(dist)
    cutoff = max(k - h, 0)
    for v in range(sample.n_vertices()):
        d = sample.depth[v]
        if d == 0 or d > cutoff:
            continue
        w = sample.parent[v]
        t = HalfTree(sample.mark_down[v], sample.branch(v, h - 1))
        t_prime = HalfTree(sample.mark_up[v], sample.upward(w, v, h - 1))
        extension = HalfTree(sample.mark_down[v], sample.branch(v, h))
        mass = sampler.kernel(t, t_prime).mass(extension)
        if mass == 0:
            return float("-inf")
        total += math.log(float(mass))
    return total


def degree_truncate(sample: SampledTree, min_removed_degree: int) -> SampledTree:
    """Remove all edges at vertices whose degree (in the materialized sample)
    is at least `min_removed_degree`, and keep the root component.

    The two one-apart threshold conventions in circulation are both reachable
    by adjusting the parameter.  Surviving vertices keep their generation
    records.
    """
    n = sample.n_vertices()
    heavy = [sample.subtree_degree(v) >= min_removed_degree for v in range(n)]
    out = SampledTree(sample.h, sample.depth_cap, sample.seed)

    def keep_edge(child: int) -> bool:
        return not heavy[child] and not heavy[sample.parent[child]]

    mapping = {0: out._new_vertex(-1, sample.vmark[0], -1, -1)}
    out.log_gamma[0] = sample.log_gamma[0]
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for c in sample.children[v]:
            if keep_edge(c):
                w = out._new_vertex(mapping[v], sample.vmark[c], sample.mark_up[c], sample.mark_down[c])
                out.log_gamma[w] = sample.log_gamma[c]
                mapping[c] = w
                queue.append(c)
    return out


@dataclass
class InvolutionReport:
    """Two-sided mass-transport estimate with normal-approximation CIs."""

    mean_out: float
    mean_in: float
    half_width_out: float
    half_width_in: float
    diff: float
    diff_half_width: float
    n_samples: int
    z: float

    @property
    def consistent(self) -> bool:
        return abs(self.diff) <= self.diff_half_width

    def __str__(self):
        verdict = "consistent" if self.consistent else "REJECTED"
        return (
            f"E[sum f(T,o,v)] = {self.mean_out:.5f} +- {self.half_width_out:.5f}, "
            f"E[sum f(T,v,o)] = {self.mean_in:.5f} +- {self.half_width_in:.5f}, "
            f"|diff| = {abs(self.diff):.5f} vs {self.diff_half_width:.5f} "
            f"({self.z:.0f} sigma): {verdict}"
        )


def involution_check(
    dist: NeighborhoodDist,
    f: Callable[[SampledTree, int, int], float],
    n_samples: int,
    seed,
    radius: int = 1,
    z: float = 3.0,
    sampler: Callable[[int, object], SampledTree] | None = None,
) -> InvolutionReport:
    """Estimate both sides of the involution-invariance identity for f summed
    over edges at the root, using n_samples draws at depth max(h, radius+1).

    `f(tree, a, b)` must only look at the sample within `radius` of its two
    roots.  A custom `sampler(depth_cap, seed)` can be substituted (e.g. a
    deliberately biased one, to calibrate rejection power).
    """
    depth_cap = max(dist.h, radius + 1)
    if sampler is None:
        shared = sampler_for(dist)
        sampler = shared.sample
    sum_out = sum_in = 0.0
    sq_out = sq_in = 0.0
    sum_diff = sq_diff = 0.0
    for i in range(n_samples):
        tree = sampler(depth_cap, (seed, i))
        a = b = 0.0
        for v in tree.children[0]:
            a += f(tree, 0, v)
            b += f(tree, v, 0)
        sum_out += a
        sum_in += b
        sq_out += a * a
        sq_in += b * b
        sum_diff += a - b
        sq_diff += (a - b) * (a - b)
    n = n_samples
    mean_out = sum_out / n
    mean_in = sum_in / n
    var_out = max(sq_out / n - mean_out * mean_out, 0.0)
    var_in = max(sq_in / n - mean_in * mean_in, 0.0)
    mean_diff = sum_diff / n
    var_diff = max(sq_diff / n - mean_diff * mean_diff, 0.0)
    return InvolutionReport(
        mean_out=mean_out,
        mean_in=mean_in,
        half_width_out=z * math.sqrt(var_out / n),
        half_width_in=z * math.sqrt(var_in / n),
        diff=mean_diff,
        diff_half_width=z * math.sqrt(var_diff / n) if var_diff else 0.0,
        n_samples=n,
        z=z,
    )


# ---------------------------------------------------------------------------
# Colored unimodular Galton-Watson trees


Matrix = tuple[tuple[int, ...], ...]


def _matrix_add_unit(m: Matrix, i: int, j: int) -> Matrix:
    rows = [list(r) for r in m]
    rows[i][j] += 1
    return tuple(tuple(r) for r in rows)


class ColoredDegreeLaw:
    """Finitely supported law on L x L nonnegative-integer matrices with
    balanced color expectations E[D_c] = E[D_cbar]."""

    def __init__(self, L: int, probs: Mapping[Matrix, object], tol: float = 1e-9):
        self.L = L
        self.probs: dict[Matrix, Fraction | float] = {}
        total = 0
        for m, p in probs.items():
            m = tuple(tuple(int(x) for x in row) for row in m)
            if len(m) != L or any(len(r) != L for r in m):
                raise ValueError("matrices must be L x L")
            if p == 0:
                continue
            self.probs[m] = self.probs.get(m, 0) + p
            total += p
        exact = all(isinstance(p, (int, Fraction)) for p in self.probs.values())
        if exact:
            if Fraction(total) != 1:
                raise ValueError(f"masses sum to {total}, not 1")
        elif abs(float(total) - 1.0) > tol:
            raise ValueError(f"masses sum to {total}, not 1")
        self._exact = exact
        for i in range(L):
            for j in range(L):
                a = self.expected_degree(i, j)
                b = self.expected_degree(j, i)
                bad = a != b if exact else abs(float(a) - float(b)) > tol
                if bad:
                    raise ValueError(
                        f"unbalanced law: E[D_({i},{j})] = {a} but E[D_({j},{i})] = {b}"
                    )

    def items_sorted(self):
        return sorted(self.probs.items())

    def expected_degree(self, i: int, j: int):
        return sum(p * m[i][j] for m, p in self.probs.items())

    def offspring_law(self, i: int, j: int) -> dict[Matrix, object]:
        """Offspring-matrix law for a child reached along a color-(i,j) edge:
        mass (M[j][i] + 1) R(M + unit(j,i)) / E[D_(i,j)]; the unbalanced-free
        degenerate case is a point mass at the zero matrix."""
        e = self.expected_degree(i, j)
        if e == 0:
            zero = tuple(tuple(0 for _ in range(self.L)) for _ in range(self.L))
            return {zero: Fraction(1) if self._exact else 1.0}
        out: dict[Matrix, object] = {}
        for d, p in self.probs.items():
            if d[j][i] >= 1:
                rows = [list(r) for r in d]
                rows[j][i] -= 1
                m = tuple(tuple(r) for r in rows)
                out[m] = out.get(m, 0) + d[j][i] * p / e
        return out


@dataclass
class ColoredTreeSample:
    """Rooted directed colored tree truncated at depth_cap.  `ctype[v]` is the
    color (i, j) of the edge directed parent -> v; `degree_matrix[v]` is the
    full colored degree (offspring matrix plus the parent edge's unit)."""

    L: int
    depth_cap: int
    seed: object
    parent: list[int] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)
    ctype: list[tuple[int, int] | None] = field(default_factory=list)
    degree_matrix: list[Matrix] = field(default_factory=list)
    children: list[list[int]] = field(default_factory=list)

    def _new_vertex(self, parent: int, ctype, dmat: Matrix) -> int:
        v = len(self.parent)
        self.parent.append(parent)
        self.depth.append(0 if parent < 0 else self.depth[parent] + 1)
        self.ctype.append(ctype)
        self.degree_matrix.append(dmat)
        self.children.append([])
        if parent >= 0:
            self.children[parent].append(v)
        return v

    def n_vertices(self) -> int:
        return len(self.parent)


def sample_cugwt(law: ColoredDegreeLaw, depth_cap: int, seed) -> ColoredTreeSample:
    """Root degree matrix from the law; each type-(i,j) child's offspring
    matrix from the size-biased offspring law, recursively to depth_cap."""
    L = law.L
    tree = ColoredTreeSample(L, depth_cap, seed)

    def draw(table: Sequence[tuple[Matrix, object]], rng) -> Matrix:
        u = rng.random()
        acc = 0.0
        for m, p in table:
            acc += float(p)
            if u <= acc:
                return m
        return table[-1][0]

    offspring_tables: dict[tuple[int, int], list[tuple[Matrix, object]]] = {}

    def offspring(i: int, j: int):
        key = (i, j)
        if key not in offspring_tables:
            offspring_tables[key] = sorted(law.offspring_law(i, j).items())
        return offspring_tables[key]

    root_rng = _vertex_rng(seed, "o")
    root_d = draw(law.items_sorted(), root_rng)
    root = tree._new_vertex(-1, None, root_d)
    queue = deque([(root, root_d)])
    while queue:
        v, m = queue.popleft()
        if tree.depth[v] >= depth_cap:
            continue
        for i in range(L):
            for j in range(L):
                for _ in range(m[i][j]):
                    idx = len(tree.children[v])
                    child_rng = _vertex_rng(seed, f"{v}.{idx}")
                    child_m = draw(offspring(i, j), child_rng)
                    d_full = _matrix_add_unit(child_m, j, i)
                    w = tree._new_vertex(v, (i, j), d_full)
                    queue.append((w, child_m))
    return tree
