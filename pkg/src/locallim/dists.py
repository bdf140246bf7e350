"""Finitely supported laws on depth-h canonical trees.

`NeighborhoodDist` carries the support map, the expected type-pair counts
e_P(t,t'), admissibility, the normalized type-pair law pi_P, Shannon entropy,
the size-biased extension kernels, the entropy functional J_h, and the exact
one-step depth extension (the depth-(h+1) marginal of the tree process grown
from P).

Probabilities are exact `Fraction`s in rational mode and floats otherwise;
every float reduction iterates the support in canonical key order, so repeated
evaluations are bit-identical regardless of construction order.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Iterable, Mapping

from .trees import (
    CanonicalTree,
    HalfTree,
    MarkSpace,
    eh_table,
    leaf,
    oplus,
    tree_from_json,
    tree_to_json,
    truncate,
)

FLOAT_MASS_TOL = 1e-12
FLOAT_ADMISSIBILITY_TOL = 1e-9


class DegenerateDistributionError(ValueError):
    """Raised where a positive mean root degree is required."""


class SupportExplosionError(RuntimeError):
    """Exact extension support grew past the configured cap."""


@lru_cache(maxsize=1 << 16)
def _log_factorial(n: int) -> float:
    # exact integer factorial logs for the rational path; small n only
    return sum(math.log(j) for j in range(2, n + 1))


def _log_fraction(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


class NeighborhoodDist:
    """Probability measure P on canonical rooted classes of depth <= h.

    Supports may also contain cyclic `CanonicalGraph` classes (as produced by
    `empirical_dist` on a non-tree-like graph); the tree-algebra operations
    (e_P, kernels, J_h, extension) require an all-tree support and raise
    otherwise.  Instances are immutable; derived tables are cached.
    """

    def __init__(self, h: int, probs: Mapping, mode: str = "rational"):
        if mode not in ("rational", "float"):
            raise ValueError("mode must be 'rational' or 'float'")
        if h < 0:
            raise ValueError("h must be nonnegative")
        cleaned = {}
        total = Fraction(0) if mode == "rational" else 0.0
        for cls, p in probs.items():
            if mode == "rational":
                p = Fraction(p)
                if p < 0:
                    raise ValueError("negative mass")
            else:
                p = float(p)
                if p < 0:
                    raise ValueError("negative mass")
            if p == 0:
                continue
            depth = getattr(cls, "depth", None)
            if depth is not None and depth > h:
                raise ValueError(f"support element of depth {depth} in a depth-{h} law")
            cleaned[cls] = p
            total += p
        if mode == "rational":
            if total != 1:
                raise ValueError(f"masses sum to {total}, not 1")
        elif abs(total - 1.0) > FLOAT_MASS_TOL:
            raise ValueError(f"masses sum to {total!r}, not 1")
        self.h = h
        self.probs = cleaned
        self.mode = mode
        self._e_table = None
        self._sorted = None

    # -- plumbing ----------------------------------------------------------

    def __len__(self):
        return len(self.probs)

    def __contains__(self, cls):
        return cls in self.probs

    def mass(self, cls):
        zero = Fraction(0) if self.mode == "rational" else 0.0
        return self.probs.get(cls, zero)

    def items_sorted(self):
        if self._sorted is None:
            self._sorted = sorted(self.probs.items(), key=lambda kv: kv[0].key)
        return self._sorted

    def support_is_trees(self) -> bool:
        return all(isinstance(cls, CanonicalTree) for cls in self.probs)

    def _require_trees(self):
        if not self.support_is_trees():
            raise ValueError("operation requires an all-tree support")

    def as_float(self) -> "NeighborhoodDist":
        if self.mode == "float":
            return self
        total = 0.0
        out = {}
        for cls, p in self.items_sorted():
            out[cls] = float(p)
            total += float(p)
        # renormalize the last atom's rounding slack away
        return NeighborhoodDist(self.h, {c: p / total for c, p in out.items()}, mode="float")

    # -- first moments ------------------------------------------------------

    def mean_degree(self):
        self._require_trees()
        d = Fraction(0) if self.mode == "rational" else 0.0
        for cls, p in self.items_sorted():
            d += p * cls.degree()
        return d

    def mean_marked_degree(self) -> dict[tuple[int, int], object]:
        """E_P[deg^{x,x'}(o)] for every ordered edge-mark pair present."""
        self._require_trees()
        out: dict[tuple[int, int], object] = {}
        for cls, p in self.items_sorted():
            for mr, mc, _sub in cls.children:
                out[(mr, mc)] = out.get((mr, mc), 0) + p
        return out

    def root_mark_law(self) -> dict[int, object]:
        out: dict[int, object] = {}
        for cls, p in self.items_sorted():
            out[cls.root_mark] = out.get(cls.root_mark, 0) + p
        return out

    # -- type-pair expectations ---------------------------------------------

    def e_table(self) -> dict[tuple[HalfTree, HalfTree], object]:
        """e_P(t, t') for every pair with a positive expectation."""
        if self._e_table is None:
            self._require_trees()
            table: dict[tuple[HalfTree, HalfTree], object] = {}
            for cls, p in self.items_sorted():
                for pair, count in eh_table(cls, self.h).items():
                    table[pair] = table.get(pair, 0) + p * count
            self._e_table = table
        return self._e_table

    def e_p(self, t: HalfTree, t_prime: HalfTree):
        zero = Fraction(0) if self.mode == "rational" else 0.0
        return self.e_table().get((t, t_prime), zero)

    def is_admissible(self) -> tuple[bool, tuple[HalfTree, HalfTree] | None]:
        """Admissibility: e_P(t,t') = e_P(t',t) for all pairs (finite support
        makes the mean degree finite for free).  Returns the first violating
        pair in canonical order, if any."""
        table = self.e_table()
        tol = 0 if self.mode == "rational" else FLOAT_ADMISSIBILITY_TOL
        keys = sorted(table, key=lambda pr: (pr[0].sort_key(), pr[1].sort_key()))
        for t, t_prime in keys:
            a = table[(t, t_prime)]
            b = table.get((t_prime, t), 0)
            if abs(a - b) > tol:
                return False, (t, t_prime)
        return True, None

    def is_strongly_admissible(self) -> bool:
        # finite support: H(P) and E[deg log deg] are automatically finite,
        # so strong admissibility reduces to admissibility
        return self.is_admissible()[0]

    def pi_table(self) -> dict[tuple[HalfTree, HalfTree], object]:
        """pi_P(t,t') = e_P(t,t') / d; a probability table when d > 0."""
        d = self.mean_degree()
        if d == 0:
            raise DegenerateDistributionError("pi_P needs a positive mean degree")
        return {pair: e / d for pair, e in self.e_table().items()}

    # -- entropies -----------------------------------------------------------

    def shannon_entropy(self) -> float:
        """H(P) in nats, with 0 log 0 = 0."""
        return _entropy_of(self.items_sorted())

    def j_functional(self) -> float:
        """-s(d) + H(P) - (d/2) H(pi_P) - sum E_P[log E_h(t,t')!]."""
        ok, pair = self.is_admissible()
        if not ok:
            raise ValueError(f"J_h needs an admissible law; e_P asymmetric at {pair}")
        d = self.mean_degree()
        if d == 0:
            raise DegenerateDistributionError("J_h needs a positive mean degree")
        df = float(d)
        s_d = df / 2 - (df / 2) * _log_fraction(d)
        h_p = self.shannon_entropy()
        pi = self.pi_table()
        h_pi = _entropy_of(sorted(pi.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key())))
        log_fact = 0.0
        for cls, p in self.items_sorted():
            for count in eh_table(cls, self.h).values():
                if count > 1:
                    log_fact += float(p) * _log_factorial(count)
        return -s_d + h_p - (df / 2) * h_pi - log_fact

    # -- size-biased kernels --------------------------------------------------

    def size_biased(self, t: HalfTree, t_prime: HalfTree) -> "SizeBiasedKernel":
        """The extension kernel attached to the type pair (t, t').

        Mass on each depth-<=h half-tree u with u_{h-1} = t proportional to
        P(u + t') times the count of (t, t') children there; the degenerate
        e_P(t,t') = 0 case is a point mass at t itself.
        """
        self._require_trees()
        e = self.e_p(t, t_prime)
        if e == 0:
            one = Fraction(1) if self.mode == "rational" else 1.0
            return SizeBiasedKernel(t, t_prime, {t: one}, degenerate=True)
        table: dict[HalfTree, object] = {}
        for cls, p in self.items_sorted():
            counts = eh_table(cls, self.h)
            count = counts.get((t, t_prime), 0)
            if not count:
                continue
            extended = _remove_matching_child(cls, t, t_prime, self.h)
            table[extended] = table.get(extended, 0) + p * count / e
        return SizeBiasedKernel(t, t_prime, table, degenerate=False)

    # -- exact one-step extension ---------------------------------------------

    def extend(self, max_support: int = 200_000) -> "NeighborhoodDist":
        """The exact depth-(h+1) marginal of the tree process grown from P.

        Every support atom's root children are grouped by their full child
        triple; each group extends i.i.d. through its size-biased kernel, and
        multiset multiplicities are aggregated with multinomial weights.
        """
        self._require_trees()
        ok, pair = self.is_admissible()
        if not ok:
            raise ValueError(f"extension needs an admissible law; asymmetric at {pair}")
        kernels: dict[tuple[HalfTree, HalfTree], SizeBiasedKernel] = {}
        out: dict[CanonicalTree, object] = {}
        for cls, p in self.items_sorted():
            groups = []
            idx = 0
            while idx < len(cls.children):
                triple = cls.children[idx]
                mult = 1
                while idx + mult < len(cls.children) and cls.children[idx + mult] == triple:
                    mult += 1
                mr, mc, sub = triple
                t = HalfTree(mc, truncate(sub, self.h - 1))
                t_prime = HalfTree(mr, truncate(cls.drop_child(idx), self.h - 1))
                key = (t, t_prime)
                if key not in kernels:
                    kernels[key] = self.size_biased(t, t_prime)
                groups.append(((mr, mc), kernels[key], mult))
                idx += mult
            for new_children, prob in _extension_combinations(groups):
                extended = CanonicalTree(cls.root_mark, new_children)
                mass = p * prob
                out[extended] = out.get(extended, 0) + mass
                if len(out) > max_support:
                    raise SupportExplosionError(
                        f"extension support exceeded {max_support} classes"
                    )
        return NeighborhoodDist(self.h + 1, out, mode=self.mode)

    # -- I/O -------------------------------------------------------------------

    def to_json(self, marks: MarkSpace) -> dict:
        atoms = []
        for cls, p in self.items_sorted():
            if not isinstance(cls, CanonicalTree):
                raise ValueError("only tree-supported laws serialize to JSON")
            prob = f"{p.numerator}/{p.denominator}" if self.mode == "rational" else p
            atoms.append({"tree": tree_to_json(cls, marks), "prob": prob})
        return {"h": self.h, "atoms": atoms}

    @classmethod
    def from_json(cls, obj: Mapping, marks: MarkSpace) -> "NeighborhoodDist":
        atoms = obj["atoms"]
        rational = all(isinstance(a["prob"], str) for a in atoms)
        probs: dict[CanonicalTree, object] = {}
        for a in atoms:
            tree = tree_from_json(a["tree"], marks)
            p = Fraction(a["prob"]) if rational else float(a["prob"])
            probs[tree] = probs.get(tree, 0) + p
        return cls(int(obj["h"]), probs, mode="rational" if rational else "float")


class SizeBiasedKernel:
    """Extension law over depth-<=h half-trees for one type pair."""

    def __init__(self, t: HalfTree, t_prime: HalfTree, table: Mapping[HalfTree, object], degenerate: bool):
        self.t = t
        self.t_prime = t_prime
        self.table = dict(table)
        self.degenerate = degenerate
        self._atoms = sorted(self.table, key=lambda ht: ht.sort_key())
        self._cum = None

    def total(self):
        return sum(self.table[a] for a in self._atoms)

    def atoms(self):
        return list(self._atoms)

    def mass(self, half: HalfTree):
        return self.table.get(half, 0)

    def sample(self, rng) -> HalfTree:
        if self._cum is None:
            cum = []
            acc = 0.0
            for a in self._atoms:
                acc += float(self.table[a])
                cum.append(acc)
            self._cum = cum
        u = rng.random() * self._cum[-1]
        import bisect

        return self._atoms[bisect.bisect_left(self._cum, u)]


def _entropy_of(items: Iterable[tuple[object, object]]) -> float:
    h = 0.0
    for _key, p in items:
        if p == 0:
            continue
        h -= float(p) * _log_fraction(p)
    return h


def _remove_matching_child(cls: CanonicalTree, t: HalfTree, t_prime: HalfTree, h: int) -> HalfTree:
    """Invert the join: in `cls`, find a child witnessing type (t, t') and cut
    it off, returning the untruncated upward half-tree u with u + t' = cls."""
    for idx, (mr, mc, sub) in enumerate(cls.children):
        if mr != t.mark or mc != t_prime.mark:
            continue
        if truncate(sub, h - 1) != t_prime.subtree:
            continue
        rest = cls.drop_child(idx)
        if truncate(rest, h - 1) == t.subtree:
            return HalfTree(mr, rest)
    raise AssertionError("no witness child; caller guarantees a positive count")


def _extension_combinations(groups):
    """All joint extensions of grouped root children.

    `groups` holds ((mark_to_root, mark_to_child), kernel, multiplicity)
    entries; yields (children tuples, probability) with multinomial weights,
    probabilities exact in rational mode.
    """
    per_group = []
    for (mr, mc), kernel, mult in groups:
        options = []
        atoms = kernel.atoms()
        for chosen in combinations_with_replacement(range(len(atoms)), mult):
            prob = _multinomial(chosen, mult)
            kids = []
            for i in chosen:
                half = atoms[i]
                prob_i = kernel.table[half]
                kids.append((mr, mc, half.subtree))
                prob = prob * prob_i
            options.append((tuple(kids), prob))
        per_group.append(options)
    for combo in product(*per_group):
        children = tuple(kid for kids, _p in combo for kid in kids)
        prob = 1
        for _kids, p in combo:
            prob = prob * p
        yield children, prob


def _multinomial(chosen: tuple[int, ...], mult: int) -> int:
    """Number of orderings of a sorted multiset of kernel picks."""
    out = math.factorial(mult)
    run = 1
    for i in range(1, len(chosen)):
        if chosen[i] == chosen[i - 1]:
            run += 1
        else:
            out //= math.factorial(run)
            run = 1
    out //= math.factorial(run)
    return out


# ---------------------------------------------------------------------------
# module-level operation surface


def e_p(dist: NeighborhoodDist, t: HalfTree, t_prime: HalfTree):
    return dist.e_p(t, t_prime)


def is_admissible(dist: NeighborhoodDist):
    return dist.is_admissible()


def pi_p(dist: NeighborhoodDist):
    return dist.pi_table()


def shannon_entropy(dist: NeighborhoodDist) -> float:
    return dist.shannon_entropy()


def size_biased(dist: NeighborhoodDist, t: HalfTree, t_prime: HalfTree) -> SizeBiasedKernel:
    return dist.size_biased(t, t_prime)


def j_h(dist: NeighborhoodDist) -> float:
    return dist.j_functional()


def extend_exact(dist: NeighborhoodDist, max_support: int = 200_000) -> NeighborhoodDist:
    return dist.extend(max_support=max_support)


def point_mass(tree: CanonicalTree, h: int | None = None, mode: str = "rational") -> NeighborhoodDist:
    one = Fraction(1) if mode == "rational" else 1.0
    return NeighborhoodDist(tree.depth if h is None else h, {tree: one}, mode=mode)


def truncate_dist(dist: NeighborhoodDist, k: int) -> NeighborhoodDist:
    """Depth-k marginal (pushforward under truncation)."""
    out: dict[CanonicalTree, object] = {}
    for cls, p in dist.items_sorted():
        if not isinstance(cls, CanonicalTree):
            raise ValueError("truncation marginal requires a tree support")
        cut = truncate(cls, k)
        out[cut] = out.get(cut, 0) + p
    return NeighborhoodDist(k, out, mode=dist.mode)
