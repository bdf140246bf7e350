"""Distances between neighborhood laws and marked-graph ensemble counts.

The local-metric surrogate `lp_upper` replaces the exact Levy-Prokhorov
distance everywhere: min over depths of max(1/(1+h), TV of the depth-h
marginals), an upper bound via the maximal coupling at that depth.  Ensemble
sizes come in an exact integer form and a Stirling form whose o(n) term is
dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .graphs import MarkedGraph, empirical_dist, mark_counts
from .exhaustive import all_marked_graphs


def _prob_map(dist) -> Mapping:
    return dist.probs if hasattr(dist, "probs") else dist


def tv_distance(mu, nu):
    """(1/2) sum |mu - nu| over the union of supports; exact when both sides
    carry Fractions."""
    a, b = _prob_map(mu), _prob_map(nu)
    exact = all(isinstance(p, (Fraction, int)) for p in a.values()) and all(
        isinstance(p, (Fraction, int)) for p in b.values()
    )
    zero = Fraction(0) if exact else 0.0
    total = zero
    for key in set(a) | set(b):
        pa = a.get(key, zero)
        pb = b.get(key, zero)
        diff = pa - pb if exact else float(pa) - float(pb)
        total += abs(diff)
    return total / 2


@dataclass
class DistanceReport:
    tv: object
    lp_upper: float
    profile: dict[int, object]  # depth -> TV of the depth-h marginals

    def __str__(self):
        prof = ", ".join(f"h={h}: {float(tv):.4f}" for h, tv in sorted(self.profile.items()))
        return f"tv={float(self.tv):.4f} lp_upper<={self.lp_upper:.4f} ({prof})"


def lp_upper(mu_marginals: Sequence, nu_marginals: Sequence) -> DistanceReport:
    """Coupling upper bound on the local Levy-Prokhorov distance from
    depth-indexed marginal families (index = depth, 0..H_max).

    Refining with deeper marginals never increases the bound.
    """
    if len(mu_marginals) != len(nu_marginals) or not mu_marginals:
        raise ValueError("need matching nonempty depth-indexed marginal families")
    profile = {}
    best = 1.0
    for h in range(len(mu_marginals)):
        tv_h = tv_distance(mu_marginals[h], nu_marginals[h])
        profile[h] = tv_h
        best = min(best, max(1.0 / (1.0 + h), float(tv_h)))
    deepest = profile[len(mu_marginals) - 1]
    return DistanceReport(tv=deepest, lp_upper=best, profile=profile)


# ---------------------------------------------------------------------------
# Ensemble counts


def exact_count(n: int, m: Mapping[tuple[int, int], int], u: Mapping[int, int]) -> int:
    """|G^(n)_{m,u}| as an exact integer; 0 when the vectors are infeasible.

    The count is vertex-mark multinomial x edge-slot multinomial x 2 to the
    number of asymmetrically marked edges.
    """
    m = {(min(x, y), max(x, y)): c for (x, y), c in m.items() if c}
    u = {t: c for t, c in u.items() if c}
    if sum(u.values()) != n:
        return 0
    slots = n * (n - 1) // 2
    m_total = sum(m.values())
    if m_total > slots:
        return 0
    count = math.factorial(n)
    for c in u.values():
        count //= math.factorial(c)
    edge_ways = math.factorial(slots)
    for c in m.values():
        edge_ways //= math.factorial(c)
    edge_ways //= math.factorial(slots - m_total)
    count *= edge_ways
    count *= 2 ** sum(c for (x, y), c in m.items() if x != y)
    return count


def exact_log_count(n: int, m: Mapping[tuple[int, int], int], u: Mapping[int, int]) -> float:
    c = exact_count(n, m, u)
    return math.log(c) if c else float("-inf")


def s_entropy_term(d: float) -> float:
    """s(d) = d/2 - (d/2) log d, with s(0) = 0; always at most 1/2."""
    d = float(d)
    if d == 0:
        return 0.0
    return d / 2 - (d / 2) * math.log(d)


def shannon(q: Mapping[object, object]) -> float:
    h = 0.0
    for _k, p in sorted(q.items(), key=lambda kv: repr(kv[0])):
        p = float(p)
        if p > 0:
            h -= p * math.log(p)
    return h


def stirling_log_count(
    n: int,
    m: Mapping[tuple[int, int], int],
    u: Mapping[int, int],
    d: Mapping[tuple[int, int], object],
    q: Mapping[object, object],
) -> float:
    """||m||_1 log n + n H(Q) + n sum_{x,x'} s(d_{x,x'}), the o(n) term
    dropped.  `u` rides along for signature symmetry with the exact form."""
    del u
    m_norm = {(min(x, y), max(x, y)): c for (x, y), c in m.items() if c}
    m_total = sum(m_norm.values())
    # symmetric completion: the s(.) sum runs over ordered mark pairs
    dd: dict[tuple[int, int], object] = {}
    for (x, y), val in d.items():
        dd[(x, y)] = val
        dd.setdefault((y, x), val)
    total = m_total * math.log(n) + n * shannon(q)
    for val in dd.values():
        total += n * s_entropy_term(val)
    return total


# ---------------------------------------------------------------------------
# Brute-force neighborhood-ball counting


def marginal_family(g: MarkedGraph, h_max: int) -> list[Mapping]:
    return [empirical_dist(g, h).probs for h in range(h_max + 1)]


def brute_force_ball_count(
    n: int,
    m: Mapping[tuple[int, int], int],
    u: Mapping[int, int],
    target_marginals: Sequence[Mapping],
    epsilon: float,
    n_edge_marks: int,
    n_vertex_marks: int,
    hard_cap: int = 5,
) -> tuple[int, float]:
    """Count graphs in G^(n)_{m,u} whose local-metric surrogate distance to the
    target marginal family is below epsilon, by exhaustive enumeration.

    Returns (count, (log count - ||m||_1 log n) / n); the statistic is -inf at
    count zero.
    """
    if n > hard_cap:
        raise ValueError(f"n = {n} exceeds the enumeration cap {hard_cap}")
    m_norm = {(min(x, y), max(x, y)): c for (x, y), c in m.items() if c}
    u_norm = {t: c for t, c in u.items() if c}
    h_max = len(target_marginals) - 1
    count = 0
    for g in all_marked_graphs(n, n_edge_marks, n_vertex_marks):
        mc = mark_count_key(g)
        if mc != (tuple(sorted(m_norm.items())), tuple(sorted(u_norm.items()))):
            continue
        report = lp_upper(marginal_family(g, h_max), target_marginals)
        if report.lp_upper < epsilon:
            count += 1
    m_total = sum(m_norm.values())
    stat = (math.log(count) - m_total * math.log(n)) / n if count else float("-inf")
    return count, stat


def mark_count_key(g: MarkedGraph):
    vectors = mark_counts(g)
    return (tuple(sorted(vectors.m.items())), tuple(sorted(vectors.u.items())))
