"""Exhaustive enumeration of small marked trees and graphs.

Everything here is desk-scale by design: iso-class enumeration of rooted
marked trees proceeds bottom-up over child-slot multisets (so every class is
produced exactly once), and labeled marked graphs on [n] are enumerated by
brute force over edge-slot states.  These serve as oracles for the canonical
forms, the ensemble counting formulas, and the neighborhood-ball counter.
"""

from __future__ import annotations

from itertools import combinations, combinations_with_replacement, product
from math import comb
from typing import Iterator, Sequence

from .trees import CanonicalTree, HalfTree, leaf


def partitions(total: int, max_part: int | None = None) -> Iterator[tuple[int, ...]]:
    """Nonincreasing integer partitions of `total`."""
    if max_part is None or max_part > total:
        max_part = total
    if total == 0:
        yield ()
        return
    for first in range(max_part, 0, -1):
        for rest in partitions(total - first, first):
            yield (first,) + rest


def trees_by_size(max_vertices: int, n_edge_marks: int, n_vertex_marks: int) -> list[list[CanonicalTree]]:
    """`out[v]` lists every iso-class with exactly v vertices, for v <= max."""
    out: list[list[CanonicalTree]] = [[] for _ in range(max_vertices + 1)]
    out[1] = [leaf(m) for m in range(n_vertex_marks)]
    mark_pairs = list(product(range(n_edge_marks), repeat=2))
    slots: list[list[tuple[int, int, CanonicalTree]]] = [[] for _ in range(max_vertices + 1)]
    slots[1] = [(mr, mc, t) for t in out[1] for mr, mc in mark_pairs]
    for n in range(2, max_vertices + 1):
        for part in partitions(n - 1):
            # part is a nonincreasing tuple of subtree sizes; group equal sizes
            groups: list[tuple[int, int]] = []
            for size in part:
                if groups and groups[-1][0] == size:
                    groups[-1] = (size, groups[-1][1] + 1)
                else:
                    groups.append((size, 1))
            choices_per_group = [
                combinations_with_replacement(slots[size], mult) for size, mult in groups
            ]
            for combo in product(*choices_per_group):
                kids = [slot for chunk in combo for slot in chunk]
                for root_mark in range(n_vertex_marks):
                    out[n].append(CanonicalTree(root_mark, kids))
        slots[n] = [(mr, mc, t) for t in out[n] for mr, mc in mark_pairs]
    return out


def all_trees(max_vertices: int, n_edge_marks: int, n_vertex_marks: int) -> Iterator[CanonicalTree]:
    by_size = trees_by_size(max_vertices, n_edge_marks, n_vertex_marks)
    for n in range(1, max_vertices + 1):
        yield from by_size[n]


def all_half_trees(max_vertices: int, n_edge_marks: int, n_vertex_marks: int) -> Iterator[HalfTree]:
    for t in all_trees(max_vertices, n_edge_marks, n_vertex_marks):
        for m in range(n_edge_marks):
            yield HalfTree(m, t)


def tree_class_counts(max_vertices: int, n_edge_marks: int, n_vertex_marks: int) -> list[int]:
    """Iso-class counts by vertex number, via the multiset recurrence only
    (no tree objects built); independent oracle for the enumerator."""
    n_slot_marks = n_edge_marks * n_edge_marks
    t = [0] * (max_vertices + 1)
    t[1] = n_vertex_marks
    slot = [0] * (max_vertices + 1)
    slot[1] = n_slot_marks * t[1]
    for n in range(2, max_vertices + 1):
        total = 0
        for part in partitions(n - 1):
            groups: list[tuple[int, int]] = []
            for size in part:
                if groups and groups[-1][0] == size:
                    groups[-1] = (size, groups[-1][1] + 1)
                else:
                    groups.append((size, 1))
            ways = 1
            for size, mult in groups:
                ways *= comb(slot[size] + mult - 1, mult)
            total += ways
        t[n] = n_vertex_marks * total
        slot[n] = n_slot_marks * t[n]
    return t


def materialize(t: CanonicalTree) -> tuple[list[int], dict[int, list[tuple[int, int, int]]]]:
    """A labeled representative: vertex marks plus adjacency in the
    `(neighbor, mark_towards_neighbor, mark_towards_self)` convention, root 0,
    vertices in BFS order."""
    vmarks = [t.root_mark]
    adj: dict[int, list[tuple[int, int, int]]] = {0: []}
    queue = [(0, t)]
    while queue:
        v, node = queue.pop()
        for mr, mc, sub in node.children:
            w = len(vmarks)
            vmarks.append(sub.root_mark)
            adj[w] = [(v, mr, mc)]  # towards parent v is mr, towards w is mc
            adj[v].append((w, mc, mr))
            queue.append((w, sub))
    return vmarks, adj


def relabel(vmarks: Sequence[int], adj: dict, perm: Sequence[int]):
    """Apply `perm[old] = new` to a labeled tree/graph adjacency."""
    new_marks = [0] * len(vmarks)
    new_adj: dict[int, list[tuple[int, int, int]]] = {v: [] for v in range(len(vmarks))}
    for old, new in enumerate(perm):
        new_marks[new] = vmarks[old]
        new_adj[new] = [(perm[w], a, b) for w, a, b in adj[old]]
    return new_marks, new_adj


def all_marked_graphs(n: int, n_edge_marks: int, n_vertex_marks: int) -> Iterator["MarkedGraph"]:
    """Every marked graph on [n] (vertices 0..n-1), brute force: each vertex
    pair is absent or carries one of the ordered mark pairs."""
    from .graphs import MarkedGraph

    pairs = list(combinations(range(n), 2))
    # state 0 = no edge; state 1.. = (mark_uv, mark_vu) with u < v
    edge_states = [None] + list(product(range(n_edge_marks), repeat=2))
    for vmarks in product(range(n_vertex_marks), repeat=n):
        for states in product(range(len(edge_states)), repeat=len(pairs)):
            edges = {}
            for (u, v), s in zip(pairs, states):
                if s:
                    muv, mvu = edge_states[s]
                    edges[(u, v)] = (muv, mvu)
            yield MarkedGraph(n, list(vmarks), edges)
