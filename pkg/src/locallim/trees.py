"""Canonical representations and algebra of finite-depth marked rooted trees.

A marked rooted tree carries one mark per vertex and two directional marks per
edge (one towards each endpoint).  Equality of `CanonicalTree` values coincides
with rooted marked isomorphism: children are kept in a deterministic total
order and every node carries a length-prefixed recursive byte key, so two trees
are isomorphic iff their keys are byte-identical (AHU-style hashing with
marks).

Half-trees -- an edge mark pointing at an absent parent plus a rooted subtree
-- are the unit of the `join_root` / `graft_child` algebra and of all edge-type
bookkeeping.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Sequence


class StructureError(ValueError):
    """Input violates a structural precondition (cycle, disconnection, marks)."""


class NotGraphicalError(ValueError):
    """A (root mark, count matrix) pair is realized by no rooted tree."""

    def __init__(self, message, entry=None):
        super().__init__(message)
        self.entry = entry


class MarkSpace:
    """Session-scoped registries mapping edge/vertex mark labels to dense ids.

    Ids are assigned in registration order and stay fixed for the lifetime of
    the space; serialization always goes through labels.
    """

    def __init__(self, edge_labels: Iterable = (), vertex_labels: Iterable = ()):
        self.edge_labels: list = []
        self.vertex_labels: list = []
        self._edge_ids: dict = {}
        self._vertex_ids: dict = {}
        for lab in edge_labels:
            self.edge_id(lab)
        for lab in vertex_labels:
            self.vertex_id(lab)

    def edge_id(self, label) -> int:
        ident = self._edge_ids.get(label)
        if ident is None:
            ident = self._edge_ids[label] = len(self.edge_labels)
            self.edge_labels.append(label)
        return ident

    def vertex_id(self, label) -> int:
        ident = self._vertex_ids.get(label)
        if ident is None:
            ident = self._vertex_ids[label] = len(self.vertex_labels)
            self.vertex_labels.append(label)
        return ident

    @property
    def n_edge_marks(self) -> int:
        return len(self.edge_labels)

    @property
    def n_vertex_marks(self) -> int:
        return len(self.vertex_labels)


def _varint(x: int) -> bytes:
    # unsigned LEB128; mark ids and lengths are small nonnegative ints
    out = bytearray()
    while True:
        b = x & 0x7F
        x >>= 7
        if x:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


class CanonicalTree:
    """Isomorphism class of a finite marked rooted tree.

    `children` is a tuple of `(mark_to_root, mark_to_child, subtree)` triples
    sorted by `(subtree.key, mark_to_root, mark_to_child)`.  `key` is the
    canonical byte serialization; equality and hashing go through it.  Values
    are immutable and safe to share across threads.
    """

    __slots__ = ("root_mark", "children", "depth", "nverts", "key", "_hash")

    def __init__(self, root_mark: int, children: Sequence[tuple[int, int, "CanonicalTree"]] = ()):
        kids = sorted(children, key=lambda c: (c[2].key, c[0], c[1]))
        self.root_mark = root_mark
        self.children = tuple(kids)
        depth = 0
        nverts = 1
        parts = [_varint(root_mark), _varint(len(kids))]
        for m_root, m_child, sub in kids:
            if sub.depth >= depth:
                depth = sub.depth + 1
            nverts += sub.nverts
            parts.append(_varint(m_root))
            parts.append(_varint(m_child))
            parts.append(_varint(len(sub.key)))
            parts.append(sub.key)
        self.depth = depth
        self.nverts = nverts
        self.key = b"".join(parts)
        self._hash = hash(self.key)

    def __eq__(self, other):
        return self is other or (isinstance(other, CanonicalTree) and self.key == other.key)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"CanonicalTree(mark={self.root_mark}, n={self.nverts}, depth={self.depth})"

    def degree(self) -> int:
        return len(self.children)

    def drop_child(self, index: int) -> "CanonicalTree":
        """Tree with one occurrence of the child at `index` removed."""
        kids = self.children
        return CanonicalTree(self.root_mark, kids[:index] + kids[index + 1 :])


_LEAVES: dict[int, CanonicalTree] = {}


def leaf(mark: int) -> CanonicalTree:
    t = _LEAVES.get(mark)
    if t is None:
        t = _LEAVES[mark] = CanonicalTree(mark)
    return t


class HalfTree(NamedTuple):
    """An edge mark towards the absent parent plus a rooted subtree.

    `mark` is the mark component (carried on the dangling half edge, pointing
    at the subtree's root); `subtree` is the usual canonical class.
    """

    mark: int
    subtree: CanonicalTree

    @property
    def depth(self) -> int:
        return self.subtree.depth

    def truncated(self, k: int) -> "HalfTree":
        return HalfTree(self.mark, truncate(self.subtree, k))

    def sort_key(self):
        return (self.mark, self.subtree.key)


@lru_cache(maxsize=1 << 20)
def truncate(t: CanonicalTree, k: int) -> CanonicalTree:
    """Depth-k truncation; identity when k >= depth(t)."""
    if k < 0:
        raise ValueError("truncation depth must be nonnegative")
    if t.depth <= k:
        return t
    if k == 0:
        return leaf(t.root_mark)
    return CanonicalTree(
        t.root_mark,
        [(mr, mc, truncate(sub, k - 1)) for mr, mc, sub in t.children],
    )


def oplus(t: HalfTree, t_prime: HalfTree) -> CanonicalTree:
    """Join two half-trees into a rooted tree.

    The root keeps `t`'s subtree structure and root mark and gains one extra
    child carrying `t_prime`'s subtree; on the new edge, `t.mark` points at the
    root and `t_prime.mark` at the new child.  Not commutative.
    """
    base = t.subtree
    extra = (t.mark, t_prime.mark, t_prime.subtree)
    return CanonicalTree(base.root_mark, base.children + (extra,))


def otimes(root_mark: int, x: int, t: HalfTree) -> CanonicalTree:
    """Single-child tree: root marked `root_mark`, child carrying `t.subtree`,
    with `x` towards the root and `t.mark` towards the child."""
    return CanonicalTree(root_mark, ((x, t.mark, t.subtree),))


def odot(s: CanonicalTree, s_prime: CanonicalTree) -> CanonicalTree:
    """Join two trees at a common root; commutative and associative."""
    if s.root_mark != s_prime.root_mark:
        raise ValueError("odot requires matching root marks")
    return CanonicalTree(s.root_mark, s.children + s_prime.children)


def child_branch(t: CanonicalTree, index: int, k: int | None = None) -> HalfTree:
    """T[o,v]_k for the child at `index`: its subtree seen from the root."""
    mr, mc, sub = t.children[index]
    return HalfTree(mc, sub if k is None else truncate(sub, k))


def child_upward(t: CanonicalTree, index: int, k: int | None = None) -> HalfTree:
    """T[v,o]_k for the child at `index`: the rest of the tree seen from it."""
    mr, _mc, _sub = t.children[index]
    rest = t.drop_child(index)
    return HalfTree(mr, rest if k is None else truncate(rest, k))


def _grouped_children(t: CanonicalTree):
    """Distinct child triples with multiplicities and one representative index."""
    groups = []
    prev = None
    for i, triple in enumerate(t.children):
        if prev is not None and triple == prev[0]:
            prev[2] += 1
        else:
            prev = [triple, i, 1]
            groups.append(prev)
    return [(triple, idx, mult) for triple, idx, mult in groups]


def eh_table(t: CanonicalTree, h: int, k: int | None = None) -> dict[tuple[HalfTree, HalfTree], int]:
    """All nonzero E_{h,k}(., .)(t) counts, keyed by (upward, branch) half-tree
    pairs at depths h-1 and k-1.  With k omitted this is the square E_h table;
    the sum of the counts is the root degree."""
    if k is None:
        k = h
    table: dict[tuple[HalfTree, HalfTree], int] = {}
    for (mr, mc, sub), idx, mult in _grouped_children(t):
        up = HalfTree(mr, truncate(t.drop_child(idx), h - 1))
        br = HalfTree(mc, truncate(sub, k - 1))
        key = (up, br)
        table[key] = table.get(key, 0) + mult
    return table


def eh_count(t: CanonicalTree, up: HalfTree, branch: HalfTree, k: int, l: int) -> int:
    """E_{k,l}(up, branch)(t): root children v with T(v,o)_{k-1} == up and
    T(o,v)_{l-1} == branch."""
    count = 0
    for (mr, mc, sub), idx, mult in _grouped_children(t):
        if mr != up.mark or mc != branch.mark:
            continue
        if truncate(sub, l - 1) != branch.subtree:
            continue
        if truncate(t.drop_child(idx), k - 1) == up.subtree:
            count += mult
    return count


def depth1_type_counts(t: CanonicalTree) -> dict[tuple[int, int, int, int], int]:
    """Children counted by the incident mark 4-tuple (x, x', theta, theta'):
    mark towards the root, mark towards the child, root mark, child mark."""
    counts: dict[tuple[int, int, int, int], int] = {}
    for mr, mc, sub in t.children:
        key = (mr, mc, t.root_mark, sub.root_mark)
        counts[key] = counts.get(key, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# Labeled trees (adjacency form) -> canonical form


def canonicalize(
    root,
    vertex_marks: Mapping,
    adjacency: Mapping,
) -> CanonicalTree:
    """Canonical class of a labeled marked rooted tree.

    `adjacency[v]` lists `(w, mark_towards_w, mark_towards_v)` entries for the
    neighbors of `v`; the structure must be a tree containing `root` (every
    vertex reachable exactly once).  Raises `StructureError` on a cycle or on
    vertices unreachable from the root.
    """
    seen = {root}

    def build(v, parent) -> CanonicalTree:
        kids = []
        for w, m_vw, m_wv in adjacency[v]:
            if w == parent:
                continue
            if w in seen:
                raise StructureError(f"cycle through vertex {w!r}")
            seen.add(w)
            sub = build(w, v)
            # child triple wants (mark towards root side, mark towards child)
            kids.append((m_wv, m_vw, sub))
        return CanonicalTree(vertex_marks[v], kids)

    result = build(root, None)
    unreachable = set(adjacency) - seen
    if unreachable:
        raise StructureError(f"vertices {sorted(map(repr, unreachable))} not reachable from root")
    return result


def half_tree_cut(
    u,
    v,
    vertex_marks: Mapping,
    adjacency: Mapping,
    k: int | None = None,
) -> HalfTree:
    """T[u,v]_k on a labeled tree: cut the edge (u,v), keep v's component.

    Returns the half-tree whose mark is the cut edge's mark towards `v` and
    whose subtree is the component of `v`, truncated at `k` when given.
    """
    mark_towards_v = None
    for w, m_vw, m_wv in adjacency[u]:
        if w == v:
            mark_towards_v = m_vw
            break
    if mark_towards_v is None:
        raise ValueError(f"vertices {u!r} and {v!r} are not adjacent")
    seen = {u, v}

    def build(a, parent) -> CanonicalTree:
        kids = []
        for w, m_aw, m_wa in adjacency[a]:
            if w == parent or (a == v and w == u):
                continue
            if w in seen:
                raise StructureError(f"cycle through vertex {w!r}")
            seen.add(w)
            kids.append((m_wa, m_aw, build(w, a)))
        return CanonicalTree(vertex_marks[a], kids)

    sub = build(v, u)
    if k is not None:
        sub = truncate(sub, k)
    return HalfTree(mark_towards_v, sub)


# ---------------------------------------------------------------------------
# Graphical pairs


class GraphicalPair(NamedTuple):
    """Root mark plus a (half-tree, half-tree) -> positive count matrix."""

    root_mark: int
    counts: tuple[tuple[tuple[HalfTree, HalfTree], int], ...]

    @classmethod
    def from_dict(cls, root_mark: int, counts: Mapping[tuple[HalfTree, HalfTree], int]) -> "GraphicalPair":
        items = []
        for (up, br), c in counts.items():
            if c <= 0:
                raise ValueError("graphical-pair entries must be strictly positive")
            items.append(((up, br), int(c)))
        items.sort(key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key()))
        return cls(root_mark, tuple(items))


def extract_graphical(t: CanonicalTree, h: int) -> GraphicalPair:
    """The (root mark, E_h count matrix) pair of a depth-<=h tree."""
    return GraphicalPair.from_dict(t.root_mark, eh_table(t, h))


def tree_from_graphical(pair: GraphicalPair, h: int) -> CanonicalTree:
    """The unique depth-<=h tree realizing `pair`, by assembly plus an E_h
    round trip; raises `NotGraphicalError` (naming an offending entry) when the
    counts are inconsistent."""
    if h < 1:
        raise ValueError("h must be >= 1")
    candidate = leaf(pair.root_mark)
    for (up, br), count in pair.counts:
        if up.depth > h - 1 or br.depth > h - 1:
            raise ValueError("half-trees in a graphical pair live at depth h-1")
        piece = otimes(pair.root_mark, up.mark, br)
        for _ in range(count):
            candidate = odot(candidate, piece)
    realized = eh_table(candidate, h)
    wanted = dict(pair.counts)
    for key, count in wanted.items():
        if realized.get(key, 0) != count:
            raise NotGraphicalError(
                f"entry with count {count} is realized {realized.get(key, 0)} times",
                entry=key,
            )
    for key, count in realized.items():
        if key not in wanted and count:
            raise NotGraphicalError(
                f"assembly produces {count} unrequested children of a new type",
                entry=key,
            )
    return candidate


# ---------------------------------------------------------------------------
# JSON round trip


def tree_to_json(t: CanonicalTree, marks: MarkSpace) -> dict:
    """{"mark":…, "children":[{"to_root":…, "to_child":…, "subtree":…}…]} with
    children in canonical order."""
    return {
        "mark": marks.vertex_labels[t.root_mark],
        "children": [
            {
                "to_root": marks.edge_labels[mr],
                "to_child": marks.edge_labels[mc],
                "subtree": tree_to_json(sub, marks),
            }
            for mr, mc, sub in t.children
        ],
    }


def tree_from_json(obj: Mapping, marks: MarkSpace) -> CanonicalTree:
    children = [
        (
            marks.edge_id(c["to_root"]),
            marks.edge_id(c["to_child"]),
            tree_from_json(c["subtree"], marks),
        )
        for c in obj.get("children", ())
    ]
    return CanonicalTree(marks.vertex_id(obj["mark"]), children)
