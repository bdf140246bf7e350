"""Finite simple marked graphs on [n] and their local statistics.

Neighborhood extraction returns a `CanonicalTree` whenever the rooted ball is
acyclic (so tree and graph classes interoperate in one support); cyclic balls
go through an exact mark-aware color-refinement + backtracking canonical form
(`CanonicalGraph`).  Empirical neighborhood distributions use exact integer
counts over n.
"""

from __future__ import annotations

from collections import Counter, deque
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .trees import CanonicalTree, HalfTree, MarkSpace, _varint, canonicalize


class MarkedGraph:
    """Simple marked graph: vertices 0..n-1, `edges[(u, v)] = (xi(u,v), xi(v,u))`
    keyed by u < v, where xi(u,v) is the mark towards v.

    Immutable by convention after construction; traversal helpers are
    read-only and safe to run concurrently.
    """

    def __init__(self, n: int, vertex_marks: Sequence[int], edges: Mapping[tuple[int, int], tuple[int, int]]):
        if len(vertex_marks) != n:
            raise ValueError("vertex_marks must have length n")
        self.n = n
        self.vertex_marks = list(vertex_marks)
        self.edges: dict[tuple[int, int], tuple[int, int]] = {}
        self.adj: list[dict[int, tuple[int, int]]] = [dict() for _ in range(n)]
        for (u, v), (muv, mvu) in edges.items():
            self.add_edge(u, v, muv, mvu)

    def add_edge(self, u: int, v: int, mark_uv: int, mark_vu: int) -> None:
        # construction-time helper; not for use on shared instances
        if u == v:
            raise ValueError("self-loops are not allowed")
        if v < u:
            u, v, mark_uv, mark_vu = v, u, mark_vu, mark_uv
        if (u, v) in self.edges:
            raise ValueError(f"parallel edge ({u}, {v})")
        self.edges[(u, v)] = (mark_uv, mark_vu)
        self.adj[u][v] = (mark_uv, mark_vu)  # (towards v, towards u)
        self.adj[v][u] = (mark_vu, mark_uv)

    def remove_edge(self, u: int, v: int) -> None:
        if v < u:
            u, v = v, u
        del self.edges[(u, v)]
        del self.adj[u][v]
        del self.adj[v][u]

    def copy(self) -> "MarkedGraph":
        return MarkedGraph(self.n, self.vertex_marks, self.edges)

    def tau(self, v: int) -> int:
        return self.vertex_marks[v]

    def xi(self, u: int, v: int) -> int:
        """Mark of the edge {u, v} towards v."""
        return self.adj[u][v][0]

    def neighbors(self, v: int):
        return self.adj[v].keys()

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def deg_marked(self, v: int, x: int, x_prime: int) -> int:
        """Neighbors u with mark x towards v and x' towards u."""
        return sum(1 for u, (m_to_u, m_to_v) in self.adj[v].items() if m_to_v == x and m_to_u == x_prime)

    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency_view(self) -> dict[int, list[tuple[int, int, int]]]:
        """(neighbor, mark_towards_neighbor, mark_towards_self) lists."""
        return {
            v: [(w, m_to_w, m_to_v) for w, (m_to_w, m_to_v) in self.adj[v].items()]
            for v in range(self.n)
        }


class MarkCountVectors:
    """Edge mark counts over unordered pairs {x, x'} and vertex mark counts."""

    def __init__(self, m: Mapping[tuple[int, int], int], u: Mapping[int, int]):
        self.m = {self._norm(k): v for k, v in m.items() if v}
        self.u = {k: v for k, v in u.items() if v}

    @staticmethod
    def _norm(pair: tuple[int, int]) -> tuple[int, int]:
        x, y = pair
        return (x, y) if x <= y else (y, x)

    def m_entry(self, x: int, x_prime: int) -> int:
        return self.m.get(self._norm((x, x_prime)), 0)

    def u_entry(self, theta: int) -> int:
        return self.u.get(theta, 0)

    def m_total(self) -> int:
        return sum(self.m.values())

    def u_total(self) -> int:
        return sum(self.u.values())

    def __eq__(self, other):
        return isinstance(other, MarkCountVectors) and self.m == other.m and self.u == other.u

    def __repr__(self):
        return f"MarkCountVectors(m={self.m}, u={self.u})"


def mark_counts(g: MarkedGraph) -> MarkCountVectors:
    m: Counter = Counter()
    for (u, v), (muv, mvu) in g.edges.items():
        m[MarkCountVectors._norm((muv, mvu))] += 1
    u_counts: Counter = Counter(g.vertex_marks)
    return MarkCountVectors(m, u_counts)


# ---------------------------------------------------------------------------
# Canonical rooted graphs (cyclic neighborhoods)


class CanonicalGraph:
    """Canonical class of a rooted connected marked graph (cyclic case).

    Exact canonical labeling: iterative mark-aware color refinement, then
    backtracking over the first non-singleton cell, taking the minimal
    encoding.  Exponential worst case, fine at neighborhood scale.
    """

    __slots__ = ("key", "nverts", "_hash")

    def __init__(self, key: bytes, nverts: int):
        self.key = key
        self.nverts = nverts
        self._hash = hash(key)

    def __eq__(self, other):
        return isinstance(other, CanonicalGraph) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"CanonicalGraph(n={self.nverts})"


def _refine(n: int, colors: list[int], adj: list[dict[int, tuple[int, int]]]) -> list[int]:
    while True:
        sigs = []
        for v in range(n):
            nb = sorted((m_to_v, m_to_w, colors[w]) for w, (m_to_w, m_to_v) in adj[v].items())
            sigs.append((colors[v], tuple(nb)))
        order = sorted(set(sigs))
        ids = {s: i for i, s in enumerate(order)}
        new = [ids[s] for s in sigs]
        if new == colors:
            return colors
        colors = new


def _encode_labeled(n: int, perm: list[int], vmarks: list[int], adj) -> bytes:
    # perm[old] = new
    marks = [0] * n
    for old, new in enumerate(perm):
        marks[new] = vmarks[old]
    edge_rows = []
    seen = set()
    for old_u in range(n):
        for old_v, (m_to_v, m_to_u) in adj[old_u].items():
            a, b = perm[old_u], perm[old_v]
            if a > b or (a, b) in seen:
                continue
            seen.add((a, b))
            edge_rows.append((a, b, m_to_v, m_to_u))  # towards b, towards a
    edge_rows.sort()
    parts = [_varint(n)] + [_varint(m) for m in marks]
    for row in edge_rows:
        parts.extend(_varint(x) for x in row)
    return b"".join(parts)


def _canonical_key(n: int, vmarks: list[int], adj) -> bytes:
    # root is vertex 0 and is individualized by its initial color
    base = sorted(set(vmarks))
    base_ids = {m: i + 1 for i, m in enumerate(base)}
    init = [0 if v == 0 else base_ids[vmarks[v]] * 2 for v in range(n)]

    best: list[bytes | None] = [None]

    def descend(colors: list[int]) -> None:
        colors = _refine(n, colors, adj)
        cells: dict[int, list[int]] = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            perm = [0] * n
            for v in range(n):
                perm[v] = colors[v]
            # colors are a bijection onto 0..n-1 here
            enc = _encode_labeled(n, perm, vmarks, adj)
            if best[0] is None or enc < best[0]:
                best[0] = enc
            return
        fresh = max(colors) + 1
        for v in target:
            nxt = list(colors)
            nxt[v] = fresh
            descend(nxt)

    descend(init)
    assert best[0] is not None
    return best[0]


def _rooted_component(g: MarkedGraph, root: int, h: int | None):
    """Vertices within distance h of root (all, if h is None), local relabel,
    and the induced adjacency."""
    dist = {root: 0}
    order = [root]
    dq = deque([root])
    while dq:
        v = dq.popleft()
        if h is not None and dist[v] == h:
            continue
        for w in g.neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
                dq.append(w)
    local = {v: i for i, v in enumerate(order)}
    vmarks = [g.vertex_marks[v] for v in order]
    adj: list[dict[int, tuple[int, int]]] = [dict() for _ in order]
    nedges = 0
    for v in order:
        for w, (m_to_w, m_to_v) in g.adj[v].items():
            if w in local:
                adj[local[v]][local[w]] = (m_to_w, m_to_v)
                nedges += 1
    return vmarks, adj, nedges // 2


def neighborhood(g: MarkedGraph, v: int, h: int) -> CanonicalTree | CanonicalGraph:
    """Canonical class of the rooted induced ball (G, v)_h; a `CanonicalTree`
    when the ball is acyclic."""
    vmarks, adj, nedges = _rooted_component(g, v, h)
    n = len(vmarks)
    if nedges == n - 1:  # connected by construction, so acyclic
        adjacency = {
            i: [(w, m_to_w, m_to_i) for w, (m_to_w, m_to_i) in adj[i].items()]
            for i in range(n)
        }
        return canonicalize(0, vmarks, adjacency)
    return CanonicalGraph(_canonical_key(n, vmarks, adj), n)


def rooted_class(g: MarkedGraph, v: int) -> CanonicalTree | CanonicalGraph:
    """[G, v]: the whole connected component of v, rooted."""
    vmarks, adj, nedges = _rooted_component(g, v, None)
    n = len(vmarks)
    if nedges == n - 1:
        adjacency = {
            i: [(w, m_to_w, m_to_i) for w, (m_to_w, m_to_i) in adj[i].items()]
            for i in range(n)
        }
        return canonicalize(0, vmarks, adjacency)
    return CanonicalGraph(_canonical_key(n, vmarks, adj), n)


def empirical_dist(g: MarkedGraph, h: int):
    """U(G)_h as a finitely supported measure with exact masses k/n."""
    from .dists import NeighborhoodDist

    counts: Counter = Counter(neighborhood(g, v, h) for v in range(g.n))
    probs = {cls: Fraction(c, g.n) for cls, c in counts.items()}
    return NeighborhoodDist(h, probs, mode="rational")


# ---------------------------------------------------------------------------
# Edge types and tree-likeness


def _component_class(g: MarkedGraph, start: int, blocked_edge: tuple[int, int], depth: int):
    """Class of `start`'s component in G minus one edge, truncated at `depth`."""
    bu, bv = blocked_edge
    dist = {start: 0}
    order = [start]
    dq = deque([start])
    while dq:
        a = dq.popleft()
        if dist[a] == depth:
            continue
        for w in g.neighbors(a):
            if (a, w) in ((bu, bv), (bv, bu)):
                continue
            if w not in dist:
                dist[w] = dist[a] + 1
                order.append(w)
                dq.append(w)
    local = {v: i for i, v in enumerate(order)}
    vmarks = [g.vertex_marks[v] for v in order]
    adj: list[dict[int, tuple[int, int]]] = [dict() for _ in order]
    nedges = 0
    for v in order:
        for w, (m_to_w, m_to_v) in g.adj[v].items():
            if w in local and (v, w) not in ((bu, bv), (bv, bu)):
                adj[local[v]][local[w]] = (m_to_w, m_to_v)
                nedges += 1
    n = len(order)
    if nedges == 2 * (n - 1):
        adjacency = {
            i: [(w, a, b) for w, (a, b) in adj[i].items()] for i in range(n)
        }
        return canonicalize(0, vmarks, adjacency)
    return CanonicalGraph(_canonical_key(n, vmarks, adj), n)


def etype(g: MarkedGraph, u: int, v: int, h: int) -> tuple[HalfTree, HalfTree]:
    """Depth-h type of the edge (u, v): the pair (G[v,u]_{h-1}, G[u,v]_{h-1}).

    The first component is u's side (mark towards u, u's component after the
    cut); components that are not trees come back with a `CanonicalGraph`
    subtree slot.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if v not in g.adj[u]:
        raise ValueError(f"vertices {u} and {v} are not adjacent")
    side_u = _component_class(g, u, (u, v), h - 1)
    side_v = _component_class(g, v, (u, v), h - 1)
    return (HalfTree(g.xi(v, u), side_u), HalfTree(g.xi(u, v), side_v))


def girth(g: MarkedGraph) -> float:
    """Length of a shortest cycle; inf when acyclic.  BFS from every vertex."""
    best = float("inf")
    for s in range(g.n):
        dist = {s: 0}
        parent = {s: -1}
        dq = deque([s])
        while dq:
            a = dq.popleft()
            for w in g.neighbors(a):
                if w not in dist:
                    dist[w] = dist[a] + 1
                    parent[w] = a
                    dq.append(w)
                elif parent[a] != w and dist[w] >= dist[a]:
                    # non-tree edge closes a cycle through s (or above)
                    best = min(best, dist[a] + dist[w] + 1)
        if best == 3:
            return best
    return best


def is_h_treelike(g: MarkedGraph, h: int) -> bool:
    """True iff G has no cycle of length 2h+1 or less, i.e. every depth-h ball
    is a tree."""
    return girth(g) > 2 * h + 1


def colored_degree(g: MarkedGraph, h: int):
    """Type table, root-mark vector, and colored degree sequence of the
    depth-h edge-type coloring of G.

    D(v)[t][t'] counts neighbors u whose edge (v, u) has type (t, t'); requires
    every type component to be a tree (guaranteed h-tree-like inputs).
    """
    from .colored import ColoredDegreeSequence
    from .convert import TypeTable

    half: dict[tuple[int, int], HalfTree] = {}
    for (u, v) in g.edges:
        tu, tv = etype(g, u, v, h)
        if not isinstance(tu.subtree, CanonicalTree) or not isinstance(tv.subtree, CanonicalTree):
            raise ValueError(f"edge ({u}, {v}) has a non-tree depth-{h} type component")
        half[(u, v)] = tv  # G[u,v]_{h-1}: v's side
        half[(v, u)] = tu
    table = TypeTable.from_half_trees(half.values())
    L = len(table)
    matrices = []
    for v in range(g.n):
        mat = [[0] * L for _ in range(L)]
        for u in g.neighbors(v):
            # color of the edge directed v -> u is etype(v, u) = (u side? no:
            # (G[u,v]_{h-1}, G[v,u]_{h-1}) = (v's neighborhood, u's branch)
            i = table.index(half[(u, v)])
            j = table.index(half[(v, u)])
            mat[i][j] += 1
        matrices.append(tuple(tuple(row) for row in mat))
    beta = list(g.vertex_marks)
    return table, beta, ColoredDegreeSequence(L, matrices)


# ---------------------------------------------------------------------------
# I/O


def graph_to_json(g: MarkedGraph, marks: MarkSpace) -> dict:
    return {
        "n": g.n,
        "vertex_marks": [marks.vertex_labels[m] for m in g.vertex_marks],
        "edges": [
            {
                "u": u,
                "v": v,
                "mark_uv": marks.edge_labels[muv],
                "mark_vu": marks.edge_labels[mvu],
            }
            for (u, v), (muv, mvu) in sorted(g.edges.items())
        ],
    }


def graph_from_json(obj: Mapping, marks: MarkSpace) -> MarkedGraph:
    n = int(obj["n"])
    vmarks = [marks.vertex_id(lab) for lab in obj["vertex_marks"]]
    edges = {}
    for e in obj.get("edges", ()):
        u, v = int(e["u"]), int(e["v"])
        edges[(u, v)] = (marks.edge_id(e["mark_uv"]), marks.edge_id(e["mark_vu"]))
    return MarkedGraph(n, vmarks, edges)


def graph_to_csv_rows(g: MarkedGraph, marks: MarkSpace) -> Iterator[list]:
    yield ["u", "v", "mark_uv", "mark_vu"]
    for (u, v), (muv, mvu) in sorted(g.edges.items()):
        yield [u, v, marks.edge_labels[muv], marks.edge_labels[mvu]]


def graph_from_csv_rows(rows: Sequence[Sequence], vertex_marks: Sequence, marks: MarkSpace) -> MarkedGraph:
    """Edge-list CSV variant: a header row then u,v,mark_uv,mark_vu rows;
    vertex marks are supplied separately (labels, one per vertex)."""
    header = [str(c).strip() for c in rows[0]]
    if header != ["u", "v", "mark_uv", "mark_vu"]:
        raise ValueError(f"unexpected CSV header: {header}")
    vmarks = [marks.vertex_id(lab) for lab in vertex_marks]
    edges = {}
    for row in rows[1:]:
        if not row:
            continue
        u, v = int(row[0]), int(row[1])
        edges[(u, v)] = (marks.edge_id(row[2]), marks.edge_id(row[3]))
    return MarkedGraph(len(vmarks), vmarks, edges)
