"""Finite directed multigraphs, their finite paths and higher block presentations.

Vertices and edges are identified by opaque strings.  The declared vertex and
edge order of a :class:`Graph` is its canonical order: adjacency matrices,
path enumerations and search traces all follow it, so results are
reproducible run to run.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Iterable, Mapping, Sequence

from .errors import BoundExceeded, GraphError, MatrixError, SinkError

Path = tuple  # tuple[str, ...] of edge ids, nonempty

DEFAULT_ISO_CAP = 12


class Graph:
    """An immutable finite directed multigraph.

    ``edges`` is an iterable of ``(edge_id, src, dst)`` triples.  Parallel
    edges and loops are allowed; sinks and sources are representable but
    every move and block-map operation rejects graphs with sinks.
    """

    __slots__ = ("_vertices", "_edges", "_src", "_dst", "_out", "_in", "_hash")

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str, str]] = ()):
        verts = tuple(vertices)
        if len(set(verts)) != len(verts):
            raise GraphError("duplicate vertex ids")
        vset = set(verts)
        ids, src, dst = [], {}, {}
        for item in edges:
            try:
                eid, s, d = item
            except (TypeError, ValueError):
                raise GraphError(f"malformed edge record {item!r}") from None
            if eid in src:
                raise GraphError(f"duplicate edge id {eid!r}")
            if s not in vset or d not in vset:
                raise GraphError(f"edge {eid!r} has endpoint outside the vertex set ({s!r} -> {d!r})")
            ids.append(eid)
            src[eid] = s
            dst[eid] = d
        out = {v: [] for v in verts}
        inc = {v: [] for v in verts}
        for eid in ids:
            out[src[eid]].append(eid)
            inc[dst[eid]].append(eid)
        self._vertices = verts
        self._edges = tuple(ids)
        self._src = src
        self._dst = dst
        self._out = {v: tuple(es) for v, es in out.items()}
        self._in = {v: tuple(es) for v, es in inc.items()}
        self._hash = hash((frozenset(verts), frozenset((e, src[e], dst[e]) for e in ids)))

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> tuple[str, ...]:
        return self._edges

    def src(self, edge: str) -> str:
        return self._src[edge]

    def dst(self, edge: str) -> str:
        return self._dst[edge]

    def out_edges(self, vertex: str) -> tuple[str, ...]:
        return self._out[vertex]

    def in_edges(self, vertex: str) -> tuple[str, ...]:
        return self._in[vertex]

    def edge_triples(self) -> tuple[tuple[str, str, str], ...]:
        return tuple((e, self._src[e], self._dst[e]) for e in self._edges)

    def sinks(self) -> tuple[str, ...]:
        return tuple(v for v in self._vertices if not self._out[v])

    def sources(self) -> tuple[str, ...]:
        return tuple(v for v in self._vertices if not self._in[v])

    def has_sinks(self) -> bool:
        return any(not self._out[v] for v in self._vertices)

    def require_no_sinks(self, what: str = "graph") -> None:
        sinks = self.sinks()
        if sinks:
            raise SinkError(sinks, what)

    def __contains__(self, item: str) -> bool:
        return item in self._src or item in self._out

    def __eq__(self, other: object) -> bool:
        # order-insensitive structural equality, ids included
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            set(self._vertices) == set(other._vertices)
            and self._src == other._src
            and self._dst == other._dst
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Graph({len(self._vertices)} vertices, {len(self._edges)} edges)"

    def relabel(self, vertex_map: Mapping[str, str] | None = None,
                edge_map: Mapping[str, str] | None = None) -> Graph:
        vm = vertex_map or {}
        em = edge_map or {}
        return Graph(
            (vm.get(v, v) for v in self._vertices),
            ((em.get(e, e), vm.get(s, s), vm.get(d, d)) for e, s, d in self.edge_triples()),
        )


@dataclass(frozen=True)
class ValidationReport:
    vertex_count: int
    edge_count: int
    sinks: tuple[str, ...]
    sources: tuple[str, ...]

    @property
    def has_sinks(self) -> bool:
        return bool(self.sinks)

    @property
    def has_sources(self) -> bool:
        return bool(self.sources)

    def as_dict(self) -> dict:
        return {
            "vertices": self.vertex_count,
            "edges": self.edge_count,
            "sinks": list(self.sinks),
            "sources": list(self.sources),
        }


def validate_graph(g: Graph) -> ValidationReport:
    return ValidationReport(len(g.vertices), len(g.edges), g.sinks(), g.sources())


def is_path(g: Graph, path: Sequence[str]) -> bool:
    if not path:
        return False
    if any(e not in g._src for e in path):
        return False
    return all(g.dst(a) == g.src(b) for a, b in zip(path, path[1:]))


@lru_cache(maxsize=4096)
def _paths(g: Graph, n: int) -> tuple[Path, ...]:
    if n == 1:
        return tuple((e,) for e in g.edges)
    return tuple(p + (e,) for p in _paths(g, n - 1) for e in g.out_edges(g.dst(p[-1])))


def paths_of_length(g: Graph, n: int) -> tuple[Path, ...]:
    """All paths with exactly ``n`` edges, in lexicographic order of edge index."""
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"path length must be a positive integer, got {n!r}")
    return _paths(g, n)


def paths_from(g: Graph, vertex: str, n: int) -> tuple[Path, ...]:
    return tuple(p for p in paths_of_length(g, n) if g.src(p[0]) == vertex)


def path_id(path: Sequence[str]) -> str:
    return ".".join(path)


@dataclass(frozen=True)
class HigherBlock:
    """The N-th higher block graph together with its canonical coding.

    ``code`` sends each path of length N in the original graph to the edge of
    ``graph`` that it becomes; reading a sequence through overlapping windows
    of ``code`` realizes the canonical conjugacy onto the higher block shift.
    """

    graph: Graph
    N: int
    code: Mapping[Path, str] = field(repr=False)


def higher_block_graph(g: Graph, N: int) -> HigherBlock:
    if not isinstance(N, int) or N < 1:
        raise ValueError(f"block length must be a positive integer, got {N!r}")
    g.require_no_sinks()
    if N == 1:
        return HigherBlock(g, 1, {(e,): e for e in g.edges})
    verts = [path_id(p) for p in paths_of_length(g, N - 1)]
    edges = []
    code = {}
    for p in paths_of_length(g, N):
        eid = path_id(p)
        code[p] = eid
        edges.append((eid, path_id(p[:-1]), path_id(p[1:])))
    if len(set(verts)) != len(verts) or len(code) != len(set(code.values())):
        raise GraphError("edge ids containing '.' make higher block ids ambiguous")
    return HigherBlock(Graph(verts, edges), N, code)


# -- matrices ---------------------------------------------------------------

def adjacency_matrix(g: Graph, ordering: Sequence[str] | None = None):
    from .intmat import NonNegMatrix

    order = tuple(g.vertices if ordering is None else ordering)
    if sorted(order) != sorted(g.vertices) or len(set(order)) != len(order):
        raise GraphError("ordering must be a permutation of the vertex set")
    index = {v: i for i, v in enumerate(order)}
    rows = [[0] * len(order) for _ in order]
    for e in g.edges:
        rows[index[g.src(e)]][index[g.dst(e)]] += 1
    return NonNegMatrix(rows)


def graph_from_matrix(A, names: Sequence[str] | None = None) -> Graph:
    """Graph with ``A[i][j]`` edges from vertex i to vertex j.

    Vertices are named ``v0, v1, ...`` unless ``names`` is given; edges are
    named ``<src>><dst>:<k>``.
    """
    from .intmat import NonNegMatrix

    if not isinstance(A, NonNegMatrix):
        A = NonNegMatrix(A)
    if A.rows != A.cols:
        raise MatrixError(f"adjacency matrix must be square, got {A.rows}x{A.cols}")
    verts = list(names) if names is not None else [f"v{i}" for i in range(A.rows)]
    if len(verts) != A.rows:
        raise MatrixError("wrong number of vertex names")
    edges = []
    for i, u in enumerate(verts):
        for j, w in enumerate(verts):
            for k in range(A[i, j]):
                edges.append((f"{u}>{w}:{k}", u, w))
    return Graph(verts, edges)


# -- isomorphism ------------------------------------------------------------

@dataclass(frozen=True)
class VertexBijection:
    forward: Mapping[str, str]

    @property
    def inverse(self) -> Mapping[str, str]:
        return {b: a for a, b in self.forward.items()}

    def __getitem__(self, v: str) -> str:
        return self.forward[v]

    def inverted(self) -> VertexBijection:
        return VertexBijection(self.inverse)


def _counts(g: Graph) -> dict[tuple[str, str], int]:
    c: dict[tuple[str, str], int] = {}
    for e in g.edges:
        key = (g.src(e), g.dst(e))
        c[key] = c.get(key, 0) + 1
    return c


def _refine(g: Graph, counts, colors: dict[str, object]) -> dict[str, object]:
    out: dict[str, list] = {v: [] for v in g.vertices}
    inc: dict[str, list] = {v: [] for v in g.vertices}
    for (a, b), k in counts.items():
        out[a].append((colors[b], k))
        inc[b].append((colors[a], k))
    return {v: (colors[v], tuple(sorted(out[v], key=repr)), tuple(sorted(inc[v], key=repr)))
            for v in g.vertices}


def _compress(c1: dict, c2: dict) -> tuple[dict, dict]:
    table = {sig: i for i, sig in enumerate(sorted(set(c1.values()) | set(c2.values()), key=repr))}
    return {v: table[s] for v, s in c1.items()}, {v: table[s] for v, s in c2.items()}


def are_isomorphic(g1: Graph, g2: Graph, max_vertices: int | None = DEFAULT_ISO_CAP) -> VertexBijection | None:
    """Find a vertex bijection preserving edge multiplicities, or None.

    Color refinement with individualization: refine, fix one vertex of the
    smallest open class against each candidate, refine again.  Still
    exponential in the worst case; graphs above ``max_vertices`` raise :class:`BoundExceeded`
    (pass ``None`` to lift the cap).
    """
    n = len(g1.vertices)
    if n != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return None
    if max_vertices is not None and n > max_vertices:
        raise BoundExceeded(f"isomorphism search capped at {max_vertices} vertices, got {n}")
    c1, c2 = _counts(g1), _counts(g2)
    found = _individualize(g1, g2, c1, c2, {v: 0 for v in g1.vertices}, {v: 0 for v in g2.vertices})
    if found is None:
        return None
    return VertexBijection({v: found[v] for v in g1.vertices})


def _stable_colors(g1: Graph, g2: Graph, c1, c2, col1: dict, col2: dict):
    """Refine both colorings together until the partition stops growing; None if they diverge."""
    for _ in range(len(g1.vertices) + 1):
        new1, new2 = _compress(_refine(g1, c1, col1), _refine(g2, c2, col2))
        stable = len(set(new1.values())) == len(set(col1.values()))
        col1, col2 = new1, new2
        if sorted(col1.values()) != sorted(col2.values()):
            return None
        if stable:
            break
    return col1, col2


def _individualize(g1: Graph, g2: Graph, c1, c2, col1: dict, col2: dict) -> dict[str, str] | None:
    """Refine, then branch on one vertex of the smallest nontrivial class."""
    res = _stable_colors(g1, g2, c1, c2, col1, col2)
    if res is None:
        return None
    col1, col2 = res
    classes1: dict[int, list[str]] = defaultdict(list)
    classes2: dict[int, list[str]] = defaultdict(list)
    for v in g1.vertices:
        classes1[col1[v]].append(v)
    for v in g2.vertices:
        classes2[col2[v]].append(v)
    open_classes = [k for k, vs in classes1.items() if len(vs) > 1]
    if not open_classes:
        m = {classes1[k][0]: classes2[k][0] for k in classes1}
        ok = all(c1.get((a, b), 0) == c2.get((m[a], m[b]), 0) for a in g1.vertices for b in g1.vertices)
        return m if ok else None
    k = min(open_classes, key=lambda k: (len(classes1[k]), k))
    v = classes1[k][0]
    fresh = max(col1.values()) + 1
    for w in classes2[k]:
        found = _individualize(g1, g2, c1, c2, {**col1, v: fresh}, {**col2, w: fresh})
        if found is not None:
            return found
    return None


def brute_force_isomorphic(g1: Graph, g2: Graph) -> VertexBijection | None:
    """Plain permutation scan; only for small cross-checks."""
    if len(g1.vertices) != len(g2.vertices):
        return None
    c1, c2 = _counts(g1), _counts(g2)
    for perm in permutations(g2.vertices):
        m = dict(zip(g1.vertices, perm))
        if all(c1.get((a, b), 0) == c2.get((m[a], m[b]), 0) for a in g1.vertices for b in g1.vertices):
            return VertexBijection(m)
    return None


def check_bijection(g1: Graph, g2: Graph, pi: VertexBijection) -> bool:
    if set(pi.forward) != set(g1.vertices) or set(pi.forward.values()) != set(g2.vertices):
        return False
    c1, c2 = _counts(g1), _counts(g2)
    return all(c1.get((a, b), 0) == c2.get((pi[a], pi[b]), 0) for a in g1.vertices for b in g1.vertices)


# -- serialization ----------------------------------------------------------

def graph_to_dict(g: Graph) -> dict:
    return {
        "vertices": list(g.vertices),
        "edges": [{"id": e, "src": s, "dst": d} for e, s, d in g.edge_triples()],
    }


def graph_from_dict(data: Mapping) -> Graph:
    try:
        verts = data["vertices"]
        edges = [(str(r["id"]), str(r["src"]), str(r["dst"])) for r in data["edges"]]
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph document: {exc}") from None
    return Graph([str(v) for v in verts], edges)


def graph_to_json(g: Graph) -> str:
    return json.dumps(graph_to_dict(g), indent=2, ensure_ascii=False)


def graph_from_json(text: str) -> Graph:
    return graph_from_dict(json.loads(text))


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: Graph, name: str = "G") -> str:
    sinks, sources = set(g.sinks()), set(g.sources())
    lines = [f"digraph {_q(name)} {{"]
    for v in g.vertices:
        attrs = ""
        if v in sinks:
            attrs = " [shape=box]"
        elif v in sources:
            attrs = " [shape=diamond]"
        lines.append(f"  {_q(v)}{attrs};")
    for e, s, d in g.edge_triples():
        lines.append(f"  {_q(s)} -> {_q(d)} [label={_q(e)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
