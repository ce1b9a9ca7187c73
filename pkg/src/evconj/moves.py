"""State splitting moves on graphs without sinks.

A split vertex ``v`` becomes ``v#1, ..., v#n``; every other vertex ``w``
becomes ``w#1``.  Edges are renamed the same way.  Result vertices and
edges keep the order of the source graph with split items expanded in
place, which fixes the row/column order of the division matrix ``D`` and
the edge matrix ``Em`` stored on each :class:`SplitRecord`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import InternalConsistencyError, MatrixError, SplitError
from .graph import Graph, adjacency_matrix, are_isomorphic, graph_from_dict, graph_to_dict
from .intmat import (
    BeeTriple,
    BsseCertificate,
    NonNegMatrix,
    as_matrix,
    division_matrix,
    is_division_matrix,
    residual,
    verify_balanced_elementary,
)

OUT = "out"
IN = "in"


def child(name: str, i: int) -> str:
    return f"{name}#{i}"


@dataclass(frozen=True)
class Partition:
    """Ordered cells of edge ids at ``vertex``; ``kind`` is ``out`` or ``in``."""

    vertex: str
    cells: tuple[tuple[str, ...], ...]
    kind: str = IN

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(tuple(c) for c in self.cells))
        if self.kind not in (OUT, IN):
            raise SplitError(f"unknown partition kind {self.kind!r}")

    @property
    def n(self) -> int:
        return len(self.cells)

    def cell_of(self) -> dict[str, int]:
        return {e: i for i, cell in enumerate(self.cells) for e in cell}

    def normalized(self) -> frozenset:
        """Order-free form used to compare partitions up to cell reordering."""
        from collections import Counter

        return frozenset(Counter(frozenset(c) for c in self.cells).items())

    def validate(self, g: Graph) -> None:
        if self.vertex not in g.vertices:
            raise SplitError(f"vertex {self.vertex!r} is not in the graph")
        if self.n < 1:
            raise SplitError("a partition needs at least one cell")
        star = g.out_edges(self.vertex) if self.kind == OUT else g.in_edges(self.vertex)
        seen: list[str] = [e for c in self.cells for e in c]
        if len(seen) != len(set(seen)):
            raise SplitError(f"an edge appears in two cells at {self.vertex!r}")
        if set(seen) != set(star):
            missing = sorted(set(star) - set(seen))
            extra = sorted(set(seen) - set(star))
            word = "outgoing" if self.kind == OUT else "incoming"
            raise SplitError(
                f"cells must cover the {word} edges of {self.vertex!r} exactly"
                + (f"; missing {missing}" if missing else "")
                + (f"; not {word} there {extra}" if extra else "")
            )
        if self.kind == OUT and any(not c for c in self.cells):
            raise SplitError("out-split cells must be nonempty")


def OutPartition(vertex: str, cells) -> Partition:
    return Partition(vertex, cells, OUT)


def InPartition(vertex: str, cells) -> Partition:
    return Partition(vertex, cells, IN)


def single_cell(g: Graph, vertex: str, kind: str = IN, n: int = 1) -> Partition:
    """Everything in the first of ``n`` cells."""
    star = g.out_edges(vertex) if kind == OUT else g.in_edges(vertex)
    return Partition(vertex, (star,) + ((),) * (n - 1), kind)


@dataclass(frozen=True)
class SplitRecord:
    kind: str
    source: Graph
    partition: Partition
    result: Graph
    D: NonNegMatrix
    Em: NonNegMatrix
    vertex_map: Mapping[str, tuple[str, int]]
    edge_map: Mapping[str, tuple[str, int]]

    def parent_vertex(self, v: str) -> str:
        return self.vertex_map[v][0]

    def parent_edge(self, e: str) -> str:
        return self.edge_map[e][0]

    def new_sources(self) -> tuple[str, ...]:
        before = set(self.source.sources())
        return tuple(v for v in self.result.sources() if self.vertex_map[v][0] not in before)

    def identities_hold(self) -> bool:
        A_g = adjacency_matrix(self.source)
        A_r = adjacency_matrix(self.result)
        if self.kind == OUT:
            return self.D @ self.Em == A_g and self.Em @ self.D == A_r
        return self.Em @ self.D.T == A_g and self.D.T @ self.Em == A_r


def _split(g: Graph, p: Partition) -> SplitRecord:
    g.require_no_sinks()
    p.validate(g)
    v, n = p.vertex, p.n
    cell = p.cell_of()
    vertices: list[str] = []
    vmap: dict[str, tuple[str, int]] = {}
    for w in g.vertices:
        for i in range(1, (n if w == v else 1) + 1):
            vertices.append(child(w, i))
            vmap[child(w, i)] = (w, i)

    # the copied end of an edge is the split end: range for out, source for in
    copied = (lambda e: g.dst(e) == v) if p.kind == OUT else (lambda e: g.src(e) == v)
    edges: list[tuple[str, str, str]] = []
    emap: dict[str, tuple[str, int]] = {}
    for e in g.edges:
        s, r = g.src(e), g.dst(e)
        for i in range(1, (n if copied(e) else 1) + 1):
            if p.kind == OUT:
                ns = child(v, cell[e] + 1) if s == v else child(s, 1)
                nr = child(v, i) if r == v else child(r, 1)
            else:
                ns = child(v, i) if s == v else child(s, 1)
                nr = child(v, cell[e] + 1) if r == v else child(r, 1)
            edges.append((child(e, i), ns, nr))
            emap[child(e, i)] = (e, i)
    result = Graph(vertices, edges)

    gi = {w: k for k, w in enumerate(g.vertices)}
    ri = {w: k for k, w in enumerate(vertices)}
    D = division_matrix([gi[vmap[x][0]] for x in vertices], len(g.vertices))
    if p.kind == OUT:
        # Em(x, u): edges leaving cell x of the source graph and ending at u
        em = [[0] * len(g.vertices) for _ in vertices]
        for e in g.edges:
            s = g.src(e)
            x = child(v, cell[e] + 1) if s == v else child(s, 1)
            em[ri[x]][gi[g.dst(e)]] += 1
    else:
        # Em(u, y): edges leaving u that land in cell y
        em = [[0] * len(vertices) for _ in g.vertices]
        for e in g.edges:
            r = g.dst(e)
            y = child(v, cell[e] + 1) if r == v else child(r, 1)
            em[gi[g.src(e)]][ri[y]] += 1
    rec = SplitRecord(p.kind, g, p, result, D, NonNegMatrix(em, cols=len(em[0]) if em else 0), vmap, emap)
    if not rec.identities_hold():
        raise InternalConsistencyError("split matrices do not factor the adjacency matrices")
    return rec


def out_split(g: Graph, p: Partition) -> SplitRecord:
    if p.kind != OUT:
        p = OutPartition(p.vertex, p.cells)
    return _split(g, p)


def in_split(g: Graph, p: Partition) -> SplitRecord:
    if p.kind != IN:
        p = InPartition(p.vertex, p.cells)
    return _split(g, p)


# -- balanced in-splits -----------------------------------------------------

@dataclass(frozen=True)
class BalancedSplit:
    """Two in-splits of one graph at one vertex with equal cell counts.

    Vertex and edge ids of the two results coincide, which is the
    identification used by every later construction.
    """

    e: SplitRecord
    f: SplitRecord
    triple: BeeTriple

    @property
    def base(self) -> Graph:
        return self.e.source

    @property
    def vertex(self) -> str:
        return self.e.partition.vertex


def split_triple(e: SplitRecord, f: SplitRecord) -> BeeTriple:
    """(R_E, S, R_F) = (Em_E, D^t, Em_F) for two in-splits sharing D."""
    if e.D != f.D:
        raise SplitError("the two in-splits do not share a division matrix")
    return BeeTriple(e.Em, e.D.T, f.Em)


def balanced_in_split(g: Graph, v: str, pE, pF) -> BalancedSplit:
    pE = pE if isinstance(pE, Partition) else InPartition(v, pE)
    pF = pF if isinstance(pF, Partition) else InPartition(v, pF)
    if pE.vertex != v or pF.vertex != v:
        raise SplitError(f"both partitions must be at {v!r}")
    if pE.n != pF.n:
        raise SplitError(f"cell counts differ: {pE.n} vs {pF.n}")
    re, rf = in_split(g, pE), in_split(g, pF)
    t = split_triple(re, rf)
    if not verify_balanced_elementary(adjacency_matrix(re.result), adjacency_matrix(rf.result), t):
        raise InternalConsistencyError("balanced split triple does not verify")
    return BalancedSplit(re, rf, t)


@dataclass(frozen=True)
class ScriptStep:
    vertex: str
    cells_E: tuple[tuple[str, ...], ...]
    cells_F: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "cells_E", tuple(tuple(c) for c in self.cells_E))
        object.__setattr__(self, "cells_F", tuple(tuple(c) for c in self.cells_F))

    @property
    def n(self) -> int:
        return len(self.cells_E)


@dataclass(frozen=True)
class SplitScript:
    base: Graph
    steps: tuple[ScriptStep, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        return {
            "base": graph_to_dict(self.base),
            "steps": [
                {"vertex": s.vertex, "cells_E": [list(c) for c in s.cells_E], "cells_F": [list(c) for c in s.cells_F]}
                for s in self.steps
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> SplitScript:
        try:
            steps = tuple(ScriptStep(s["vertex"], s["cells_E"], s["cells_F"]) for s in d.get("steps", ()))
            return cls(graph_from_dict(d["base"]), steps)
        except (KeyError, TypeError) as exc:
            raise SplitError(f"malformed script document: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> SplitScript:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class History:
    script: SplitScript
    splits: tuple[BalancedSplit, ...]

    @property
    def depth(self) -> int:
        return len(self.splits)

    def E(self, j: int | None = None) -> Graph:
        j = self.depth if j is None else j
        return self.script.base if j == 0 else self.splits[j - 1].e.result

    def F(self, j: int | None = None) -> Graph:
        j = self.depth if j is None else j
        return self.script.base if j == 0 else self.splits[j - 1].f.result

    @property
    def triples(self) -> tuple[BeeTriple, ...]:
        return tuple(s.triple for s in self.splits)


def iterated_balanced_in_split(script: SplitScript) -> tuple[Graph, Graph, History]:
    E = F = script.base
    splits = []
    for k, step in enumerate(script.steps, 1):
        if step.vertex not in E.vertices or step.vertex not in F.vertices:
            raise SplitError(f"step {k}: vertex {step.vertex!r} is not in both branch graphs")
        if len(step.cells_E) != len(step.cells_F):
            raise SplitError(f"step {k}: cell counts differ ({len(step.cells_E)} vs {len(step.cells_F)})")
        try:
            re = in_split(E, InPartition(step.vertex, step.cells_E))
            rf = in_split(F, InPartition(step.vertex, step.cells_F))
        except SplitError as exc:
            raise SplitError(f"step {k}: {exc}") from None
        if re.result.vertices != rf.result.vertices or re.result.edges != rf.result.edges:
            raise InternalConsistencyError(f"step {k}: branch labels diverged")
        splits.append(BalancedSplit(re, rf, split_triple(re, rf)))
        E, F = re.result, rf.result
    return E, F, History(script, tuple(splits))


# -- reading splits off matrices --------------------------------------------

def matrices_to_split(g: Graph, D, Em, kind: str, ordering: Sequence[str] | None = None) -> SplitRecord:
    """Rebuild a split of ``g`` realizing the factorization (D, Em).

    Edges go to cells in edge order, each filling the first cell that
    still has room for its other endpoint.
    """
    D, Em = as_matrix(D), as_matrix(Em)
    order = list(ordering) if ordering is not None else list(g.vertices)
    if sorted(order) != sorted(g.vertices):
        raise SplitError("ordering must list every vertex once")
    if not is_division_matrix(D):
        raise MatrixError("D is not a division matrix")
    A = adjacency_matrix(g, order)
    if D.rows != A.rows:
        raise MatrixError(f"D has {D.rows} rows but the graph has {A.rows} vertices")
    if kind == OUT:
        lhs = D @ Em if D.cols == Em.rows else None
    elif kind == IN:
        lhs = Em @ D.T if Em.cols == D.cols else None
    else:
        raise SplitError(f"unknown split kind {kind!r}")
    if lhs is None:
        raise MatrixError(f"D is {D.rows}x{D.cols} and Em is {Em.rows}x{Em.cols}; they do not compose")
    if lhs != A:
        name = "D*Em" if kind == OUT else "Em*D^t"
        raise MatrixError(f"{name} != A_g; residual {residual(lhs, A)}")
    wide = [i for i in range(D.rows) if sum(D.row(i)) > 1]
    if len(wide) > 1:
        raise SplitError("D splits more than one vertex; that is a composite of splits")
    vi = wide[0] if wide else 0
    v = order[vi]
    kids = [j for j in range(D.cols) if D[vi, j]]
    idx = {w: i for i, w in enumerate(order)}
    if kind == OUT:
        room = {j: list(Em.row(j)) for j in kids}
        cells: list[list[str]] = [[] for _ in kids]
        for e in g.out_edges(v):
            u = idx[g.dst(e)]
            for c, j in enumerate(kids):
                if room[j][u]:
                    room[j][u] -= 1
                    cells[c].append(e)
                    break
        if any(not c for c in cells):
            raise SplitError("a zero row of Em would give an empty out-split cell")
        return out_split(g, OutPartition(v, cells))
    room = {j: list(Em.col(j)) for j in kids}
    cells = [[] for _ in kids]
    for e in g.in_edges(v):
        u = idx[g.src(e)]
        for c, j in enumerate(kids):
            if room[j][u]:
                room[j][u] -= 1
                cells[c].append(e)
                break
    return in_split(g, InPartition(v, cells))


# -- connecting an l-step split by elementary ones --------------------------

@dataclass(frozen=True)
class ChainLink:
    """One elementary balanced in-split; ``left``/``right`` are the chain graphs."""

    split: BalancedSplit
    left: Graph
    right: Graph
    triple: BeeTriple


@dataclass(frozen=True)
class Chain:
    graphs: tuple[Graph, ...]
    links: tuple[ChainLink, ...]
    g_prime: Graph
    attached_sources: tuple[str, ...]
    certificate: BsseCertificate

    def __len__(self) -> int:
        return len(self.links)


def _attach(lower: Graph, parent: SplitRecord, upper: Graph, upper_core: Graph,
            split_up: SplitRecord, cells_lower: tuple[tuple[str, ...], ...]) -> tuple[Graph, Partition]:
    """Build ``lower'`` and its partition so that in-splitting it gives ``upper``.

    ``parent`` splits ``lower`` into ``upper_core``; ``split_up`` splits the
    primed graph above (``upper_core`` plus its attached sources) with every
    edge in the first cell, giving ``upper``.
    """
    v = parent.partition.vertex
    core_v = set(upper_core.vertices)
    core_e = set(upper_core.edges)

    def lift_v(x: str) -> str:  # upper vertex -> lower' vertex
        y, _ = split_up.vertex_map[x]
        return parent.vertex_map[y][0] if y in core_v else x

    attached_v = [x for x in upper.vertices if split_up.vertex_map[x][0] not in core_v or split_up.vertex_map[x][1] > 1]
    attached_e = [e for e in upper.edges if upper.src(e) in attached_v]
    for x in attached_v:
        if x in lower.vertices:
            raise InternalConsistencyError(f"attached vertex {x!r} collides with an existing vertex")
    # every core edge of upper (first-cell copy) must map to a lower edge
    for e in upper.edges:
        if upper.src(e) in attached_v:
            continue
        y, _ = split_up.edge_map[e]
        if y not in core_e:
            raise InternalConsistencyError(f"edge {e!r} has no parent in the core graph")
    verts = list(lower.vertices) + attached_v
    edges = list(lower.edge_triples()) + [(e, upper.src(e), lift_v(upper.dst(e))) for e in attached_e]
    primed = Graph(verts, edges)
    cells = [list(c) for c in cells_lower]
    for e in attached_e:
        tgt = split_up.vertex_map[upper.dst(e)][0]
        w, i = parent.vertex_map[tgt]
        if w == v:
            cells[i - 1].append(e)
    return primed, InPartition(v, cells)


def _side(h: History, branch: str):
    """Primed graphs and first-cell splits down one branch.

    Returns the list of (base graph, partition pair graph) per rung from the
    top: each element is (primed base, cells for the upper graph, first-cell
    split record) for j = l-1 .. 1, and the final primed base graph.
    """
    ell = h.depth
    rec = (lambda j: h.splits[j].e) if branch == "E" else (lambda j: h.splits[j].f)
    graph = h.E if branch == "E" else h.F
    # primed[j] is E'_(j); B[j] is the first-cell split of E'_(j) at v_(j)
    primed = {ell - 1: graph(ell - 1)}
    B: dict[int, SplitRecord] = {}
    parts: dict[int, Partition] = {}
    for j in range(ell - 1, 0, -1):
        step = h.script.steps[j]
        B[j] = in_split(primed[j], single_cell(primed[j], step.vertex, IN, step.n))
        lower_rec = rec(j - 1)
        cells_lower = lower_rec.partition.cells
        primed[j - 1], parts[j - 1] = _attach(graph(j - 1), lower_rec, B[j].result, graph(j), B[j], cells_lower)
    return primed, B, parts


def connect_by_elementary(script: SplitScript) -> Chain:
    """Connect the two ends of an l-step balanced in-split (l >= 2) by 2l - 1 elementary ones."""
    if len(script) < 2:
        raise SplitError("a chain needs a script with at least two steps")
    _, _, h = iterated_balanced_in_split(script)
    ell = h.depth
    pE, BE, partsE = _side(h, "E")
    pF, BF, partsF = _side(h, "F")
    g_prime = pE[0]
    if g_prime != pF[0]:
        raise InternalConsistencyError("the two branches produce different primed base graphs")

    splits: list[tuple[BalancedSplit, Graph, Graph]] = []
    top = script.steps[ell - 1]
    # E_(l) and B_(l-1) over E_(l-1)
    bs = balanced_in_split(h.E(ell - 1), top.vertex, top.cells_E, single_cell(h.E(ell - 1), top.vertex, IN, top.n).cells)
    splits.append((bs, h.E(ell), BE[ell - 1].result))
    for j in range(ell - 1, 1, -1):
        v = script.steps[j - 1].vertex
        bs = balanced_in_split(pE[j - 1], v, partsE[j - 1], single_cell(pE[j - 1], v, IN, script.steps[j - 1].n))
        splits.append((bs, BE[j].result, BE[j - 1].result))
    v0 = script.steps[0].vertex
    bs = balanced_in_split(g_prime, v0, partsE[0], partsF[0])
    splits.append((bs, BE[1].result, BF[1].result))
    for j in range(2, ell):
        v = script.steps[j - 1].vertex
        bs = balanced_in_split(pF[j - 1], v, single_cell(pF[j - 1], v, IN, script.steps[j - 1].n), partsF[j - 1])
        splits.append((bs, BF[j - 1].result, BF[j].result))
    bs = balanced_in_split(h.F(ell - 1), top.vertex, single_cell(h.F(ell - 1), top.vertex, IN, top.n).cells, top.cells_F)
    splits.append((bs, BF[ell - 1].result, h.F(ell)))

    graphs = [splits[0][1]] + [right for _, _, right in splits]
    # the certificate keeps one running index order, starting from E_(l)'s own
    order = list(graphs[0].vertices)
    links: list[ChainLink] = []
    mats = [adjacency_matrix(graphs[0])]
    for bs, left, right in splits:
        X, Y = bs.e.result, bs.f.result
        to_left, to_right = _iso(X, left), _iso(Y, right)
        back = {y: x for x, y in to_left.items()}
        pos = {x: k for k, x in enumerate(X.vertices)}
        perm = [pos[back[y]] for y in order]
        t = bs.triple.permuted(perm)
        B = t.s @ t.r_b
        if not verify_balanced_elementary(mats[-1], B, t):
            raise InternalConsistencyError("chain link does not verify after alignment")
        links.append(ChainLink(bs, left, right, t))
        mats.append(B)
        order = [to_right[X.vertices[k]] for k in perm]
    cert = BsseCertificate(tuple(mats), tuple(l.triple for l in links))
    attached = tuple(v for v in g_prime.vertices if v not in script.base.vertices)
    return Chain(tuple(graphs), tuple(links), g_prime, attached, cert)


def _iso(X: Graph, Y: Graph) -> dict[str, str]:
    if X == Y:
        return {v: v for v in X.vertices}
    pi = are_isomorphic(X, Y, max_vertices=None)
    if pi is None:
        raise InternalConsistencyError("chain graph does not match the split it should equal")
    return dict(pi.forward)
