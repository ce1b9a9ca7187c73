"""Recovering a balanced in-split ladder from an eventual conjugacy.

Given h and its inverse as (l, c)-block maps, the graphs below are built
from windows of realizable pairs (x, y = h(x)).  A window over positions
[a, b) of a path is the tuple ``(vertex at a, x_a, ..., x_{b-1})``, so an
empty window still remembers its vertex.  All windows here are half-open;
the x and y parts of vertex windows have length 2c throughout.

* ``G``: vertices (x[l, l+2c), y[l, l+2c)).
* ``E_j``: vertices (x[l-j, l+2c), y[l, l+2c)); ``F_j`` widens y instead.
* ``Eout_i``: vertices (x[0, l+2c), y[l, l+i)) for i = 0..2c.

Edges are the same windows widened by one on the right; the range drops
the first symbol of each part.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .blockmap import BlockMap, _slide, lift_constants, roundtrip_mismatch
from .errors import BlockMapError, InternalConsistencyError
from .graph import Graph, adjacency_matrix, are_isomorphic, higher_block_graph, path_id, paths_of_length
from .intmat import BeeTriple, NonNegMatrix, division_matrix, verify_balanced_elementary

Window = tuple


def _window(g: Graph, x: Sequence[str], a: int, b: int) -> Window:
    v = g.src(x[a]) if a < len(x) else g.dst(x[-1])
    return (v,) + tuple(x[a:b])


def _drop_first(g: Graph, w: Window) -> Window:
    return (g.dst(w[1]),) + w[2:] if len(w) > 1 else w


def _wid(w: Window) -> str:
    return path_id(w)


def _key_id(key: tuple[Window, ...]) -> str:
    return "|".join(_wid(w) for w in key)


@dataclass(frozen=True)
class WindowGraph:
    graph: Graph
    keys: dict  # vertex id -> key
    edge_keys: dict  # edge id -> key


def _window_graph(pairs, E: Graph, F: Graph, xa: int, xb: int, ya: int, yb: int) -> WindowGraph:
    """Vertices (x[xa, xb), y[ya, yb)); edges widen both right ends by one."""
    vkeys: dict[str, tuple] = {}
    ekeys: dict[str, tuple] = {}
    triples = []
    for x, y in pairs:
        ek = (_window(E, x, xa, xb + 1), _window(F, y, ya, yb + 1))
        eid = _key_id(ek)
        if eid in ekeys:
            continue
        sk = (ek[0][:-1], ek[1][:-1])
        rk = (_drop_first(E, ek[0]), _drop_first(F, ek[1]))
        ekeys[eid] = ek
        vkeys.setdefault(_key_id(sk), sk)
        triples.append((eid, _key_id(sk), _key_id(rk), rk))
    for _, _, rid, rk in triples:
        if rid not in vkeys:
            raise InternalConsistencyError(f"range window {rid} is not a realizable vertex")
    order = sorted(vkeys)
    g = Graph(order, sorted((e, s, r) for e, s, r, _ in triples))
    return WindowGraph(g, vkeys, ekeys)


@dataclass(frozen=True)
class Rung:
    """One level of the ladder: an in-split of both sides, read off the projection."""

    j: int
    D: NonNegMatrix
    Em_E: NonNegMatrix
    Em_F: NonNegMatrix
    split_counts: dict
    identities_hold: bool
    shared_division: bool
    triple: BeeTriple | None = None
    triple_verified: bool | None = None


@dataclass(frozen=True)
class Decomposition:
    l: int
    c: int
    G: Graph
    E_ladder: tuple[Graph, ...]
    F_ladder: tuple[Graph, ...]
    rungs: tuple[Rung, ...]
    E_out: tuple[Graph, ...]
    F_out: tuple[Graph, ...]
    out_steps_ok: tuple[bool, ...]
    higher_block_iso: tuple[bool, bool]
    ends_match: tuple[bool, bool]
    depth: int
    top_counts_match: bool = True

    @property
    def ok(self) -> bool:
        return (
            all(r.identities_hold and r.shared_division for r in self.rungs)
            and all(r.triple_verified for r in self.rungs if r.triple is not None)
            and all(self.out_steps_ok)
            and all(self.higher_block_iso)
            and all(self.ends_match)
        )

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "c": self.c,
            "depth": self.depth,
            "G": {"vertices": len(self.G.vertices), "edges": len(self.G.edges)},
            "E_ladder": [len(g.vertices) for g in self.E_ladder],
            "F_ladder": [len(g.vertices) for g in self.F_ladder],
            "rungs": [
                {
                    "j": r.j,
                    "identities": r.identities_hold,
                    "shared_division": r.shared_division,
                    "triple_verified": r.triple_verified,
                }
                for r in self.rungs
            ],
            "out_steps": list(self.out_steps_ok),
            "higher_block_isomorphic": list(self.higher_block_iso),
            "ends_match": list(self.ends_match),
            "top_counts_match": self.top_counts_match,
            "ok": self.ok,
        }


def _projection(upper: WindowGraph, lower: WindowGraph, proj: Callable[[tuple], tuple]) -> list[int]:
    lower_index = {v: i for i, v in enumerate(lower.graph.vertices)}
    parents = []
    for v in upper.graph.vertices:
        pid = _key_id(proj(upper.keys[v]))
        if pid not in lower_index:
            raise InternalConsistencyError(f"vertex {v} projects outside the lower graph")
        parents.append(lower_index[pid])
    return parents


def _in_split_factor(lower: Graph, upper: Graph, parents: list[int]):
    """(D, Em, ok): Em(u, y) read off any child of u; ok iff both in-split identities hold."""
    D = division_matrix(parents, len(lower.vertices))
    A_up = adjacency_matrix(upper)
    first = {}
    for j, p in enumerate(parents):
        first.setdefault(p, j)
    Em = NonNegMatrix([A_up.row(first[u]) for u in range(len(lower.vertices))], cols=len(upper.vertices))
    ok = Em @ D.T == adjacency_matrix(lower) and D.T @ Em == A_up
    return D, Em, ok


def _out_split_ok(lower: Graph, upper: Graph, parents: list[int]) -> bool:
    D = division_matrix(parents, len(lower.vertices))
    A_up = adjacency_matrix(upper)
    first = {}
    for j, p in enumerate(parents):
        first.setdefault(p, j)
    Em = NonNegMatrix([[A_up[x, first[u]] for u in range(len(lower.vertices))] for x in range(len(upper.vertices))],
                      cols=len(lower.vertices))
    return D @ Em == adjacency_matrix(lower) and Em @ D == A_up


def _signatures(ladder_parents: list[list[int]], sizes: list[int]) -> list[list[tuple]]:
    """Shape of the descendant tree below every vertex, level by level."""
    top = len(sizes) - 1
    sig = [None] * (top + 1)
    sig[top] = [()] * sizes[top]
    for j in range(top - 1, -1, -1):
        kids = defaultdict(list)
        for child, p in enumerate(ladder_parents[j]):
            kids[p].append(sig[j + 1][child])
        sig[j] = [tuple(sorted(kids[u])) for u in range(sizes[j])]
    return sig


def _top_counts(parents: list[list[int]], n: int) -> list[int]:
    """Number of top-level descendants of each base vertex."""
    counts = [0] * n
    for top in range(len(parents[-1]) if parents else n):
        u = top
        for level in reversed(parents):
            u = level[u]
        counts[u] += 1
    return counts


def decompose_eventual_conjugacy(h: BlockMap, h_inv: BlockMap, l: int | None = None, c: int | None = None,
                                 depth: int | None = None) -> Decomposition:
    E, F = h.source, h.target
    if h_inv.source != F or h_inv.target != E:
        raise BlockMapError("h_inv must map the target of h back to its source")
    l = max(h.l, h_inv.l) if l is None else l
    c = max(h.c, h_inv.c) if c is None else c
    h, h_inv = lift_constants(h, l, c), lift_constants(h_inv, l, c)
    N = l + 3 * c + 2
    depth = depth or max(N, 2 * (l + c) + 2)
    bad = roundtrip_mismatch(h, h_inv, depth)
    if bad is not None:
        raise BlockMapError(f"h_inv does not invert h on {path_id(bad)}")
    bad = roundtrip_mismatch(h_inv, h, depth)
    if bad is not None:
        raise BlockMapError(f"h does not invert h_inv on {path_id(bad)}")

    pairs = [(x, _slide(h, x)) for x in paths_of_length(E, N)]
    pairs_back = [(_slide(h_inv, y), y) for y in paths_of_length(F, N + c)]
    need = l + 2 * c + 1
    fwd_set = {(x[:need], y[:need]) for x, y in pairs}
    back_set = {(x[:need], y[:need]) for x, y in pairs_back}
    if fwd_set != back_set:
        raise BlockMapError("realizable windows from h and from h_inv disagree")

    top = l + 2 * c
    E_lad = [_window_graph(pairs, E, F, l - j, top, l, top) for j in range(l + 1)]
    F_lad = [_window_graph(pairs, E, F, l, top, l - j, top) for j in range(l + 1)]
    G = E_lad[0]
    if G.graph != F_lad[0].graph:
        raise InternalConsistencyError("the two ladders do not share a base")

    def drop_x(key):
        return (_drop_first(E, key[0]), key[1])

    def drop_y(key):
        return (key[0], _drop_first(F, key[1]))

    pe = [_projection(E_lad[j + 1], E_lad[j], drop_x) for j in range(l)]
    pf = [_projection(F_lad[j + 1], F_lad[j], drop_y) for j in range(l)]
    sig_e = _signatures(pe, [len(w.graph.vertices) for w in E_lad])
    sig_f = _signatures(pf, [len(w.graph.vertices) for w in F_lad])

    # rungs can disagree when sources cut pasts short; the top level still has equal counts per base vertex
    top_counts = _top_counts(pe, len(G.graph.vertices)) == _top_counts(pf, len(G.graph.vertices))

    # identify the two sides level by level, pairing children with equal shapes
    ident = {i: i for i in range(len(G.graph.vertices))}
    rungs = []
    for j in range(l):
        kids_e, kids_f = defaultdict(list), defaultdict(list)
        for ch, p in enumerate(pe[j]):
            kids_e[p].append(ch)
        for ch, p in enumerate(pf[j]):
            kids_f[p].append(ch)
        nxt = {}
        shared = True
        counts = {}
        for u, uf in ident.items():
            a = sorted(kids_e[u], key=lambda ch: sig_e[j + 1][ch])
            b = sorted(kids_f[uf], key=lambda ch: sig_f[j + 1][ch])
            counts[E_lad[j].graph.vertices[u]] = len(a)
            if [sig_e[j + 1][ch] for ch in a] != [sig_f[j + 1][ch] for ch in b]:
                shared = False
            nxt.update(zip(a, b))
        De, Em_e, ok_e = _in_split_factor(E_lad[j].graph, E_lad[j + 1].graph, pe[j])
        Df, Em_f, ok_f = _in_split_factor(F_lad[j].graph, F_lad[j + 1].graph, pf[j])
        triple = verified = None
        if j == 0 and shared:
            # both sides are in-splits of G: put F's children in E's order and share D
            perm = [nxt[i] for i in range(len(E_lad[1].graph.vertices))]
            Em_f_aligned = Em_f.select(cols=perm)
            triple = BeeTriple(Em_e, De.T, Em_f_aligned)
            A_f = adjacency_matrix(F_lad[1].graph).permuted(perm)
            verified = verify_balanced_elementary(adjacency_matrix(E_lad[1].graph), A_f, triple)
        rungs.append(Rung(j + 1, De, Em_e, Em_f, counts, ok_e and ok_f, shared, triple, verified))
        ident = nxt

    # out-split ladders joining E to E_l and F to F_l
    E_out = [_window_graph(pairs, E, F, 0, top, l, l + i) for i in range(2 * c + 1)]
    rev = [(y, x) for x, y in pairs]
    F_out = [_window_graph(rev, F, E, 0, top, l, l + i) for i in range(2 * c + 1)]

    def drop_last(key):
        return (key[0], key[1][:-1])

    steps = []
    for seq in (E_out, F_out):
        for i in range(2 * c):
            steps.append(_out_split_ok(seq[i].graph, seq[i + 1].graph, _projection(seq[i + 1], seq[i], drop_last)))

    hb_e = higher_block_graph(E, top + 1).graph
    hb_f = higher_block_graph(F, top + 1).graph
    iso = (
        are_isomorphic(E_out[0].graph, hb_e, max_vertices=None) is not None,
        are_isomorphic(F_out[0].graph, hb_f, max_vertices=None) is not None,
    )
    ends = (
        are_isomorphic(E_out[-1].graph, E_lad[-1].graph, max_vertices=None) is not None,
        are_isomorphic(F_out[-1].graph, F_lad[-1].graph, max_vertices=None) is not None,
    )
    return Decomposition(
        l, c, G.graph,
        tuple(w.graph for w in E_lad), tuple(w.graph for w in F_lad), tuple(rungs),
        tuple(w.graph for w in E_out), tuple(w.graph for w in F_out),
        tuple(steps), iso, ends, depth, top_counts,
    )
