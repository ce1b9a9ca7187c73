"""(l, c)-block maps between edge shifts, represented on finite prefixes.

A block map sends E-paths of length ``1 + l + c`` to F-paths of length
``1 + l``.  It acts on longer paths by sliding: the first window gives the
first ``1 + l`` output edges and every later window contributes its edge at
index ``l``.  Nothing here touches infinite paths; every property is checked
exhaustively on prefixes of an explicit depth.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

from .errors import BlockMapError, InternalConsistencyError
from .graph import Graph, HigherBlock, adjacency_matrix, higher_block_graph, is_path, path_id, paths_of_length
from .intmat import BeeTriple, verify_balanced_elementary

Path = tuple


@dataclass(frozen=True, eq=False)
class BlockMap:
    source: Graph
    target: Graph
    l: int
    c: int
    table: Mapping[Path, Path]

    @property
    def window(self) -> int:
        return 1 + self.l + self.c

    def __call__(self, x: Sequence[str]) -> Path:
        return apply_prefix(self, x)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockMap):
            return NotImplemented
        return (self.l, self.c, self.source, self.target) == (other.l, other.c, other.source, other.target) and dict(
            self.table
        ) == dict(other.table)

    def __hash__(self) -> int:
        return hash((self.l, self.c, self.source, self.target, len(self.table)))

    def __repr__(self) -> str:
        return f"BlockMap(l={self.l}, c={self.c}, {len(self.table)} entries)"

    def with_table(self, table: Mapping[Path, Path]) -> BlockMap:
        """Same signature, new table; no validation."""
        return BlockMap(self.source, self.target, self.l, self.c, dict(table))

    def is_table_bijective(self) -> bool:
        vals = list(self.table.values())
        if len(set(vals)) != len(vals):
            return False
        return set(vals) == set(paths_of_length(self.target, 1 + self.l))


def make_block_map(E: Graph, F: Graph, l: int, c: int, table: Mapping[Sequence[str], Sequence[str]]) -> BlockMap:
    """Validate totality, output shape and compatibility, then wrap."""
    if l < 0 or c < 0:
        raise BlockMapError("l and c must be nonnegative")
    E.require_no_sinks("source graph")
    F.require_no_sinks("target graph")
    tab = {tuple(k): tuple(v) for k, v in table.items()}
    domain = paths_of_length(E, 1 + l + c)
    for x in domain:
        if x not in tab:
            raise BlockMapError(f"table has no entry for {path_id(x)}")
    extra = set(tab) - set(domain)
    if extra:
        raise BlockMapError(f"table entry for {path_id(sorted(extra)[0])} is not a path of length {1 + l + c}")
    for x, y in tab.items():
        if len(y) != 1 + l or not is_path(F, y):
            raise BlockMapError(f"image of {path_id(x)} is not an F-path of length {1 + l}: {path_id(y)}")
    for x in paths_of_length(E, 2 + l + c):
        a = tab[x[:-1]][l]
        b = tab[x[1:]][l]
        if F.dst(a) != F.src(b):
            raise BlockMapError(f"incompatible at {path_id(x)}: {a} then {b} is not a path")
    return BlockMap(E, F, l, c, tab)


def identity_map(g: Graph) -> BlockMap:
    return BlockMap(g, g, 0, 0, {(e,): (e,) for e in g.edges})


def higher_block_map(g: Graph, N: int) -> tuple[HigherBlock, BlockMap]:
    """The canonical (0, N-1)-block map from ``g`` onto its N-th higher block graph."""
    hb = higher_block_graph(g, N)
    table = {x: (hb.code[x],) for x in paths_of_length(g, N)}
    return hb, BlockMap(g, hb.graph, 0, N - 1, table)


def _slide(bm: BlockMap, x: Sequence[str]) -> Path:
    w = bm.window
    out = list(bm.table[tuple(x[:w])])
    for j in range(1, len(x) - w + 1):
        out.append(bm.table[tuple(x[j:j + w])][bm.l])
    return tuple(out)


def extend(bm: BlockMap, i: int) -> dict[Path, Path]:
    if i < 0:
        raise ValueError("i must be nonnegative")
    if i == 0:
        return dict(bm.table)
    return {x: _slide(bm, x) for x in paths_of_length(bm.source, bm.window + i)}


def apply_prefix(bm: BlockMap, x: Sequence[str]) -> Path:
    x = tuple(x)
    if len(x) < bm.window:
        raise BlockMapError(f"prefix of length {len(x)} is shorter than the window {bm.window}")
    if not is_path(bm.source, x):
        raise BlockMapError(f"{path_id(x)} is not a path in the source graph")
    try:
        return _slide(bm, x)
    except KeyError as exc:
        raise BlockMapError(f"table has no entry for {path_id(exc.args[0])}") from None


# -- checks -----------------------------------------------------------------

@dataclass(frozen=True)
class SlidingReport:
    ok: bool
    depth: int
    checked: int
    counterexample: Path | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        d = {"ok": self.ok, "depth": self.depth, "checked": self.checked}
        if self.counterexample is not None:
            d["counterexample"] = list(self.counterexample)
            d["reason"] = self.reason
        return d


def check_sliding(bm: BlockMap, depth: int) -> SlidingReport:
    """Every prefix image is an F-path and dropping l+1 output edges equals
    dropping l edges of the image of the shifted prefix."""
    if depth < bm.window + 1:
        raise ValueError(f"depth must be at least {bm.window + 1}")
    F, l = bm.target, bm.l
    n = 0
    for x in paths_of_length(bm.source, depth):
        n += 1
        try:
            y = _slide(bm, x)
            y1 = _slide(bm, x[1:])
        except KeyError as exc:
            return SlidingReport(False, depth, n, x, f"no table entry for {path_id(exc.args[0])}")
        if not is_path(F, y):
            return SlidingReport(False, depth, n, x, f"image {path_id(y)} is not an F-path")
        if y[l + 1:] != y1[l:]:
            return SlidingReport(False, depth, n, x, "shift identity fails")
    return SlidingReport(True, depth, n)


@dataclass(frozen=True)
class SurjectivityResult:
    k: int
    ok: bool
    missing: Path | None = None


@dataclass(frozen=True)
class InjectivityResult:
    k: int
    K: int | None
    K_max: int
    collision: tuple[Path, Path] | None = None

    @property
    def ok(self) -> bool:
        return self.K is not None


@dataclass(frozen=True)
class ConditionReport:
    l: int
    c: int
    surjectivity: tuple[SurjectivityResult, ...]
    injectivity: tuple[InjectivityResult, ...]

    @property
    def surjective(self) -> bool:
        return all(r.ok for r in self.surjectivity)

    @property
    def injective(self) -> bool:
        return all(r.ok for r in self.injectivity)

    @property
    def bijective(self) -> bool:
        return self.surjective and self.injective

    @property
    def k_max(self) -> int:
        return self.surjectivity[-1].k if self.surjectivity else self.l

    def K_values(self) -> dict[int, int | None]:
        return {r.k: r.K for r in self.injectivity}

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "c": self.c,
            "surjectivity": [
                {"k": r.k, "ok": r.ok, **({"missing": list(r.missing)} if r.missing else {})} for r in self.surjectivity
            ],
            "injectivity": [
                {"k": r.k, "K": r.K, "K_max": r.K_max, "ok": r.ok} for r in self.injectivity
            ],
            "surjective": self.surjective,
            "injective": self.injective,
        }


def check_conditions(bm: BlockMap, k_max: int, K_max: int) -> ConditionReport:
    """Surjectivity and injectivity conditions for k = l .. k_max.

    Injectivity records the smallest K <= K_max that works for each k, or
    None when the bound runs out.  Neither verdict says anything beyond the
    tested range.
    """
    l, c = bm.l, bm.c
    if k_max < l:
        raise ValueError("k_max must be at least l")
    surj, inj = [], []
    for k in range(l, k_max + 1):
        image = {_slide(bm, x) for x in paths_of_length(bm.source, 1 + k + c)}
        missing = next((b for b in paths_of_length(bm.target, 1 + k) if b not in image), None)
        surj.append(SurjectivityResult(k, missing is None, missing))

        found, collision = None, None
        for K in range(max(0, l + c - k), K_max + 1):
            seen: dict[Path, Path] = {}
            clash = None
            for x in paths_of_length(bm.source, 1 + k + K):
                y = _slide(bm, x)
                prev = seen.setdefault(y, x)
                if prev[:k + 1] != x[:k + 1]:
                    clash = (prev, x)
                    break
            if clash is None:
                found = K
                break
            collision = clash
        inj.append(InjectivityResult(k, found, K_max, None if found is not None else collision))
    return ConditionReport(l, c, tuple(surj), tuple(inj))


def roundtrip_mismatch(fwd: BlockMap, back: BlockMap, depth: int) -> Path | None:
    """First E-path x of length ``depth`` with back(fwd(x)) != x truncated, else None."""
    lag = fwd.c + back.c
    if depth < fwd.window + back.window - 1:
        raise ValueError("depth too small for the composite window")
    for x in paths_of_length(fwd.source, depth):
        try:
            z = _slide(back, _slide(fwd, x))
        except KeyError:
            # fwd(x) left the target's paths, so back has no window for it
            return x
        if z != x[:depth - lag]:
            return x
    return None


# -- constructions ----------------------------------------------------------

def inverse_table_map(bm: BlockMap) -> BlockMap:
    """For a bijective (l, 0) table, the map given by the inverse table."""
    if bm.c != 0:
        raise BlockMapError("only (l, 0) maps have a table inverse")
    if not bm.is_table_bijective():
        raise BlockMapError("table is not bijective")
    return BlockMap(bm.target, bm.source, bm.l, 0, {y: x for x, y in bm.table.items()})


def compose(first: BlockMap, second: BlockMap) -> BlockMap:
    """``second`` after ``first``; constants add."""
    if first.target != second.source:
        raise BlockMapError("target of the first map is not the source of the second")
    l, c = first.l + second.l, first.c + second.c
    table = {x: _slide(second, _slide(first, x)) for x in paths_of_length(first.source, 1 + l + c)}
    return BlockMap(first.source, second.target, l, c, table)


def lift_constants(bm: BlockMap, l: int, c: int) -> BlockMap:
    """View an (l0, c0) map as an (l, c) map for l >= l0, c >= c0; the induced map is unchanged."""
    if l < bm.l or c < bm.c:
        raise BlockMapError("constants can only be raised")
    if (l, c) == (bm.l, bm.c):
        return bm
    head = bm.window + (l - bm.l)
    table = {x: _slide(bm, x[:head]) for x in paths_of_length(bm.source, 1 + l + c)}
    return BlockMap(bm.source, bm.target, l, c, table)


def reduce_continuity(bm: BlockMap) -> tuple[HigherBlock, BlockMap]:
    """Trade anticipation for a higher block presentation of the source.

    Returns the (c+1)-th higher block graph of the source and an (l, 0)-map
    on it whose composite with the canonical map is ``bm``.
    """
    if bm.c == 0:
        return higher_block_graph(bm.source, 1), bm
    hb = higher_block_graph(bm.source, bm.c + 1)
    table = {}
    for x in paths_of_length(bm.source, bm.window):
        xb = tuple(hb.code[x[j:j + bm.c + 1]] for j in range(1 + bm.l))
        table[xb] = bm.table[x]
    return hb, BlockMap(hb.graph, bm.target, bm.l, 0, table)


def _lift(path_below: Sequence[str], first: str, G: Graph, edge_map: Mapping[str, tuple[str, int]],
          children: Mapping[str, list[str]]) -> Path:
    """The unique path in G over ``path_below`` starting with the edge ``first``."""
    if edge_map[first][0] != path_below[0]:
        raise InternalConsistencyError(f"{first} does not lie over {path_below[0]}")
    out = [first]
    for e in path_below[1:]:
        cands = [c for c in children[e] if G.src(c) == G.dst(out[-1])]
        if len(cands) != 1:
            raise InternalConsistencyError(f"no unique lift of {e} after {out[-1]} ({len(cands)} candidates)")
        out.append(cands[0])
    return tuple(out)


def psi_from_history(h, reverse: bool = False) -> BlockMap:
    """The bijective (l, 0)-block map between the two ends of an l-step balanced in-split.

    Built rung by rung: the map one level down is extended by one window,
    applied to the forgetful image, and lifted back keeping the first edge.
    ``reverse`` builds the map from the F branch to the E branch.
    """
    base = h.script.base
    psi = identity_map(base)
    for j, split in enumerate(h.splits, 1):
        src_rec, dst_rec = (split.f, split.e) if reverse else (split.e, split.f)
        S, T = src_rec.result, dst_rec.result
        children: dict[str, list[str]] = defaultdict(list)
        for e in T.edges:
            children[dst_rec.edge_map[e][0]].append(e)
        ext = extend(psi, 1)
        table = {}
        for x in paths_of_length(S, j + 1):
            below = tuple(src_rec.edge_map[e][0] for e in x)
            table[x] = _lift(ext[below], x[0], T, dst_rec.edge_map, children)
        psi = BlockMap(S, T, j, 0, table)
    return psi


def intertwining_failures(h, j: int, psi_j: BlockMap, psi_prev: BlockMap) -> list[Path]:
    """Paths x of length j+1 where extend(psi_prev)(q_E x) != q_F(psi_j x)."""
    split = h.splits[j - 1]
    ext = extend(psi_prev, 1)
    bad = []
    for x, y in psi_j.table.items():
        qx = tuple(split.e.edge_map[e][0] for e in x)
        qy = tuple(split.f.edge_map[e][0] for e in y)
        if ext[qx] != qy:
            bad.append(x)
    return bad


# -- the map attached to a balanced elementary triple -----------------------

@dataclass(frozen=True)
class TriplePairing:
    """Bijections fixed for a triple: graph edges <-> two-step factor paths.

    Factor edges are tuples ``("S", i, k, t)``, ``("RE", k, i, t)`` and
    ``("RF", k, i, t)``; ``t`` numbers parallel copies.  ``beta`` sends an
    (R_E, S) path to the matching (R_F, S) path with the same endpoints.
    """

    e_edges: Mapping[str, tuple]
    f_edges: Mapping[str, tuple]
    beta: Mapping[tuple, tuple]

    def to_dict(self) -> dict:
        fmt = lambda p: [list(map(str, p[0])), list(map(str, p[1]))]
        return {
            "E": {e: fmt(p) for e, p in self.e_edges.items()},
            "F": {e: fmt(p) for e, p in self.f_edges.items()},
            "beta": [[fmt(a), fmt(b)] for a, b in self.beta.items()],
        }


def _factor_paths(left, right, left_tag: str, right_tag: str, i: int, j: int) -> list[tuple]:
    out = []
    for k in range(left.cols):
        for t in range(left[i, k]):
            for u in range(right[k, j]):
                out.append(((left_tag, i, k, t), (right_tag, k, j, u)))
    return out


def triple_pairing(E: Graph, F: Graph, t: BeeTriple) -> TriplePairing:
    """Canonical pairing: both sides enumerated lexicographically, matched in order."""
    A_E, A_F = adjacency_matrix(E), adjacency_matrix(F)
    if not verify_balanced_elementary(A_E, A_F, t):
        raise BlockMapError("triple does not verify against the two adjacency matrices")
    S, RE, RF = t.s, t.r_a, t.r_b
    n, m = S.rows, S.cols
    pairs = {}
    for name, G, R, tag in (("E", E, RE, "RE"), ("F", F, RF, "RF")):
        by_ends: dict[tuple[int, int], list[str]] = defaultdict(list)
        idx = {v: k for k, v in enumerate(G.vertices)}
        for e in G.edges:
            by_ends[idx[G.src(e)], idx[G.dst(e)]].append(e)
        table = {}
        for i in range(n):
            for j in range(n):
                paths = _factor_paths(S, R, "S", tag, i, j)
                edges = by_ends.get((i, j), [])
                if len(paths) != len(edges):
                    raise BlockMapError(f"fiber {name}[{i},{j}] has {len(edges)} edges but {len(paths)} factor paths")
                table.update(zip(edges, paths))
        pairs[name] = table
    beta = {}
    for k in range(m):
        for k2 in range(m):
            a = _factor_paths(RE, S, "RE", "S", k, k2)
            b = _factor_paths(RF, S, "RF", "S", k, k2)
            if len(a) != len(b):
                raise BlockMapError(f"fiber ({k},{k2}) of R_E S and R_F S differ in size")
            beta.update(zip(a, b))
    return TriplePairing(pairs["E"], pairs["F"], beta)


def _triple_table(src: Graph, tgt: Graph, src_pairs, tgt_pairs, beta) -> dict[Path, Path]:
    inv = {v: k for k, v in tgt_pairs.items()}
    table = {}
    for x in paths_of_length(src, 3):
        (s0, r0), (s1, r1), (s2, _) = (src_pairs[e] for e in x)
        r0b, s1b = beta[(r0, s1)]
        r1b, _ = beta[(r1, s2)]
        table[x] = (inv[(s0, r0b)], inv[(s1b, r1b)])
    return table


def triple_map_pair(E: Graph, F: Graph, t: BeeTriple, pairing: TriplePairing | None = None):
    """(forward, backward, pairing) for a verified triple; both maps are (1, 1)."""
    p = pairing or triple_pairing(E, F, t)
    E.require_no_sinks("source graph")
    F.require_no_sinks("target graph")
    fwd = BlockMap(E, F, 1, 1, _triple_table(E, F, p.e_edges, p.f_edges, p.beta))
    back_beta = {v: k for k, v in p.beta.items()}
    back = BlockMap(F, E, 1, 1, _triple_table(F, E, p.f_edges, p.e_edges, back_beta))
    return fwd, back, p


def block_map_from_triple(E: Graph, F: Graph, t: BeeTriple, pairing: TriplePairing | None = None) -> BlockMap:
    fwd, _, _ = triple_map_pair(E, F, t, pairing)
    return make_block_map(E, F, 1, 1, fwd.table)


# -- serialization ----------------------------------------------------------

def blockmap_to_dict(bm: BlockMap) -> dict:
    return {
        "l": bm.l,
        "c": bm.c,
        "entries": [{"in": list(x), "out": list(bm.table[x])} for x in sorted(bm.table, key=_order(bm.source))],
    }


def _order(g: Graph):
    pos = {e: i for i, e in enumerate(g.edges)}
    return lambda x: tuple(pos[e] for e in x)


def blockmap_from_dict(d: Mapping, E: Graph, F: Graph) -> BlockMap:
    try:
        table = {tuple(ent["in"]): tuple(ent["out"]) for ent in d["entries"]}
        return make_block_map(E, F, int(d["l"]), int(d["c"]), table)
    except (KeyError, TypeError) as exc:
        raise BlockMapError(f"malformed block map document: {exc}") from None


def blockmap_to_json(bm: BlockMap) -> str:
    return json.dumps(blockmap_to_dict(bm), indent=2)
