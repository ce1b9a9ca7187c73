"""Command line front end.

Exit codes: 0 when the construction succeeds or the verdict is positive,
1 for a negative verdict, 2 for usage and input errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import blockmap as bmod
from . import graph as gmod
from . import intmat as imod
from . import moves as mmod
from .equivalence import verify_witness, witness_from_matrices, witness_from_script
from .errors import EvconjError
from .generate import random_graph, random_script
from .ladder import decompose_eventual_conjugacy


class UsageError(Exception):
    pass


def parse_cells(text: str) -> list[list[str]]:
    """``"e,f|g|"`` -> [["e", "f"], ["g"], []]."""
    return [[e.strip() for e in cell.split(",") if e.strip()] for cell in text.split("|")]


def _read(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _graph(path: str) -> gmod.Graph:
    return gmod.graph_from_dict(_read(path))


def _matrix(path: str) -> imod.NonNegMatrix:
    return imod.matrix_from_dict(_read(path))


def _script(path: str) -> mmod.SplitScript:
    return mmod.SplitScript.from_dict(_read(path))


def _emit(args, doc) -> None:
    text = doc if isinstance(doc, str) else json.dumps(doc, indent=2)
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _record(rec: mmod.SplitRecord) -> dict:
    return {
        "graph": gmod.graph_to_dict(rec.result),
        "D": imod.matrix_to_dict(rec.D),
        "Em": imod.matrix_to_dict(rec.Em),
        "new_sources": list(rec.new_sources()),
    }


def _bounds(args) -> imod.Bounds:
    return imod.Bounds(args.m, args.cap, args.budget)


def _write_dot(path: str | None, g: gmod.Graph, name: str) -> None:
    if path:
        Path(path).write_text(gmod.to_dot(g, name), encoding="utf-8")


# -- subcommands ------------------------------------------------------------

def cmd_validate(args) -> int:
    rep = gmod.validate_graph(_graph(args.graph))
    _emit(args, rep.as_dict())
    return 1 if rep.has_sinks else 0


def cmd_paths(args) -> int:
    g = _graph(args.graph)
    _emit(args, [list(p) for p in gmod.paths_of_length(g, args.n)])
    return 0


def cmd_higher_block(args) -> int:
    hb = gmod.higher_block_graph(_graph(args.graph), args.n)
    _emit(args, gmod.graph_to_dict(hb.graph))
    return 0


def cmd_adj(args) -> int:
    if args.matrix:
        _emit(args, gmod.graph_to_dict(gmod.graph_from_matrix(_matrix(args.matrix))))
        return 0
    if not args.graph:
        raise UsageError("adj needs --graph or --matrix")
    order = args.order.split(",") if args.order else None
    _emit(args, imod.matrix_to_dict(gmod.adjacency_matrix(_graph(args.graph), order)))
    return 0


def cmd_iso(args) -> int:
    pi = gmod.are_isomorphic(_graph(args.graph), _graph(args.other), max_vertices=args.max_vertices)
    _emit(args, {"isomorphic": pi is not None, "bijection": dict(pi.forward) if pi else None})
    return 0 if pi else 1


def cmd_out_split(args) -> int:
    rec = mmod.out_split(_graph(args.graph), mmod.OutPartition(args.vertex, parse_cells(args.cells)))
    _write_dot(args.dot, rec.result, "out_split")
    _emit(args, _record(rec))
    return 0


def cmd_in_split(args) -> int:
    rec = mmod.in_split(_graph(args.graph), mmod.InPartition(args.vertex, parse_cells(args.cells)))
    _write_dot(args.dot, rec.result, "in_split")
    _emit(args, _record(rec))
    return 0


def cmd_balanced_split(args) -> int:
    g = _graph(args.graph)
    bs = mmod.balanced_in_split(g, args.vertex, parse_cells(args.cells_e), parse_cells(args.cells_f))
    _emit(args, {"E": _record(bs.e), "F": _record(bs.f), "triple": bs.triple.to_dict()})
    return 0


def cmd_script_run(args) -> int:
    script = _script(args.script)
    E, F, h = mmod.iterated_balanced_in_split(script)
    if args.dot_dir:
        d = Path(args.dot_dir)
        d.mkdir(parents=True, exist_ok=True)
        for j in range(h.depth + 1):
            (d / f"E_{j}.dot").write_text(gmod.to_dot(h.E(j), f"E_{j}"), encoding="utf-8")
            (d / f"F_{j}.dot").write_text(gmod.to_dot(h.F(j), f"F_{j}"), encoding="utf-8")
    _emit(args, {
        "steps": h.depth,
        "E": gmod.graph_to_dict(E),
        "F": gmod.graph_to_dict(F),
        "triples": [t.to_dict() for t in h.triples],
    })
    return 0


def cmd_connect_chain(args) -> int:
    ch = mmod.connect_by_elementary(_script(args.script))
    ok = imod.verify_certificate(ch.certificate)
    _emit(args, {
        "links": len(ch),
        "graphs": [gmod.graph_to_dict(g) for g in ch.graphs],
        "g_prime": gmod.graph_to_dict(ch.g_prime),
        "attached_sources": list(ch.attached_sources),
        "certificate": ch.certificate.to_dict(),
        "verified": ok,
    })
    return 0 if ok else 1


def cmd_bee_verify(args) -> int:
    t = imod.BeeTriple.from_dict(_read(args.triple))
    ok = imod.verify_balanced_elementary(_matrix(args.a), _matrix(args.b), t)
    _emit(args, {"verified": ok})
    return 0 if ok else 1


def cmd_bee_decide(args) -> int:
    dec = imod.search_balanced_elementary(_matrix(args.a), _matrix(args.b), _bounds(args))
    _emit(args, dec.to_dict())
    return 0 if dec.found else 1


def cmd_bsse_search(args) -> int:
    res = imod.bsse_search_report(_matrix(args.a), _matrix(args.b), args.depth, _bounds(args), args.max_states)
    _emit(args, res.to_dict())
    return 0 if res.certificate else 1


def cmd_cert_verify(args) -> int:
    ok = imod.verify_certificate(imod.BsseCertificate.from_dict(_read(args.cert)))
    _emit(args, {"verified": ok})
    return 0 if ok else 1


def _load_map(args, src: str, tgt: str, path: str) -> bmod.BlockMap:
    return bmod.blockmap_from_dict(_read(path), _graph(src), _graph(tgt))


def cmd_blockmap_check(args) -> int:
    bm = _load_map(args, args.source, args.target, args.map)
    depth = args.depth or bm.window + 4
    s = bmod.check_sliding(bm, depth)
    cond = bmod.check_conditions(bm, args.k_max if args.k_max is not None else bm.l + 3, args.K_max)
    _emit(args, {"sliding": s.to_dict(), "conditions": cond.to_dict(), "table_bijective": bm.is_table_bijective()})
    return 0 if s.ok and cond.bijective else 1


def cmd_psi(args) -> int:
    _, _, h = mmod.iterated_balanced_in_split(_script(args.script))
    if h.depth == 0:
        bm = bmod.identity_map(h.script.base)
    else:
        bm = bmod.psi_from_history(h, reverse=args.reverse)
    _emit(args, bmod.blockmap_to_dict(bm))
    return 0


def cmd_triple_map(args) -> int:
    E, F = _graph(args.source), _graph(args.target)
    t = imod.BeeTriple.from_dict(_read(args.triple))
    fwd, back, pairing = bmod.triple_map_pair(E, F, t)
    bm = back if args.reverse else fwd
    bmod.make_block_map(bm.source, bm.target, bm.l, bm.c, bm.table)
    doc = bmod.blockmap_to_dict(bm)
    doc["pairing"] = pairing.to_dict()
    _emit(args, doc)
    return 0


def cmd_reduce_c(args) -> int:
    bm = _load_map(args, args.source, args.target, args.map)
    hb, red = bmod.reduce_continuity(bm)
    _emit(args, {"graph": gmod.graph_to_dict(hb.graph), "map": bmod.blockmap_to_dict(red)})
    return 0


def cmd_decompose(args) -> int:
    if args.script:
        _, _, h = mmod.iterated_balanced_in_split(_script(args.script))
        if h.depth == 0:
            fwd = back = bmod.identity_map(h.script.base)
        else:
            fwd, back = bmod.psi_from_history(h), bmod.psi_from_history(h, reverse=True)
    else:
        if not (args.source and args.target and args.map and args.inverse):
            raise UsageError("decompose needs --script or all of --source, --target, --map, --inverse")
        fwd = _load_map(args, args.source, args.target, args.map)
        back = _load_map(args, args.target, args.source, args.inverse)
    dec = decompose_eventual_conjugacy(fwd, back)
    doc = dec.to_dict()
    doc["base"] = gmod.graph_to_dict(dec.G)
    _emit(args, doc)
    return 0 if dec.ok else 1


def cmd_witness(args) -> int:
    if args.script:
        w = witness_from_script(_script(args.script), args.check_depth)
    else:
        if not (args.source and args.target):
            raise UsageError("witness needs --script or both --source and --target")
        w = witness_from_matrices(_graph(args.source), _graph(args.target), args.depth, _bounds(args),
                                  args.max_states, args.check_depth)
        if w is None:
            _emit(args, {"found": False, "depth": args.depth})
            return 1
    rep = verify_witness(w, args.check_depth)
    _emit(args, w.to_dict(rep))
    return 0 if rep.accepted else 1


def cmd_dot(args) -> int:
    _emit(args, gmod.to_dot(_graph(args.graph), args.name))
    return 0


def cmd_random_script(args) -> int:
    rng = random.Random(args.seed)
    g = random_graph(rng, args.vertices, args.max_out)
    _emit(args, random_script(rng, g, args.steps, args.max_cells).to_dict())
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evconj", description="Graph moves, block maps and balanced shift equivalence.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.set_defaults(func=fn)
        return sp

    def search_flags(sp):
        sp.add_argument("--m", type=int, default=None, help="largest inner dimension (default n)")
        sp.add_argument("--cap", type=int, default=None, help="entry cap (default largest entry)")
        sp.add_argument("--budget", type=int, default=imod.DEFAULT_BUDGET)

    sp = add("validate", cmd_validate, "report sinks and sources")
    sp.add_argument("--graph", required=True)
    sp = add("paths", cmd_paths, "list paths of a given length")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp = add("higher-block", cmd_higher_block, "N-th higher block graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp = add("adj", cmd_adj, "adjacency matrix of a graph, or a graph from a matrix")
    sp.add_argument("--graph")
    sp.add_argument("--matrix")
    sp.add_argument("--order", help="comma separated vertex order")
    sp = add("iso", cmd_iso, "test two graphs for isomorphism")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--other", required=True)
    sp.add_argument("--max-vertices", type=int, default=gmod.DEFAULT_ISO_CAP)
    for name, fn in (("out-split", cmd_out_split), ("in-split", cmd_in_split)):
        sp = add(name, fn, f"{name} at a vertex")
        sp.add_argument("--graph", required=True)
        sp.add_argument("--vertex", required=True)
        sp.add_argument("--cells", required=True, help='cells like "e,f|g|"')
        sp.add_argument("--dot", help="also write the result as DOT")
    sp = add("balanced-split", cmd_balanced_split, "elementary balanced in-split")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--vertex", required=True)
    sp.add_argument("--cells-e", required=True)
    sp.add_argument("--cells-f", required=True)
    sp = add("script-run", cmd_script_run, "replay a split script")
    sp.add_argument("--script", required=True)
    sp.add_argument("--dot-dir", help="write DOT for every stage into this directory")
    sp = add("connect-chain", cmd_connect_chain, "elementary chain for a script with at least two steps")
    sp.add_argument("--script", required=True)
    sp = add("bee-verify", cmd_bee_verify, "check a balanced elementary triple")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--triple", required=True)
    sp = add("bee-decide", cmd_bee_decide, "bounded search for a balanced elementary triple")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    search_flags(sp)
    sp = add("bsse-search", cmd_bsse_search, "breadth-first search for a certificate")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--max-states", type=int, default=5000)
    search_flags(sp)
    sp = add("cert-verify", cmd_cert_verify, "check a certificate")
    sp.add_argument("--cert", required=True)
    sp = add("blockmap-check", cmd_blockmap_check, "compatibility, sliding and bijectivity checks")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--map", required=True)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--k-max", type=int)
    sp.add_argument("--K-max", type=int, default=3)
    sp = add("psi", cmd_psi, "block map between the two ends of a script")
    sp.add_argument("--script", required=True)
    sp.add_argument("--reverse", action="store_true")
    sp = add("triple-map", cmd_triple_map, "(1,1)-block map from a verified triple")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--triple", required=True)
    sp.add_argument("--reverse", action="store_true")
    sp = add("reduce-c", cmd_reduce_c, "move anticipation into a higher block graph")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--map", required=True)
    sp = add("decompose", cmd_decompose, "balanced in-split ladder of an eventual conjugacy")
    sp.add_argument("--script")
    sp.add_argument("--source")
    sp.add_argument("--target")
    sp.add_argument("--map")
    sp.add_argument("--inverse")
    sp = add("witness", cmd_witness, "build and verify an eventual conjugacy witness")
    sp.add_argument("--script")
    sp.add_argument("--source")
    sp.add_argument("--target")
    sp.add_argument("--depth", type=int, default=2, help="certificate length bound")
    sp.add_argument("--check-depth", type=int, help="prefix depth for verification")
    sp.add_argument("--max-states", type=int, default=5000)
    search_flags(sp)
    sp = add("dot", cmd_dot, "DOT rendering of a graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--name", default="G")
    sp = add("random-script", cmd_random_script, "random graph and balanced split script")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--vertices", type=int, default=3)
    sp.add_argument("--steps", type=int, default=2)
    sp.add_argument("--max-out", type=int, default=2)
    sp.add_argument("--max-cells", type=int, default=2)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, EvconjError, ValueError) as exc:
        print(f"evconj {args.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
