"""Eventual conjugacy witnesses: constructions, composition and re-checking.

A witness is accepted only at a stated depth; nothing here claims more than
exhaustive checks over prefixes of that length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from .blockmap import (
    BlockMap,
    ConditionReport,
    blockmap_to_dict,
    check_conditions,
    check_sliding,
    compose,
    identity_map,
    psi_from_history,
    roundtrip_mismatch,
    triple_map_pair,
)
from .errors import EvconjError
from .graph import Graph, adjacency_matrix, graph_from_matrix, graph_to_dict
from .intmat import (
    Bounds,
    BsseCertificate,
    bsse_search_report,
    reflexive_triple,
    verify_certificate,
)
from .moves import Chain, SplitScript, connect_by_elementary, iterated_balanced_in_split

DEFAULT_K_MAX = 3


def default_depth(l: int, c: int) -> int:
    return max(2 * (l + c) + 2, l + c + 5)


@dataclass(frozen=True)
class EventualConjugacyWitness:
    forward: BlockMap
    backward: BlockMap
    l: int
    c: int
    depth: int
    forward_conditions: ConditionReport | None = None
    backward_conditions: ConditionReport | None = None
    certificate: BsseCertificate | None = None
    chain: Chain | None = None
    script: SplitScript | None = None
    graphs: tuple[Graph, ...] = ()

    @property
    def source(self) -> Graph:
        return self.forward.source

    @property
    def target(self) -> Graph:
        return self.forward.target

    def to_dict(self, report: WitnessReport | None = None) -> dict:
        d = {
            "source": graph_to_dict(self.source),
            "target": graph_to_dict(self.target),
            "forward": blockmap_to_dict(self.forward),
            "backward": blockmap_to_dict(self.backward),
            "manifest": {"l": self.l, "c": self.c, "depth": self.depth},
        }
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        if self.script is not None:
            d["script"] = self.script.to_dict()
        if self.forward_conditions is not None:
            d["forward_conditions"] = self.forward_conditions.to_dict()
        if self.backward_conditions is not None:
            d["backward_conditions"] = self.backward_conditions.to_dict()
        if report is not None:
            d["manifest"]["verdicts"] = report.checks
            d["manifest"]["accepted"] = report.accepted
        return d

    def to_json(self, report: WitnessReport | None = None) -> str:
        return json.dumps(self.to_dict(report), indent=2)


@dataclass(frozen=True)
class WitnessReport:
    depth: int
    checks: dict[str, bool]
    details: dict[str, object] = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]

    def to_dict(self) -> dict:
        return {"depth": self.depth, "accepted": self.accepted, "checks": dict(self.checks),
                "details": {k: v for k, v in self.details.items()}}


def _conditions(bm: BlockMap, K_max: int) -> ConditionReport:
    return check_conditions(bm, bm.l + DEFAULT_K_MAX, K_max)


def verify_witness(w: EventualConjugacyWitness, depth: int | None = None, K_max: int = DEFAULT_K_MAX) -> WitnessReport:
    d = max(depth or w.depth, w.forward.window + w.backward.window - 1, w.forward.window + 1, w.backward.window + 1)
    checks: dict[str, bool] = {}
    details: dict[str, object] = {}
    for name, bm in (("forward", w.forward), ("backward", w.backward)):
        s = check_sliding(bm, d)
        checks[f"{name}_sliding"] = s.ok
        if not s.ok:
            details[f"{name}_sliding"] = s.to_dict()
        cond = _conditions(bm, K_max)
        checks[f"{name}_surjectivity"] = cond.surjective
        checks[f"{name}_injectivity"] = cond.injective
        details[f"{name}_K"] = cond.K_values()
    for name, a, b in (("roundtrip_forward", w.forward, w.backward), ("roundtrip_backward", w.backward, w.forward)):
        bad = roundtrip_mismatch(a, b, d)
        checks[name] = bad is None
        if bad is not None:
            details[name] = list(bad)
    if w.certificate is not None:
        try:
            checks["certificate"] = verify_certificate(w.certificate)
        except EvconjError as exc:
            checks["certificate"] = False
            details["certificate"] = str(exc)
    return WitnessReport(d, checks, details)


def _package(fwd: BlockMap, back: BlockMap, depth: int | None, K_max: int, **extra) -> EventualConjugacyWitness:
    l, c = max(fwd.l, back.l), max(fwd.c, back.c)
    d = depth or default_depth(l, c)
    return EventualConjugacyWitness(
        fwd, back, l, c, d,
        forward_conditions=_conditions(fwd, K_max),
        backward_conditions=_conditions(back, K_max),
        **extra,
    )


def witness_from_script(script: SplitScript, depth: int | None = None, K_max: int = DEFAULT_K_MAX) -> EventualConjugacyWitness:
    E, F, h = iterated_balanced_in_split(script)
    ell = h.depth
    chain = None
    if ell == 0:
        fwd = back = identity_map(script.base)
        A = adjacency_matrix(script.base)
        cert = BsseCertificate((A, A), (reflexive_triple(A),))
    else:
        fwd, back = psi_from_history(h), psi_from_history(h, reverse=True)
        if ell == 1:
            cert = BsseCertificate((adjacency_matrix(E), adjacency_matrix(F)), (h.triples[0],))
        else:
            chain = connect_by_elementary(script)
            cert = chain.certificate
    return _package(fwd, back, depth, K_max, certificate=cert, chain=chain, script=script, graphs=(E, F))


def witness_from_matrices(E: Graph, F: Graph, depth: int, bounds: Bounds | None = None,
                          max_states: int = 5000, check_depth: int | None = None,
                          K_max: int = DEFAULT_K_MAX) -> EventualConjugacyWitness | None:
    """Search for a balanced strong shift equivalence and turn it into block maps.

    ``depth`` bounds the number of links; every link contributes a (1, 1)
    map, and the links compose into one map per direction.
    """
    E.require_no_sinks("source graph")
    F.require_no_sinks("target graph")
    b = bounds or Bounds()
    b = Bounds(b.m_max, b.cap, b.budget, allow_sinks=False)
    res = bsse_search_report(adjacency_matrix(E), adjacency_matrix(F), depth, b, max_states)
    cert = res.certificate
    if cert is None:
        return None
    graphs = [E] + [graph_from_matrix(M) for M in cert.matrices[1:-1]] + [F]
    fwd = back = None
    for i, t in enumerate(cert.links):
        f, g, _ = triple_map_pair(graphs[i], graphs[i + 1], t)
        fwd = f if fwd is None else compose(fwd, f)
        back = g if back is None else compose(g, back)
    return _package(fwd, back, check_depth, K_max, certificate=cert, graphs=tuple(graphs))


def compose_witnesses(w1: EventualConjugacyWitness, w2: EventualConjugacyWitness,
                      K_max: int = DEFAULT_K_MAX) -> EventualConjugacyWitness:
    """Witness from the source of ``w1`` to the target of ``w2``; lags add."""
    fwd = compose(w1.forward, w2.forward)
    back = compose(w2.backward, w1.backward)
    return _package(fwd, back, None, K_max, graphs=(w1.source, w2.target))
