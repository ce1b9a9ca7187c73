import json
import random

from hypothesis import given, settings, strategies as st

import figures as fx

from evconj.blockmap import check_sliding, psi_from_history
from evconj.equivalence import (
    compose_witnesses,
    default_depth,
    verify_witness,
    witness_from_matrices,
    witness_from_script,
)
from evconj.generate import random_graph, random_script
from evconj.graph import adjacency_matrix, graph_from_matrix
from evconj.intmat import verify_certificate
from evconj.moves import SplitScript, iterated_balanced_in_split


def nt_graphs():
    return graph_from_matrix(fx.NT_E), graph_from_matrix(fx.NT_G)


def test_script_witness_zero_steps():
    w = witness_from_script(SplitScript(fx.golden_mean()))
    assert (w.l, w.c) == (0, 0) and len(w.certificate) == 1
    assert verify_witness(w).accepted


def test_script_witness_one_step():
    w = witness_from_script(fx.loop_with_tail_script())
    assert (w.l, w.c) == (1, 0) and len(w.certificate) == 1
    assert set(w.forward_conditions.K_values().values()) == {0}
    rep = verify_witness(w)
    assert rep.accepted and rep.depth == w.depth == default_depth(1, 0)


def test_script_witness_two_steps():
    w = witness_from_script(fx.two_step_script())
    assert (w.l, w.c) == (2, 0)
    assert len(w.certificate) == 3 and len(w.chain) == 3
    assert verify_certificate(w.certificate)
    assert verify_witness(w).accepted


def test_matrices_witness_pair():
    _, _, h = iterated_balanced_in_split(fx.loop_with_tail_script())
    E, F = h.E(1), h.F(1)
    w = witness_from_matrices(E, F, 1)
    assert w is not None and len(w.certificate) == 1
    assert (w.forward.l, w.forward.c) == (1, 1)
    assert verify_witness(w).accepted


def test_matrices_witness_reflexive():
    g = fx.golden_mean()
    w = witness_from_matrices(g, g, 1)
    assert w is not None and verify_witness(w).accepted


def test_matrices_witness_nontransitive():
    E, G = nt_graphs()
    assert witness_from_matrices(E, G, 1) is None
    w = witness_from_matrices(E, G, 2)
    assert w is not None and len(w.certificate) == 2
    assert (w.forward.l, w.forward.c) == (2, 2)
    assert w.certificate.matrices[0] == adjacency_matrix(E)
    assert w.certificate.matrices[-1] == adjacency_matrix(G)
    rep = verify_witness(w)
    assert rep.accepted, rep.failures()


def test_corrupted_forward_rejected():
    w = witness_from_script(fx.loop_with_tail_script())
    table = dict(w.forward.table)
    table[("e#1", "e#1")] = ("f#1", "e#1")
    bad = type(w)(w.forward.with_table(table), w.backward, w.l, w.c, w.depth)
    rep = verify_witness(bad)
    assert not rep.accepted
    assert "forward_sliding" in rep.failures()
    assert rep.details["forward_sliding"]["counterexample"]


def test_larger_depth_rechecked():
    w = witness_from_script(fx.loop_with_tail_script())
    rep = verify_witness(w, depth=w.depth + 3)
    assert rep.depth == w.depth + 3 and rep.accepted


def test_compose_lags_add():
    w1 = witness_from_script(fx.loop_with_tail_script())
    back = witness_from_script(SplitScript(w1.target))
    both = compose_witnesses(w1, back)
    assert both.l == w1.l + back.l and both.c == w1.c + back.c
    assert verify_witness(both).accepted
    round_trip = compose_witnesses(w1, type(w1)(w1.backward, w1.forward, w1.l, w1.c, w1.depth))
    assert round_trip.l == 2 and check_sliding(round_trip.forward, 6)
    assert verify_witness(round_trip).accepted


def test_manifest_json():
    w = witness_from_script(fx.loop_with_tail_script())
    rep = verify_witness(w)
    d = json.loads(w.to_json(rep))
    assert list(d)[:5] == ["source", "target", "forward", "backward", "manifest"]
    assert d["manifest"]["l"] == 1 and d["manifest"]["accepted"] is True
    assert d["manifest"]["verdicts"] == rep.checks
    assert "script" in d and "certificate" in d
    assert json.loads(json.dumps(rep.to_dict()))["accepted"] is True


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 2))
def test_random_script_witnesses(seed, steps):
    rng = random.Random(seed)
    g = random_graph(rng, rng.randint(1, 5), max_out=2)
    script = random_script(rng, g, steps)
    w = witness_from_script(script)
    assert w.l == steps and w.c == 0
    assert verify_certificate(w.certificate)
    rep = verify_witness(w)
    assert rep.accepted, rep.failures()
    _, _, h = iterated_balanced_in_split(script)
    if steps:
        assert w.forward == psi_from_history(h)
