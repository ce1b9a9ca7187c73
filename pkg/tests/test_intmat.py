import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

import figures as fx
from oracles import matmul

from evconj.errors import BoundExceeded, MatrixError
from evconj.graph import Graph, adjacency_matrix
from evconj.intmat import (
    BeeTriple,
    Bounds,
    BsseCertificate,
    NonNegMatrix,
    bsse_search,
    bsse_search_report,
    certificate_from_json,
    certificate_to_json,
    decide_balanced_elementary,
    is_amalgamation_matrix,
    is_division_matrix,
    matrix_from_dict,
    matrix_to_dict,
    necessary_invariants,
    reflexive_triple,
    search_balanced_elementary,
    verify_balanced_elementary,
    verify_certificate,
    verify_elementary,
)
from evconj.moves import balanced_in_split

GM = NonNegMatrix([[1, 1], [1, 0]])
GM_D = NonNegMatrix([[1, 1, 0], [0, 0, 1]])
GM_EM = NonNegMatrix([[1, 0], [0, 1], [1, 0]])
GM_B = NonNegMatrix([[1, 1, 0], [0, 0, 1], [1, 1, 0]])


def laplace_det(M):
    if len(M) == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * laplace_det([r[:j] + r[j + 1:] for r in M[1:]]) for j in range(len(M)))


square = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, 5), min_size=n, max_size=n), min_size=n, max_size=n)
)


def test_division_examples():
    assert is_division_matrix(GM_D)
    assert is_division_matrix(NonNegMatrix([[1, 0], [0, 1]]))
    assert not is_division_matrix(NonNegMatrix([[1, 0], [1, 0]]))
    assert is_amalgamation_matrix(GM_D.T)


def test_negative_entry_rejected():
    with pytest.raises(MatrixError):
        NonNegMatrix([[1, -1]])


def test_verify_elementary_examples():
    assert verify_elementary(GM, GM_D, GM_EM, GM_B)
    I = NonNegMatrix([[1, 0], [0, 1]])
    assert verify_elementary(I, I, I, I)
    bumped = GM_B.tolist()
    bumped[2][2] += 1
    assert not verify_elementary(GM, GM_D, GM_EM, NonNegMatrix(bumped))


def test_verify_elementary_names_product():
    with pytest.raises(MatrixError, match=r"R\*S"):
        verify_elementary(GM, GM_D, GM_D, GM_B)


def test_balanced_examples():
    t = BeeTriple(fx.RE_PAIR, fx.S_PAIR, fx.RF_PAIR)
    assert verify_balanced_elementary(fx.AE_PAIR, fx.AF_PAIR, t)
    assert t.common().tolist() == [[1, 0], [1, 0]]
    assert verify_balanced_elementary(GM, GM, reflexive_triple(GM))
    assert verify_balanced_elementary(fx.AF_PAIR, fx.AE_PAIR, t.reversed())


def test_balanced_dimension_error():
    with pytest.raises(MatrixError):
        verify_balanced_elementary(fx.AE_PAIR, fx.AF_PAIR, BeeTriple(fx.RE_PAIR, fx.RE_PAIR, fx.RF_PAIR))


def test_decide_pair_small_bounds():
    t = decide_balanced_elementary(fx.AE_PAIR, fx.AF_PAIR, Bounds(m_max=2, cap=1))
    assert t is not None and verify_balanced_elementary(fx.AE_PAIR, fx.AF_PAIR, t)
    assert (t.r_a, t.s, t.r_b) == (fx.RE_PAIR, fx.S_PAIR, fx.RF_PAIR)


def test_decide_self():
    t = decide_balanced_elementary(fx.NT_E, fx.NT_E)
    assert t is not None and verify_balanced_elementary(fx.NT_E, fx.NT_E, t)


def test_decide_nontransitive_reason():
    d = search_balanced_elementary(fx.NT_E, fx.NT_G)
    assert not d.found
    assert d.reason == "screen failed: A^2 != B A"
    assert d.to_dict()["screen"]["power_relations"][0] == {"n": 1, "A": False, "B": True}


def test_decide_budget():
    with pytest.raises(BoundExceeded, match="too large"):
        search_balanced_elementary(fx.NT_E, fx.NT_F, Bounds(m_max=3, cap=2, budget=10))


def test_invariants_examples():
    rep = necessary_invariants(fx.AE_PAIR, fx.AF_PAIR, 3)
    assert rep.det_a == rep.det_b == 0
    assert all(a and b for _, a, b in rep.power_relations) and len(rep.power_relations) == 3
    assert necessary_invariants(GM, GM).passed
    nt = necessary_invariants(fx.NT_E, fx.NT_G, 1)
    assert nt.power_relations[0] == (1, False, True)


def test_certificate_examples():
    t = BeeTriple(fx.RE_PAIR, fx.S_PAIR, fx.RF_PAIR)
    assert verify_certificate(BsseCertificate((fx.AE_PAIR, fx.AF_PAIR), (t,)))
    assert verify_certificate(BsseCertificate((GM, GM), (reflexive_triple(GM),)))
    bad = fx.AF_PAIR.tolist()
    bad[0][0] = 1
    assert not verify_certificate(BsseCertificate((fx.AE_PAIR, NonNegMatrix(bad)), (t,)))


def test_certificate_dimension_drift():
    c = BsseCertificate((GM, GM, fx.AE_PAIR), (reflexive_triple(GM), reflexive_triple(GM)))
    with pytest.raises(MatrixError, match="link 2"):
        verify_certificate(c)


def test_bsse_examples():
    c = bsse_search(GM, GM, 1)
    assert c is not None and len(c) == 1 and verify_certificate(c)
    c = bsse_search(fx.AE_PAIR, fx.AF_PAIR, 1)
    assert c is not None and len(c) == 1
    assert bsse_search(fx.NT_E, fx.NT_G, 1) is None
    rep = bsse_search_report(fx.NT_E, fx.NT_G, 2)
    assert rep.certificate is not None and len(rep.certificate) == 2 and rep.explored >= 1


def test_bsse_deterministic():
    a = certificate_to_json(bsse_search(fx.NT_E, fx.NT_G, 2))
    b = certificate_to_json(bsse_search(fx.NT_E, fx.NT_G, 2))
    assert a == b


def test_json_roundtrips():
    assert matrix_from_dict(matrix_to_dict(GM)) == GM
    assert matrix_from_dict([[1, 1], [1, 0]]) == GM
    assert list(matrix_to_dict(GM)) == ["rows", "cols", "entries"]
    c = bsse_search(fx.NT_E, fx.NT_G, 2)
    text = certificate_to_json(c)
    assert "links" in json.loads(text)
    assert certificate_from_json(text) == c


@settings(max_examples=80, deadline=None)
@given(square)
def test_det_matches_laplace(rows):
    assert NonNegMatrix(rows).det() == laplace_det(rows)


def _split_triples():
    """Triples of elementary balanced in-splits of small graphs, as a generator of true instances."""
    g = Graph(["a", "b"], [("p", "a", "a"), ("q", "a", "b"), ("r", "b", "a"), ("s", "b", "b"), ("t", "b", "a")])
    ins = g.in_edges("a")
    for k in range(1, 4):
        for la, lb in itertools.product(itertools.product(range(k), repeat=len(ins)), repeat=2):
            ce = [[e for e, c in zip(ins, la) if c == i] for i in range(k)]
            cf = [[e for e, c in zip(ins, lb) if c == i] for i in range(k)]
            bs = balanced_in_split(g, "a", ce, cf)
            yield adjacency_matrix(bs.e.result), adjacency_matrix(bs.f.result), bs.triple


def test_symmetry_and_invariants_on_split_triples():
    count = 0
    for A, B, t in _split_triples():
        assert verify_balanced_elementary(A, B, t)
        assert verify_balanced_elementary(B, A, t.reversed())
        assert A.det() == B.det()
        An, Bn = A, B
        for _ in range(4):
            assert (An @ A).tolist() == matmul((Bn).tolist(), A.tolist())
            An, Bn = An @ A, Bn @ B
        count += 1
    assert count > 100


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_random_triples_symmetric(data):
    n = data.draw(st.integers(1, 3))
    m = data.draw(st.integers(1, 3))
    ent = st.integers(0, 2)
    S = NonNegMatrix(data.draw(st.lists(st.lists(ent, min_size=m, max_size=m), min_size=n, max_size=n)))
    RA = NonNegMatrix(data.draw(st.lists(st.lists(ent, min_size=n, max_size=n), min_size=m, max_size=m)))
    RB = NonNegMatrix(data.draw(st.lists(st.lists(ent, min_size=n, max_size=n), min_size=m, max_size=m)))
    A, B = S @ RA, S @ RB
    t = BeeTriple(RA, S, RB)
    v = verify_balanced_elementary(A, B, t)
    assert v == (RA @ S == RB @ S)
    assert verify_balanced_elementary(B, A, t.reversed()) == v
    if v:
        assert necessary_invariants(A, B, 4).passed


@settings(max_examples=40, deadline=None)
@given(square)
def test_decide_self_always(rows):
    A = NonNegMatrix([[min(x, 2) for x in r] for r in rows])
    if A.rows <= 3:
        assert decide_balanced_elementary(A, A) is not None


def test_decide_zero_matrices():
    Z = NonNegMatrix([[0, 0], [0, 0]])
    t = decide_balanced_elementary(Z, Z)
    assert t is not None and verify_balanced_elementary(Z, Z, t)
