import json
import subprocess
import sys

import pytest

import figures as fx

from evconj.blockmap import blockmap_to_dict, psi_from_history
from evconj.cli import parse_cells, run
from evconj.graph import are_isomorphic, graph_from_dict, graph_to_dict
from evconj.intmat import BeeTriple, matrix_to_dict
from evconj.moves import balanced_in_split, iterated_balanced_in_split


@pytest.fixture
def files(tmp_path):
    def put(name, doc):
        p = tmp_path / name
        p.write_text(json.dumps(doc), encoding="utf-8")
        return str(p)
    return put


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def as_json(out):
    return json.loads(out)


def test_parse_cells():
    assert parse_cells("e,f|g|") == [["e", "f"], ["g"], []]
    assert parse_cells("e") == [["e"]]


def test_validate(capsys, files):
    code, out, _ = call(capsys, "validate", "--graph", files("g.json", graph_to_dict(fx.golden_mean())))
    assert code == 0 and as_json(out)["sinks"] == []
    sink = {"vertices": ["a", "b"], "edges": [{"id": "x", "src": "a", "dst": "b"}]}
    code, out, _ = call(capsys, "validate", "--graph", files("s.json", sink))
    assert code == 1 and as_json(out)["sinks"] == ["b"]


def test_missing_file_and_bad_json(capsys, tmp_path):
    code, _, err = call(capsys, "validate", "--graph", str(tmp_path / "nope.json"))
    assert code == 2 and "cannot read" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    code, _, err = call(capsys, "validate", "--graph", str(bad))
    assert code == 2 and "not valid JSON" in err


def test_usage_errors(capsys):
    assert call(capsys, "no-such-command")[0] == 2
    assert call(capsys, "validate")[0] == 2
    assert call(capsys, "adj")[0] == 2


def test_paths_and_higher_block(capsys, files):
    g = files("g.json", graph_to_dict(fx.golden_mean()))
    code, out, _ = call(capsys, "paths", "--graph", g, "--n", "2")
    assert code == 0 and len(as_json(out)) == 5
    code, out, _ = call(capsys, "higher-block", "--graph", g, "--n", "2")
    assert code == 0 and len(as_json(out)["vertices"]) == 3


def test_adj_both_ways(capsys, files):
    g = files("g.json", graph_to_dict(fx.golden_mean()))
    code, out, _ = call(capsys, "adj", "--graph", g, "--order", "w,v")
    assert code == 0 and as_json(out)["entries"] == [[0, 1], [1, 1]]
    code, out, _ = call(capsys, "adj", "--matrix", files("m.json", [[1, 1], [1, 0]]))
    assert code == 0 and are_isomorphic(graph_from_dict(as_json(out)), fx.golden_mean()) is not None


def test_iso(capsys, files):
    g = files("g.json", graph_to_dict(fx.golden_mean()))
    h = files("h.json", graph_to_dict(fx.gm_out_split_drawing()))
    assert call(capsys, "iso", "--graph", g, "--other", g)[0] == 0
    code, out, _ = call(capsys, "iso", "--graph", g, "--other", h)
    assert code == 1 and as_json(out)["isomorphic"] is False


def test_out_split_example(capsys, files, tmp_path):
    dot = tmp_path / "o.dot"
    code, out, _ = call(capsys, "out-split", "--graph", files("g.json", graph_to_dict(fx.golden_mean())),
                        "--vertex", "v", "--cells", "e|f", "--dot", str(dot))
    assert code == 0
    doc = as_json(out)
    assert are_isomorphic(graph_from_dict(doc["graph"]), fx.gm_out_split_drawing()) is not None
    assert doc["D"]["entries"] == [[1, 1, 0], [0, 0, 1]]
    assert doc["new_sources"] == []
    assert dot.read_text().startswith("digraph")


def test_in_split_empty_cell(capsys, files):
    code, out, _ = call(capsys, "in-split", "--graph", files("g.json", graph_to_dict(fx.golden_mean())),
                        "--vertex", "v", "--cells", "e,g|")
    assert code == 0 and as_json(out)["new_sources"] == ["v#2"]


def test_split_errors(capsys, files):
    g = files("g.json", graph_to_dict(fx.golden_mean()))
    code, _, err = call(capsys, "out-split", "--graph", g, "--vertex", "v", "--cells", "e")
    assert code == 2 and err
    code, _, _ = call(capsys, "in-split", "--graph", g, "--vertex", "nowhere", "--cells", "e")
    assert code == 2


def test_balanced_split(capsys, files):
    code, out, _ = call(capsys, "balanced-split", "--graph", files("g.json", graph_to_dict(fx.loop_with_tail())),
                        "--vertex", "v", "--cells-e", "e,f|", "--cells-f", "f|e")
    assert code == 0
    doc = as_json(out)
    assert are_isomorphic(graph_from_dict(doc["E"]["graph"]), fx.two_tails_drawing()) is not None
    assert BeeTriple.from_dict(doc["triple"]).s == fx.S_PAIR


def test_script_run_and_chain(capsys, files, tmp_path):
    s = files("s.json", fx.two_step_script().to_dict())
    code, out, _ = call(capsys, "script-run", "--script", s, "--dot-dir", str(tmp_path / "dots"))
    assert code == 0 and as_json(out)["steps"] == 2
    assert sorted(p.name for p in (tmp_path / "dots").iterdir()) == [
        "E_0.dot", "E_1.dot", "E_2.dot", "F_0.dot", "F_1.dot", "F_2.dot"]
    code, out, _ = call(capsys, "connect-chain", "--script", s)
    assert code == 0 and as_json(out)["links"] == 3 and as_json(out)["verified"] is True
    code, _, err = call(capsys, "connect-chain", "--script", files("one.json", fx.loop_with_tail_script().to_dict()))
    assert code == 2 and err


def test_bee_decide_examples(capsys, files):
    a, b = files("a.json", fx.AE_PAIR.tolist()), files("b.json", fx.AF_PAIR.tolist())
    code, out, _ = call(capsys, "bee-decide", "--a", a, "--b", b, "--m", "2", "--cap", "1")
    assert code == 0 and as_json(out)["found"] is True
    e, g = files("e.json", fx.NT_E.tolist()), files("g2.json", fx.NT_G.tolist())
    code, out, _ = call(capsys, "bee-decide", "--a", e, "--b", g)
    assert code == 1 and "A^2 != B A" in as_json(out)["reason"]


def test_bee_decide_budget(capsys, files):
    e, f = files("e.json", fx.NT_E.tolist()), files("f.json", fx.NT_F.tolist())
    code, _, err = call(capsys, "bee-decide", "--a", e, "--b", f, "--m", "3", "--cap", "2", "--budget", "10")
    assert code == 2 and "too large" in err


def test_bee_verify_and_certificates(capsys, files):
    a, b = files("a.json", fx.AE_PAIR.tolist()), files("b.json", fx.AF_PAIR.tolist())
    t = files("t.json", BeeTriple(fx.RE_PAIR, fx.S_PAIR, fx.RF_PAIR).to_dict())
    assert call(capsys, "bee-verify", "--a", a, "--b", b, "--triple", t)[0] == 0
    assert call(capsys, "bee-verify", "--a", b, "--b", a, "--triple", t)[0] == 1
    e, g = files("e.json", fx.NT_E.tolist()), files("g2.json", fx.NT_G.tolist())
    assert call(capsys, "bsse-search", "--a", e, "--b", g, "--depth", "1")[0] == 1
    code, out, _ = call(capsys, "bsse-search", "--a", e, "--b", g, "--depth", "2")
    assert code == 0
    cert = files("c.json", as_json(out)["certificate"])
    assert call(capsys, "cert-verify", "--cert", cert)[0] == 0
    doc = as_json(out)["certificate"]
    doc["matrices"][-1] = matrix_to_dict(fx.NT_E)
    assert call(capsys, "cert-verify", "--cert", files("bad.json", doc))[0] == 1


def test_block_map_commands(capsys, files):
    script = fx.loop_with_tail_script()
    E, F, h = iterated_balanced_in_split(script)
    s = files("s.json", script.to_dict())
    code, out, _ = call(capsys, "psi", "--script", s)
    assert code == 0 and as_json(out) == blockmap_to_dict(psi_from_history(h))
    src, tgt = files("E.json", graph_to_dict(E)), files("F.json", graph_to_dict(F))
    m = files("m.json", as_json(out))
    code, out, _ = call(capsys, "blockmap-check", "--source", src, "--target", tgt, "--map", m)
    assert code == 0 and as_json(out)["table_bijective"] is True
    const = {"l": 1, "c": 0, "entries": [{"in": list(x), "out": ["f#1", "e#1"]} for x in psi_from_history(h).table]}
    code, _, err = call(capsys, "blockmap-check", "--source", src, "--target", tgt, "--map", files("k.json", const))
    assert code == 2 and "incompatible" in err
    code, out, _ = call(capsys, "decompose", "--script", s)
    assert code == 0 and as_json(out)["ok"] is True


def test_triple_map_and_reduce(capsys, files):
    bs = balanced_in_split(fx.loop_with_tail(), "v", [["e", "f"], []], [["f"], ["e"]])
    src, tgt = files("E.json", graph_to_dict(bs.e.result)), files("F.json", graph_to_dict(bs.f.result))
    t = files("t.json", bs.triple.to_dict())
    code, out, _ = call(capsys, "triple-map", "--source", src, "--target", tgt, "--triple", t)
    assert code == 0
    doc = as_json(out)
    assert (doc["l"], doc["c"]) == (1, 1) and "pairing" in doc
    m = files("m.json", {k: doc[k] for k in ("l", "c", "entries")})
    back = as_json(call(capsys, "triple-map", "--source", src, "--target", tgt, "--triple", t, "--reverse")[1])
    inv = files("inv.json", {k: back[k] for k in ("l", "c", "entries")})
    code, out, _ = call(capsys, "reduce-c", "--source", src, "--target", tgt, "--map", m)
    assert code == 0 and (as_json(out)["map"]["l"], as_json(out)["map"]["c"]) == (1, 0)
    code, out, _ = call(capsys, "decompose", "--source", src, "--target", tgt, "--map", m, "--inverse", inv)
    assert code == 0 and as_json(out)["ok"] is True
    assert call(capsys, "decompose", "--source", src)[0] == 2
    assert call(capsys, "triple-map", "--source", tgt, "--target", src, "--triple", t)[0] == 2


def test_witness_commands(capsys, files):
    code, out, _ = call(capsys, "witness", "--script", files("s.json", fx.two_step_script().to_dict()))
    assert code == 0 and as_json(out)["manifest"]["accepted"] is True
    e = files("e.json", as_json(call(capsys, "adj", "--matrix", files("me.json", fx.NT_E.tolist()))[1]))
    g = files("g.json", as_json(call(capsys, "adj", "--matrix", files("mg.json", fx.NT_G.tolist()))[1]))
    code, out, _ = call(capsys, "witness", "--source", e, "--target", g, "--depth", "1")
    assert code == 1 and as_json(out) == {"found": False, "depth": 1}
    code, out, _ = call(capsys, "witness", "--source", e, "--target", g, "--depth", "2")
    assert code == 0 and as_json(out)["manifest"]["l"] == 2
    assert call(capsys, "witness")[0] == 2


def test_dot(capsys, files):
    code, out, _ = call(capsys, "dot", "--graph", files("g.json", graph_to_dict(fx.golden_mean())), "--name", "gm")
    assert code == 0 and out.startswith("digraph") and 'label="e"' in out


def test_random_script_seeded(capsys):
    a = call(capsys, "random-script", "--seed", "7", "--vertices", "4", "--steps", "2")
    b = call(capsys, "random-script", "--seed", "7", "--vertices", "4", "--steps", "2")
    c = call(capsys, "random-script", "--seed", "8", "--vertices", "4", "--steps", "2")
    assert a == b and a[0] == 0
    assert a[1] != c[1]
    assert len(as_json(a[1])["steps"]) == 2


def test_out_file(capsys, files, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = call(capsys, "validate", "--graph", files("g.json", graph_to_dict(fx.golden_mean())),
                        "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["sinks"] == []


def test_deterministic_bytes(tmp_path, files):
    s = files("s.json", fx.two_step_script().to_dict())
    outs = []
    for i in range(2):
        p = tmp_path / f"w{i}.json"
        proc = subprocess.run([sys.executable, "-m", "evconj.cli", "witness", "--script", s, "--out", str(p)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_blockmap_check_negative(capsys, files):
    g = files("g.json", {"vertices": ["o"], "edges": [{"id": "a", "src": "o", "dst": "o"},
                                                      {"id": "b", "src": "o", "dst": "o"}]})
    m = files("m.json", {"l": 0, "c": 0, "entries": [{"in": ["a"], "out": ["a"]}, {"in": ["b"], "out": ["a"]}]})
    code, out, _ = call(capsys, "blockmap-check", "--source", g, "--target", g, "--map", m)
    doc = as_json(out)
    assert code == 1 and doc["sliding"]["ok"] is True
    assert doc["conditions"]["surjective"] is False
