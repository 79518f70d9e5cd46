import io
import json
from fractions import Fraction as Q

import pytest

from eqjk import hilbplane as hp
from eqjk.cli import InputError, VOL_CONVENTION, parse_class, run
from eqjk.fracform import Frac, FracSum
from eqjk.jkres import ResidueValue


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, (json.loads(out.getvalue()) if code == 0 else None), out.getvalue()


def dump(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


# -- documented examples --------------------------------------------------------------

def test_hilb_table_example():
    code, doc, _ = call("hilb", "table", "-n", "1", "-N", "5")
    assert code == 0
    assert doc == {"(1)": {"p": ["-1"], "b": {"coeff": "1/6", "sigma_exp": -1}}}


def test_hilb_integrate_example():
    code, doc, _ = call("hilb", "integrate", "-n", "2", "-N", "5", "--class", "1", "--method", "formula")
    assert code == 0
    assert doc["value"] == {"coeff": "1/50", "sigma_exp": -4}
    assert doc["metadata"] == {"basis": ["sigma", "tau_1", "tau_2"], "volume": VOL_CONVENTION}


def test_hilb_kernel_example():
    code, doc, _ = call("hilb", "kernel", "-n", "2", "-N", "5", "--class", "(C1+3*sigma)*(C1+7*sigma)")
    assert (code, doc) == (0, {"member": True})


def test_hilb_rank():
    code, doc, _ = call("hilb", "rank", "-n", "4", "-N", "6")
    assert (code, doc) == (0, {"rank": 5, "partitions": 5})


def test_output_is_canonical():
    _, _, raw = call("hilb", "table", "-n", "2", "-N", "5")
    assert raw == json.dumps(json.loads(raw), sort_keys=True) + "\n"


# -- exit codes ---------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["hilb", "integrate", "-n", "2", "-N", "5", "--class", "C1+"],
    ["hilb", "integrate", "-n", "2", "-N", "5", "--class", "C1 C2"],
    ["hilb", "integrate", "-n", "2", "-N", "5", "--class", "C0"],
    ["hilb", "integrate", "-n", "2", "-N", "5", "--class", "x"],
    ["hilb", "integrate", "-n", "2", "-N", "5", "--class", "1/0"],
    ["hilb", "bogus", "-n", "2", "-N", "5"],
    ["hilb", "table", "-n", "two", "-N", "5"],
    ["jkres"],
    ["jkres", "--input", "/nonexistent/F.json"],
    ["hilb", "table", "-n", "1", "-N", "5", "--threads", "0"],
])
def test_parse_errors_exit_2(argv, capsys):
    assert run(argv, io.StringIO()) == 2
    assert capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["hilb", "table", "-n", "2", "-N", "2"],
    ["hilb", "integrate", "-n", "3", "-N", "1"],
    ["hilb", "kernel", "-n", "-1", "-N", "1"],
])
def test_precondition_violations_exit_3(argv):
    assert run(argv, io.StringIO()) == 3


def test_rank_bound_below_n_exits_3():
    assert run(["hilb", "rank", "-n", "3", "-N", "5", "--degree-bound", "2"], io.StringIO()) == 3


def test_malformed_json_exit_2(tmp_path):
    p = tmp_path / "F.json"
    p.write_text("{not json")
    assert run(["jkres", "--input", str(p)], io.StringIO()) == 2
    for broken in ({"terms": []}, {"dim": 1, "terms": [{"den": [{"vec": ["x"], "mult": 1}]}]}):
        assert run(["jkres", "--input", dump(tmp_path, "G.json", broken)], io.StringIO()) == 2


def test_singular_basis_exit_3(tmp_path):
    F = FracSum.of([Frac.make(1, [1, 1], [((1, 0), 1), ((0, 1), 1)])])
    f = dump(tmp_path, "F.json", F.to_json())
    assert run(["jkres", "--input", f, "--basis", dump(tmp_path, "B.json", [[1, 1], [2, 2]])], io.StringIO()) == 3
    assert run(["jkres", "--input", f, "--basis", dump(tmp_path, "C.json", [[1]])], io.StringIO()) == 3
    assert run(["eqres", "--input", f, "--split", "3"], io.StringIO()) == 3


# -- class parser ---------------------------------------------------------------------------

def test_parser_precedence():
    n = 2
    C1, C2, s = hp.elementary(1, n), hp.elementary(2, n), hp.sigma_poly(n)
    assert parse_class("C1+C2*sigma", n) == C1 + C2 * s
    assert parse_class("2*C1^2", n) == C1 * C1 * 2
    assert parse_class("-C1^2", n) == C1 * C1 * -1
    assert parse_class("(-C1)^2", n) == C1 * C1
    assert parse_class("C1-C2-sigma", n) == C1 - C2 - s
    assert parse_class("1/2*sigma^0", n) == parse_class("1/2", n)
    assert parse_class("C3", n) == parse_class("0", n)


@pytest.mark.parametrize("text", ["", "C1 C2", "2(C1)", "C1^-1", "C1^sigma", "(C1", "C1)", "*C1"])
def test_parser_rejects(text):
    with pytest.raises(InputError):
        parse_class(text, 2)


def test_leading_minus_needs_equals_form():
    assert run(["hilb", "integrate", "-n", "1", "-N", "3", "--class=-C1"], io.StringIO()) == 0


# -- round trip and method agreement ------------------------------------------------------------

def test_jkres_round_trip(tmp_path):
    F = FracSum.of([Frac.make(1, [3, 1], [((1, 0), 2), ((1, 1), 1)]),
                    Frac.make(2, [1, -1], [((1, -1), 1), ((0, 1), 1)])])
    code, doc, _ = call("jkres", "--input", dump(tmp_path, "F.json", F.to_json()))
    assert code == 0
    assert doc["metadata"]["basis"] == [["1", "0"], ["0", "1"]]
    v = ResidueValue.from_json(doc["result"])
    assert json.loads(json.dumps(v.to_json())) == doc["result"]


def test_eqres_round_trip(tmp_path):
    F = FracSum.of([Frac.make(1, [1, 0], [((1, 0), 1), ((1, 1), 1)])])
    code, doc, _ = call("eqres", "--input", dump(tmp_path, "F.json", F.to_json()), "--split", "1")
    assert code == 0 and doc["metadata"]["split"] == 1
    want = FracSum.of([Frac.make(1, None, [((1,), 1)], dim=1), Frac.make(-1, [-1], [((1,), 1)], dim=1)], 1)
    assert ResidueValue.from_json(doc["result"]).limit() == want


def test_integrate_abelian(tmp_path):
    pts = {"dim": 2, "split": 1, "points": [{"name": "0", "moment": [0, 0], "weights": [[1, 0], [1, 1]]}]}
    group = {"gamma": [1, 0], "level": [2, 0]}
    code, doc, _ = call("integrate", "--points", dump(tmp_path, "M.json", pts),
                        "--group", dump(tmp_path, "G.json", group))
    assert code == 0
    assert doc["metadata"]["chamber"] == [1, 1] and doc["metadata"]["mode"] == "abelian"
    r = ResidueValue.from_json(doc["result"])
    assert not r.is_zero()


def test_integrate_inadmissible_basis_exit_3(tmp_path):
    pts = {"dim": 2, "split": 1, "points": [{"name": "0", "moment": [0, 0], "weights": [[1, 0], [1, 1]]}]}
    args = ["integrate", "--points", dump(tmp_path, "M.json", pts),
            "--group", dump(tmp_path, "G.json", {"gamma": [1, 0], "level": [1, 0]}),
            "--basis", dump(tmp_path, "B.json", [[-1, 0], [0, 1]])]
    assert run(args, io.StringIO()) == 3


MATRIX = [(n, N) for n in (1, 2, 3) for N in (n + 1, n + 3)]
CLASSES = ["1", "C1", "C2", "C3", "C1^2", "sigma*C1"]


@pytest.mark.parametrize("n, N", MATRIX)
def test_formula_and_oracle_byte_identical(n, N):
    for cls in CLASSES:
        outs = []
        for method in ("formula", "oracle"):
            buf = io.StringIO()
            assert run(["hilb", "integrate", "-n", str(n), "-N", str(N), "--class", cls, "--method", method], buf) == 0
            outs.append(buf.getvalue())
        assert outs[0] == outs[1], cls


def test_threads_do_not_change_output():
    outs = set()
    for threads in ("1", "2", "4"):
        _, _, raw = call("hilb", "integrate", "-n", "2", "-N", "4", "--class", "C1*sigma",
                         "--method", "eqres", "--threads", threads)
        outs.add(raw)
    assert len(outs) == 1


def test_seed_from_environment(monkeypatch):
    from eqjk.cli import build_parser
    monkeypatch.setenv("JKRES_SEED", "17")
    assert build_parser().parse_args(["hilb", "table", "-n", "1", "-N", "3"]).seed == 17
    assert build_parser().parse_args(["hilb", "table", "-n", "1", "-N", "3", "--seed", "2"]).seed == 2
    monkeypatch.delenv("JKRES_SEED")
    assert build_parser().parse_args(["hilb", "table", "-n", "1", "-N", "3"]).seed == 0


def test_sigma_value_output_reparses():
    _, doc, _ = call("hilb", "integrate", "-n", "2", "-N", "5", "--class", "C2+sigma^2")
    want = hp.hilb_integrate(parse_class("C2+sigma^2", 2), 2, 5)
    got = hp.SigmaValue.of({doc["value"]["sigma_exp"]: Q(doc["value"]["coeff"])}) if "terms" not in doc["value"] \
        else hp.SigmaValue.of({t["sigma_exp"]: Q(t["coeff"]) for t in doc["value"]["terms"]})
    assert got == want
