import io
import json
import subprocess
import sys

import pytest

from algebroid_pbw import cli
from algebroid_pbw.neighborhood import QuotientRewriter
from algebroid_pbw.registry import fixture_path, list_fixtures, load_fixture


def run(*argv):
    out = io.StringIO()
    code = cli.run([str(a) for a in argv], stdout=out)
    text = out.getvalue()
    return code, (json.loads(text) if "--format" not in argv else text)


def _sl2_doc(ef_bracket_target):
    return {
        "ring": {"kind": "rational-field"},
        "algebroid": {
            "generators": ["e", "h", "f"],
            "brackets": [
                {"i": 1, "j": 0, "k": 0, "coeff": 2},
                {"i": 1, "j": 2, "k": 2, "coeff": -2},
                {"i": 0, "j": 2, "k": ef_bracket_target, "coeff": 1},
            ],
        },
        "pair": {"sub_rank": 1},
    }


def test_report_envelope():
    code, rep = run("validate", fixture_path("abelian"))
    assert code == 0
    assert rep["schema"] == "apbw-report/1"
    assert rep["tool"]["name"] == "algebroid-pbw"
    assert len(rep["input"]["sha256"]) == 64
    assert rep["result"]["valid"]


def test_corrupted_jacobi_exits_one(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(_sl2_doc(0)))
    code, rep = run("validate", path)
    assert code == 1
    axioms = {v["axiom"] for r in rep["result"]["reports"] for v in r["violations"]}
    assert "jacobi" in axioms
    # the other commands refuse an invalid document
    code, rep = run("class", path)
    assert code == 3 and "validation" in rep["error"]


def test_malformed_json_exits_three(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"ring": ')
    code, rep = run("validate", path)
    assert code == 3
    assert "line 1" in rep["error"]
    code, _ = run("validate", tmp_path / "missing.json")
    assert code == 3


def test_class_verdicts_and_exit_codes():
    assert run("class", fixture_path("abelian"), "--module", "unit")[0] == 0
    code, rep = run("class", fixture_path("sl2_borel"))
    assert code == 1
    assert rep["result"]["alpha"]["certificate"]
    code, rep = run("class", fixture_path("poly_xy"), "--module", "E1", "--bound", "0")
    assert code == 2
    assert rep["result"]["verdict"] == "Inconclusive"
    assert run("class", fixture_path("abelian"), "--module", "nope")[0] == 3


def test_class_includes_the_lift():
    code, rep = run("class", fixture_path("sl2_h"))
    assert code == 0
    assert all(rep["result"]["lift"]["flags"].values())
    assert rep["result"]["comparison"]


def test_pbw_abelian_all_green():
    code, rep = run("pbw", fixture_path("abelian"), "-N", 4)
    assert code == 0
    eq = rep["result"]["equivalence"]
    assert eq["consistent"] and eq["composite"] == "verified" and eq["search"] == "Exists"


def test_pbw_borel_not_exists():
    code, rep = run("pbw", fixture_path("sl2_borel"), "-N", 2)
    assert code == 1
    res = rep["result"]
    assert res["alpha"]["verdict"] == "NonVanishing"
    assert res["search"]["kind"] == "NotExists"
    assert "search_N2" not in res


def test_pbw_full_sub_trivially_exists():
    code, rep = run("pbw", fixture_path("full_sub"))
    assert code == 0
    assert rep["result"]["search"]["report"]["source_dims"] == [1]
    assert run("pbw", fixture_path("full_sub"), "--module", "quotient")[0] == 3


def test_pbw_inconclusive_when_underbounded():
    code, _ = run("pbw", fixture_path("poly_xy"), "--module", "E1", "--bound", "2")
    assert code == 2


def test_budget_exit_keeps_partial_dims():
    code, rep = run("dims", fixture_path("poly_xy"), "--budget", "3")
    assert code == 4
    assert rep["result"]["partial"]["left_quotient"] == [1, 1, 1, 1]


def test_dims_closed_forms():
    code, rep = run("dims", fixture_path("zero_sub"))
    res = rep["result"]
    assert code == 0
    assert res["neighbourhood"] == res["tensor_expected"] == [1, 2, 4, 8, 16]
    assert res["left_quotient"] == res["symmetric_expected"]
    assert res["gr_U"] == res["gr_U_expected"]


@pytest.mark.parametrize("name", [n for n in list_fixtures() if load_fixture(n).ring.finite])
def test_oracle_diff_is_empty(name):
    code, rep = run("oracle", fixture_path(name))
    assert code == 0
    assert rep["result"]["diff"] == []


def test_oracle_rejects_polynomial_rings():
    code, rep = run("oracle", fixture_path("poly_xy"))
    assert code == 3


def test_oracle_detects_an_injected_fault(monkeypatch):
    original = QuotientRewriter.act_basis

    def faulty(self, g, w, s):
        out = original(self, g, w, s)
        if g == 0 and len(w) == 1:
            out = dict(out)
            out[(w, s)] = out.get((w, s), self.pair.ring.zero) + self.pair.ring.one
        return out

    monkeypatch.setattr(QuotientRewriter, "act_basis", faulty)
    code, rep = run("oracle", fixture_path("sl2_h"))
    assert code == 1
    assert rep["result"]["diff"]


def test_reports_are_deterministic():
    _, a = run("pbw", fixture_path("sl2_h"))
    _, b = run("pbw", fixture_path("sl2_h"))
    a.pop("timing"), b.pop("timing")
    assert a == b


@pytest.mark.parametrize("name,command", [("sl2_borel", "pbw"), ("sl2_borel", "class"),
                                          ("heis_x", "pbw"), ("poly_xy", "class")])
def test_recheck_round_trip(tmp_path, name, command):
    _, rep = run(command, fixture_path(name))
    path = tmp_path / "report.json"
    path.write_text(json.dumps(rep))
    code, out = run(command, fixture_path(name), "--recheck", path)
    assert code == 0, out
    assert out["result"]["ok"]


def test_recheck_rejects_tampering(tmp_path):
    _, rep = run("class", fixture_path("sl2_h"))
    prim = rep["result"]["alpha"]["primitive"]
    prim[0] = str(int(prim[0]) + 1) if prim[0].lstrip("-").isdigit() else "1"
    path = tmp_path / "report.json"
    path.write_text(json.dumps(rep))
    code, out = run("class", fixture_path("sl2_h"), "--recheck", path)
    assert code == 1
    assert out["result"]["checks"]["alpha"] is False


def test_recheck_against_another_document(tmp_path):
    _, rep = run("class", fixture_path("sl2_h"))
    path = tmp_path / "report.json"
    path.write_text(json.dumps(rep))
    code, _ = run("class", fixture_path("sl2_e"), "--recheck", path)
    assert code == 3


def test_text_format():
    code, text = run("pbw", fixture_path("sl2_borel"), "--format", "text")
    assert code == 1
    assert "search: NotExists" in text


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "algebroid_pbw.cli", "validate", str(fixture_path("abelian"))],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["valid"]
