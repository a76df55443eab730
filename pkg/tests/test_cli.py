import csv
import io
import json
import math

import pytest

from app.config import settings
from app.main import main
from app.utils import verify
from tests.conftest import FULL2_DOC, GOLDEN_DOC

MOD2_DOC = {
    "kind": "code",
    "source": {"kind": "subshift", "alphabet": 4},
    "target": FULL2_DOC,
    "rule": {"0": 0, "1": 1, "2": 0, "3": 1},
    "name": "mod-2",
}


def rows(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


def test_entropy_of_the_golden_mean(write_doc, capsys):
    assert main(["entropy", str(write_doc("golden.json", GOLDEN_DOC))]) == 0
    assert capsys.readouterr().out == "0.481212\n"


def test_entropy_of_longer_forbidden_words(write_doc, capsys):
    doc = {"kind": "subshift", "alphabet": 2, "forbidden": ["111"]}
    assert main(["entropy", "--digits", "4", str(write_doc("no111.json", doc))]) == 0
    assert capsys.readouterr().out == "0.6094\n"


def test_entropy_of_the_fan(write_doc, capsys):
    assert main(["entropy", str(write_doc("fan.json", {"kind": "fan"}))]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(math.log(2), abs=1e-6)


def test_subset_entropy_tables(write_doc, capsys):
    path = str(write_doc("golden.json", GOLDEN_DOC))
    assert main(["subset-entropy", path, "--m", "2", "--n-max", "8"]) == 0
    table = rows(capsys.readouterr().out)
    assert len(table) == 8
    assert [int(r["n"]) for r in table] == list(range(1, 9))
    assert main(["subset-entropy", path, "--summary", "--m", "2,3"]) == 0
    summary = rows(capsys.readouterr().out)
    assert [r["m"] for r in summary] == ["2", "3"]
    assert all(r["tag"] == "language" for r in summary)
    assert float(summary[0]["value"]) == pytest.approx(0.481212, abs=0.01)


def test_overrides_end_with_their_command(write_doc, capsys):
    path = str(write_doc("golden.json", GOLDEN_DOC))
    assert main(["subset-entropy", path, "--summary", "--m", "2,3"]) == 0
    first = capsys.readouterr().out
    assert main(["subset-entropy", path, "--m", "2", "--n-max", "8", "--seed", "7"]) == 0
    capsys.readouterr()
    assert settings.N_MAX == 24 and settings.SEED == 0 and settings.RESOLUTIONS == [2, 3, 4]
    assert main(["subset-entropy", path, "--summary", "--m", "2,3"]) == 0
    assert capsys.readouterr().out == first


def test_hexp_of_the_fan(write_doc, capsys):
    assert main(["hexp", str(write_doc("fan.json", {"kind": "fan"})), "--m", "1..6"]) == 0
    profile = rows(capsys.readouterr().out)
    assert [r["m"] for r in profile] == ["1", "2", "3", "4", "5", "6"]
    assert all(float(r["value"]) >= math.log(2) - 0.01 for r in profile)


def test_hexp_of_a_subshift(write_doc, capsys):
    assert main(["hexp", str(write_doc("golden.json", GOLDEN_DOC))]) == 0
    profile = rows(capsys.readouterr().out)
    assert all(r["tag"] == "exact" and float(r["value"]) == 0.0 for r in profile)


def test_dim_entropy(write_doc, capsys):
    words = [format(i, "04b") for i in range(16)]
    path = write_doc("tree.json", {"kind": "tree", "ambient": FULL2_DOC, "depth": 4, "words": words})
    assert main(["dim-entropy", str(path), "--bridge"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["lambda_low"] <= result["lambda_high"]
    assert result["bridge"]["ok"]


def test_lower_then_verify(write_doc, tmp_path, capsys):
    source = str(write_doc("full2.json", FULL2_DOC))
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for out in (first, second):
        assert main(["lower", source, "--target", "0.3", "--max-stages", "5", "--out", str(out)]) == 0
    assert first.read_bytes() == second.read_bytes()
    doc = json.loads(first.read_text())
    assert doc["kind"] == "staged"
    assert doc["certificate"]["target"] == 0.3
    assert doc["run_config"]["max_stages"] == 5
    assert main(["verify", str(first)]) == 0
    checks = rows(capsys.readouterr().out)
    assert {"structure", "floors", "cumulative", "identity", "bounds"} <= {r["check"] for r in checks}
    assert all(r["ok"] == "true" for r in checks)


def test_verify_rejects_a_tampered_certificate(write_doc, tmp_path):
    out = tmp_path / "family.json"
    assert main(["lower", str(write_doc("full2.json", FULL2_DOC)), "--target", "0.3", "--max-stages", "4", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    doc["certificate"]["floors"][1] += 1
    out.write_text(json.dumps(doc))
    assert main(["verify", str(out)]) == 4


def test_lower_to_zero_and_partition(write_doc, capsys):
    source = str(write_doc("full2.json", FULL2_DOC))
    assert main(["lower", source, "--target", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "finite"
    assert main(["lower", source, "--target", "0.3", "--partition", "--max-stages", "4"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] and len(report["block_values"]) == 4


def test_lower_errors(write_doc, capsys):
    source = str(write_doc("full2.json", FULL2_DOC))
    assert main(["lower", source, "--target", "0.9"]) == 3
    assert "error: " in capsys.readouterr().err
    tree = write_doc("tree.json", {"kind": "tree", "ambient": FULL2_DOC, "depth": 1, "words": ["0"]})
    assert main(["lower", str(tree), "--target", "0.3", "--zero"]) == 3


def test_schema_error_exit_code(write_doc, capsys):
    bad = write_doc("bad.json", {"kind": "subshift", "alphabet": 2, "forbidden": ["3"]})
    assert main(["entropy", str(bad)]) == 2
    assert "outside alphabet 2" in capsys.readouterr().err
    assert main(["dim-entropy", str(write_doc("golden.json", GOLDEN_DOC))]) == 2


def test_factor_check(write_doc, capsys):
    code = str(write_doc("mod2.json", MOD2_DOC))
    assert main(["factor-check", code, "--m", "2", "--n-max", "16"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] and report["surjective"]
    assert report["fiber_value"] == pytest.approx(math.log(2), abs=1e-9)
    assert report["code"] == "mod-2"


def test_factor_check_failure_exit_code(write_doc, capsys):
    code = str(write_doc("mod2.json", MOD2_DOC))
    # a negative tolerance cannot be met even by equal sides
    assert main(["factor-check", code, "--m", "2", "--n-max", "8", "--tol", "-1"]) == 4
    assert not json.loads(capsys.readouterr().out)["ok"]


def test_factor_check_set_outside_the_source(write_doc):
    code = str(write_doc("mod2.json", MOD2_DOC))
    golden = str(write_doc("golden.json", GOLDEN_DOC))
    assert main(["factor-check", code, "--set", golden]) == 3


def test_verify_suite_subset(capsys):
    assert main(["verify", "--only", "exact-entropies", "separated-equals-spanning"]) == 0
    checks = rows(capsys.readouterr().out)
    assert [r["check"] for r in checks] == ["exact-entropies", "separated-equals-spanning"]


def test_verify_suite_reports_a_crashing_check(monkeypatch, capsys):
    def crashed(config):
        raise OverflowError("exp overflow")

    monkeypatch.setattr(verify, "SUITE", [("crashed", crashed)])
    assert main(["verify"]) == 4
    [check] = rows(capsys.readouterr().out)
    assert check["ok"] == "false" and check["detail"] == "unexpected OverflowError: exp overflow"


def test_bad_resolution_list(write_doc):
    with pytest.raises(SystemExit) as info:
        main(["hexp", str(write_doc("fan.json", {"kind": "fan"})), "--m", "0..2"])
    assert info.value.code == 2
