import json

import pytest

from gwwindow.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_exact_q_csv(capsys):
    code, out = run(capsys, "exact", "q", "--n", "3", "--law", "binary")
    lines = out.strip().split("\n")
    assert code == 0
    assert lines[0] == "n,f_n0,Q,d,a"
    row2 = lines[3].split(",")
    assert float(row2[2]) == pytest.approx(0.375)


def test_exact_constants_json(capsys):
    code, out = run(capsys, "exact", "constants", "--alpha", "1", "--y", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["schema_version"] == "1.0"
    assert "config_hash" in doc and "seed" in doc
    assert doc["term2_constant"] == pytest.approx(0.5641895835477563)


def test_law_validate(capsys):
    code, out = run(capsys, "law", "validate", "--law", "geometric")
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_malformed_law_exits_one(capsys):
    code = main(["exact", "q", "--law", '{"family": "unicorn"}'])
    assert code == 1


def test_simulate_tail_json(capsys):
    code, out = run(capsys, "simulate", "tail", "--law", "binary", "--j", "1",
                    "--n", "2", "--samples", "4000", "--seed", "5")
    doc = json.loads(out)
    assert code == 0
    assert doc["censor_lo"] <= doc["estimate"] <= doc["censor_hi"]
    assert abs(doc["estimate"] - 0.5) < 0.05


def test_same_seed_reproduces_output(capsys):
    args = ("simulate", "em", "--law", "geometric", "--m", "50", "--j", "5",
            "--samples", "2000", "--seed", "11")
    _, out1 = run(capsys, *args)
    _, out2 = run(capsys, *args)
    assert out1 == out2


def test_bounds_csv(capsys):
    code, out = run(capsys, "bounds", "check", "--law", "binary",
                    "--samples", "5000")
    lines = out.strip().split("\n")
    assert code == 0
    assert lines[0].startswith("bound,m,k,rhs")
    assert "violated" not in out


def test_limit_vstar_csbp(capsys):
    code, out = run(capsys, "limit", "vstar", "--method", "csbp", "--T", "1",
                    "--paths", "400", "--seed", "3")
    doc = json.loads(out)
    assert code == 0
    assert 0.4 < doc["estimate"] < 0.9


def test_output_file(tmp_path, capsys):
    target = tmp_path / "out.json"
    code = main(["exact", "constants", "--out", str(target)])
    assert code == 0
    assert json.loads(target.read_text())["cor22_constant"] > 0
