import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from osccrit.cli import ConfigError, RunConfig, dumps, main, parse_config

WITNESS = {"system": {"a1": [[1, 1, 0]], "a2": [[1, 0, -3]]}}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def cfg_file(tmp_path):
    def write(obj):
        path = tmp_path / "cfg.json"
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    return write


def test_dump_defaults_roundtrip(capsys):
    code, doc = run(capsys, "--dump-defaults")
    assert code == 0
    assert parse_config(doc) == RunConfig()


def test_dumps_uses_17_digits():
    assert dumps({"x": 0.1}).strip() == '{\n  "x": 0.10000000000000001\n}'
    assert json.loads(dumps([1 / 3]))[0] == 1 / 3


def test_check_criteria_example1(capsys):
    code, doc = run(capsys, "check-criteria")
    assert code == 0 and doc["criteria"]["verdict"] == "AllOscillate"


def test_check_criteria_witness(capsys, cfg_file):
    code, doc = run(capsys, "check-criteria", "--config", cfg_file(WITNESS))
    assert code == 0 and doc["criteria"]["verdict"] == "NonOscillatingExists"


def test_check_criteria_violation(capsys, cfg_file):
    code, doc = run(capsys, "check-criteria", "--config", cfg_file({"system": {"lambda1": 1, "lambda2": 1}}))
    assert code == 3 and doc["violations"] == ["LambdaProductNotGreaterThanOne"]


def test_check_criteria_inconclusive(capsys, cfg_file):
    code, doc = run(capsys, "check-criteria", "--config", cfg_file({"system": {"a1": [[1, 0, -1]], "a2": [[1, 0, -1]]}}))
    assert code == 0 and doc["criteria"]["verdict"] == "Inconclusive"


@pytest.mark.parametrize(
    "bad",
    [
        "{not json",
        {"system": {"n3": 1}},
        {"extra": {}},
        {"quad": {"quad_tol": "small"}},
        {"quad": {"quad_tol": 2}},
        {"system": {"a1": [[1, 2]]}},
        {"system": {"a1": [[-1, 0, 0]]}},
        {"sim": {"osc_min_zeros": 1.5}},
        {"fixed_point": {"grid": "random"}},
        {"output": {"format": "yaml"}},
        [1, 2],
    ],
)
def test_malformed_config(capsys, cfg_file, bad):
    assert main(["check-criteria", "--config", cfg_file(bad)]) == 2


def test_missing_config_file(capsys, tmp_path):
    assert main(["check-criteria", "--config", str(tmp_path / "nope.json")]) == 2


def test_parse_rejects_unknown():
    with pytest.raises(ConfigError):
        parse_config({"sim": {"t_final": 3}})


def test_simulate_harmonic(capsys, cfg_file):
    cfg = {"system": {"n1": 1, "n2": 1, "lambda1": 1, "lambda2": 1, "a1": [[1, 0, 0]], "a2": [[1, 0, 0]]},
           "sim": {"t_end": 30, "x1_derivs": [1], "x2_derivs": [0]}}
    code, doc = run(capsys, "simulate", "--config", cfg_file(cfg))
    assert code == 0 and doc["trajectory"]["classification"] == "Oscillating"


def test_simulate_example1_with_csv(capsys, cfg_file, tmp_path):
    csv = tmp_path / "traj.csv"
    code, doc = run(capsys, "simulate", "--config", cfg_file({"sim": {"t_end": 10}}), "--csv", str(csv))
    assert code == 0
    tr = doc["trajectory"]
    assert tr["classification"] == "Oscillating" and tr["status"] == "BlowUp"
    df = pd.read_csv(csv, float_precision="round_trip")
    assert list(df.columns) == ["t", "x1", "x1_d1", "x2", "x2_d1"]
    assert len(df) == tr["accepted_steps"] + 1


def test_simulate_zero_init(capsys, cfg_file):
    code, doc = run(capsys, "simulate", "--config", cfg_file({"sim": {"x1_derivs": [0, 0], "x2_derivs": [0, 0]}}))
    assert code == 0 and doc["trajectory"]["classification"] == "Improper"


def test_simulate_wrong_init_length(capsys, cfg_file):
    assert main(["simulate", "--config", cfg_file({"sim": {"x1_derivs": [1]}})]) == 2


def test_construct_witness(capsys, cfg_file, tmp_path):
    csv = tmp_path / "grid.csv"
    code, doc = run(capsys, "construct-nonosc", "--config", cfg_file(WITNESS), "--csv", str(csv))
    assert code == 0
    fp = doc["fixed_point"]
    assert fp["converged"] and fp["K1"] == pytest.approx(6.1430, abs=1e-4)
    assert doc["verification"]["passed"]
    assert doc["witness_simulation"]["classification"] == "NonOscillating"
    data = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert data.shape == (fp["grid_points"], 3)


def test_construct_gate_closed(capsys):
    code, doc = run(capsys, "construct-nonosc")
    assert code == 3 and doc["criteria"]["verdict"] == "AllOscillate"


def test_construct_degenerate(capsys, cfg_file):
    code, doc = run(capsys, "construct-nonosc", "--config", cfg_file({"system": {"a1": []}}))
    assert code == 3 and doc["degenerate_P"] == 0


def test_construct_mirror_case(capsys, cfg_file):
    cfg = {"system": {"a1": [[1, 0, -3]], "a2": [[1, 1, 0]], "lambda1": 3, "lambda2": 2}}
    code, doc = run(capsys, "construct-nonosc", "--config", cfg_file(cfg))
    assert code == 0 and doc["swapped"] is True


def test_construct_nonconvergence(capsys, cfg_file):
    cfg = {**WITNESS, "fixed_point": {"max_iter": 2}}
    assert main(["construct-nonosc", "--config", cfg_file(cfg)]) == 4


@pytest.mark.parametrize("case, branch", [(1, "(i)"), (2, "(ii)")])
def test_reproduce(capsys, case, branch):
    code, doc = run(capsys, "reproduce-example", str(case))
    assert code == 0 and doc["reproduced"]
    assert branch in doc["criteria"]["witness_branch"]


def test_reproduce_case2_inner(capsys):
    _, doc = run(capsys, "reproduce-example", "2")
    assert abs(doc["inner_moment_value"] - 2) <= 1e-6


def test_reproduce_invalid_case(capsys):
    with pytest.raises(SystemExit) as info:
        main(["reproduce-example", "3"])
    assert info.value.code == 2


def test_no_command(capsys):
    assert main([]) == 2


def test_deterministic_reports():
    cmd = [sys.executable, "-m", "osccrit", "simulate"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and first


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "osccrit", "reproduce-example", "1"], capture_output=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["criteria"]["verdict"] == "AllOscillate"
