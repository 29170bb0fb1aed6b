import csv
import json
import pathlib

import numpy as np
import pytest

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from conftest import SCENARIO_DIR
from mptherm import cli, config
from mptherm.errors import MpthermError

MINIMAL = """\
[grid]
n_nodes = 9

[material]
preset = "isotropic"
tau = 0.05

[sources]
r = [{kind = "ramp", amp = 1.0, x0 = 0.5, w = 0.2, t0 = 0.0, t1 = 0.05}]

[boundary.left]
[boundary.right]

[run]
t_end = 0.1
dt = 1e-3
"""


def _write(tmp_path, text, name="scn.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_default_scenario_round_trips():
    raw = tomllib.loads(config.DEFAULT_SCENARIO)
    norm = config.normalize(raw, origin="default")
    again = config.normalize(tomllib.loads(config.emit(norm)),
                             origin="emitted")
    assert again == norm


def test_minimal_file_fills_defaults(tmp_path):
    norm = config.load_scenario(_write(tmp_path, MINIMAL))
    assert norm["grid"] == {"n_nodes": 9, "length": 1.0}
    assert norm["run"]["record_every"] == 1
    assert norm["material"]["preset"] == "isotropic"
    assert norm["material"]["tau"] == 0.05
    assert norm["boundary"]["left"]["theta"] == "dirichlet"
    scn = config.build_scenario(norm)
    assert scn.grid.n_nodes == 9
    assert scn.material.tau == 0.05
    assert len(scn.sources.r) == 1


def test_parse_errors_are_typed(tmp_path):
    bad = _write(tmp_path, "[grid\nn_nodes = 9\n")
    with pytest.raises(MpthermError) as err:
        config.load_scenario(bad)
    assert err.value.code == "PARSE_ERROR"
    with pytest.raises(MpthermError) as err:
        config.load_scenario(tmp_path / "missing.toml")
    assert err.value.code == "PARSE_ERROR"


def test_unknown_keys_rejected(tmp_path):
    text = MINIMAL.replace("n_nodes = 9", "n_nodes = 9\nnnodes = 5")
    with pytest.raises(MpthermError) as err:
        config.load_scenario(_write(tmp_path, text))
    assert err.value.code == "UNKNOWN_KEY"
    assert "grid.nnodes" in err.value.message


def test_validation_errors(tmp_path):
    no_run = MINIMAL.split("[run]")[0]
    with pytest.raises(MpthermError) as err:
        config.load_scenario(_write(tmp_path, no_run))
    assert err.value.code == "VALIDATION_ERROR"

    no_right = MINIMAL.replace("[boundary.right]\n", "")
    with pytest.raises(MpthermError) as err:
        config.load_scenario(_write(tmp_path, no_right))
    assert err.value.code == "VALIDATION_ERROR"
    assert "boundary.right" in err.value.message

    bad_dt = MINIMAL.replace("dt = 1e-3", "dt = -1e-3")
    with pytest.raises(MpthermError) as err:
        config.load_scenario(_write(tmp_path, bad_dt))
    assert err.value.code == "VALIDATION_ERROR"

    bool_amp = MINIMAL.replace("amp = 1.0", "amp = true")
    with pytest.raises(MpthermError) as err:
        config.load_scenario(_write(tmp_path, bool_amp))
    assert err.value.code == "VALIDATION_ERROR"


def test_random_preset_builds(tmp_path):
    text = MINIMAL.replace('preset = "isotropic"\ntau = 0.05',
                           'preset = "random"\nseed = 23\n'
                           'coupling_scale = 0.1\ntau = 0.05')
    scn = config.parse_scenario(_write(tmp_path, text))
    from mptherm.material import random_admissible_material
    ref = random_admissible_material(seed=23, coupling_scale=0.1, tau=0.05)
    assert np.array_equal(scn.material.C, ref.C)


def test_shipped_scenarios_parse():
    for name in ("reciprocity_a.toml", "reciprocity_b.toml",
                 "energy_decoupled.toml", "front_pulse.toml"):
        scn = config.parse_scenario(SCENARIO_DIR / name)
        assert scn.grid.n_nodes >= 5


def test_cli_print_defaults_round_trips(capsys):
    assert cli.main(["--print-defaults"]) == 0
    out = capsys.readouterr().out
    norm = config.normalize(tomllib.loads(out), origin="stdout")
    assert norm == config.normalize(tomllib.loads(config.DEFAULT_SCENARIO),
                                    origin="default")


def test_cli_print_scenario(capsys, tmp_path):
    path = _write(tmp_path, MINIMAL)
    assert cli.main(["--print-scenario", str(path)]) == 0
    out = capsys.readouterr().out
    assert tomllib.loads(out)["grid"]["n_nodes"] == 9


def test_cli_errors_are_json_on_stderr(capsys, tmp_path):
    code = cli.main(["simulate", "--scenario", str(tmp_path / "nope.toml"),
                     "--out", str(tmp_path / "out")])
    assert code == 2
    captured = capsys.readouterr()
    payload = json.loads(captured.err.strip())
    assert payload["error"] == "PARSE_ERROR"


def test_cli_missing_second_scenario(capsys, tmp_path):
    path = _write(tmp_path, MINIMAL)
    code = cli.main(["check-reciprocity", "--scenario", str(path),
                     "--out", str(tmp_path / "out")])
    assert code == 2
    payload = json.loads(capsys.readouterr().err.strip())
    assert payload["error"] == "VALIDATION_ERROR"


def test_cli_simulate_writes_history(tmp_path):
    quiet = MINIMAL.replace(
        'r = [{kind = "ramp", amp = 1.0, x0 = 0.5, w = 0.2, t0 = 0.0, '
        't1 = 0.05}]', "r = []")
    path = _write(tmp_path, quiet)
    out = tmp_path / "out"
    assert cli.main(["simulate", "--scenario", str(path),
                     "--out", str(out)]) == 0
    with open(out / "history.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:4] == ["t", "x", "u1", "u2"]
    assert len(rows) == 1 + 101 * 9
    body = np.array([[float(v) for v in row] for row in rows[1:]])
    assert np.abs(body[:, 2:]).max() == 0.0  # null data stays null
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema"] == 1
    assert summary["command"] == "simulate"


def test_cli_simulate_is_deterministic(tmp_path):
    path = _write(tmp_path, MINIMAL)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert cli.main(["simulate", "--scenario", str(path), "--out", str(out1)]) == 0
    assert cli.main(["simulate", "--scenario", str(path), "--out", str(out2)]) == 0
    assert ((out1 / "history.csv").read_bytes()
            == (out2 / "history.csv").read_bytes())
    assert ((out1 / "traces.csv").read_bytes()
            == (out2 / "traces.csv").read_bytes())


def test_cli_check_energy_summary(tmp_path):
    out = tmp_path / "energy"
    code = cli.main(["check-energy",
                     "--scenario", str(SCENARIO_DIR / "energy_decoupled.toml"),
                     "--out", str(out), "--levels", "1"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    checks = summary["checks"]
    assert len(checks) == 1
    assert checks[0]["check"] == "energy"
    assert checks[0]["pass"] is True
    assert checks[0]["defect"] <= checks[0]["tolerance"]
    level_csv = out / "energy_level1.csv"
    assert level_csv.exists()


def test_cli_check_reciprocity_on_shipped_pair(tmp_path):
    out = tmp_path / "recip"
    code = cli.main(["check-reciprocity",
                     "--scenario", str(SCENARIO_DIR / "reciprocity_a.toml"),
                     "--scenario-b", str(SCENARIO_DIR / "reciprocity_b.toml"),
                     "--out", str(out), "--levels", "1"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert all(entry["pass"] for entry in summary["checks"])
    with open(out / "reciprocity_level1.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["t_or_s"]) for r in rows] == [0.5, 1.0]
    for row in rows:
        assert abs(float(row["I_12"]) - float(row["I_21"])) <= 5e-3 * max(
            abs(float(row["I_12"])), abs(float(row["I_21"])))


def test_cli_tolerance_flag_controls_exit(tmp_path):
    out = tmp_path / "strict"
    code = cli.main(["check-energy",
                     "--scenario", str(SCENARIO_DIR / "energy_decoupled.toml"),
                     "--out", str(out), "--levels", "1",
                     "--tol-energy", "1e-12"])
    assert code == 1
    summary = json.loads((out / "summary.json").read_text())
    assert summary["checks"][0]["pass"] is False
