import json
import os
import subprocess
import sys

import numpy as np
import pytest

from eprgeo.cli import EXIT_BAD_CONFIG, EXIT_OK, EXIT_UNKNOWN_SCENARIO, main, run_scenario
from eprgeo.config import ConfigError, default_config_text, parse_config
from eprgeo.geo import TWO_PI
from eprgeo.scenarios import SCENARIOS

SMALL = """
[interferometer]
detuning_hz = 2000
[grid]
n_log = 40
n_lin = 10
[optimizer]
n_delta = 81
n_phi = 120
"""


def read_csv(path):
    rows = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    names = rows[0].split(",")
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]], ndmin=2)
    return names, data


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(SMALL)
    return p


def test_defaults_and_units():
    run = parse_config(default_config_text())
    g = run.geo
    assert np.isclose(g.detuning, TWO_PI * 2000)
    assert np.isclose(20 * g.squeezer.r / np.log(10), 13.0)
    assert np.isclose(g.homodyne.theta, np.pi / 2)
    assert g.omc is None and g.schnupp_ls == 0
    assert run.optimizer["n_fsr"] == 80


def test_missing_detuning_named():
    with pytest.raises(ConfigError) as exc:
        parse_config("[interferometer]\narm_length = 1200\n", "x.ini")
    assert "detuning_hz" in str(exc.value)


def test_line_numbers_in_diagnostics():
    text = "[interferometer]\ndetuning_hz = 2000\nT_SRM = lots\n[losses]\nbogus = 1\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "x.ini")
    msgs = exc.value.diagnostics
    assert any(m.startswith("x.ini:3:") and "T_SRM" in m for m in msgs)
    assert any(m.startswith("x.ini:5:") and "bogus" in m for m in msgs)


def test_syntax_error_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[interferometer]\ndetuning_hz = 2000\nthis is not ini\n", "x.ini")
    assert "x.ini:3" in str(exc.value)


def test_overrides():
    run = parse_config(SMALL, overrides=["losses.input=0.1", "omc.enabled=true",
                                         "interferometer.schnupp_ls=0.05"])
    assert run.geo.losses.input_loss == 0.1
    assert run.geo.omc is not None and run.geo.schnupp_ls == 0.05
    with pytest.raises(ConfigError) as exc:
        parse_config(SMALL, overrides=["nonsense"])
    assert "override" in str(exc.value)
    with pytest.raises(ConfigError) as exc:
        parse_config(SMALL, overrides=["foo.bar=1"])
    assert "override 'foo.bar=1'" in str(exc.value)


def test_invalid_values_rejected():
    for bad in ("interferometer.T_SRM=1.5", "losses.input=1.0", "optimizer.n_fsr=0",
                "omc.mode=diagonal", "squeezer.epr_db=-3"):
        with pytest.raises(ConfigError):
            parse_config(SMALL, overrides=[bad])


def test_unknown_scenario_exit_code(cfg_file, tmp_path):
    assert main(["run", "nope", "--config", str(cfg_file), "--out", str(tmp_path)]) == \
        EXIT_UNKNOWN_SCENARIO


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[interferometer]\narm_length = 1200\n")
    assert main(["run", "sensitivity", "--config", str(p), "--out", str(tmp_path)]) == EXIT_BAD_CONFIG
    assert "detuning_hz" in capsys.readouterr().err
    assert main(["run", "sensitivity", "--config", str(tmp_path / "missing.ini"),
                 "--out", str(tmp_path)]) == EXIT_BAD_CONFIG


def test_sensitivity_outputs_and_determinism(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "sensitivity", "--config", str(cfg_file), "--out", str(a)]) == EXIT_OK
    m = run_scenario("sensitivity", cfg_file, b)
    assert len(m["files"]) == 4
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["files"] == m["files"]
    assert manifest["scenario"] == "sensitivity"
    assert manifest["config"]["interferometer"]["detuning_hz"] == 2000
    for f in m["files"]:
        assert (a / f).read_bytes() == (b / f).read_bytes()
    text = (a / m["files"][0]).read_text().splitlines()
    assert text[0].startswith("#")
    header = next(line for line in text if not line.startswith("#"))
    assert header.split(",")[:2] == ["frequency_hz", "value"]
    names, data = read_csv(a / "sensitivity__epr_lower.csv")
    assert np.all(np.abs(data[:, names.index("improvement_db")] - 10) < 0.05)


@pytest.mark.parametrize("name", [s for s in SCENARIOS if s != "sensitivity"])
def test_every_scenario_runs(name, cfg_file, tmp_path):
    overrides = ["study.schnupp_n_fsr=80", "study.omc_n_min=40", "study.omc_n_max=80",
                 "study.omc_n_step=40", "study.coupled_points=401", "study.io_losses=0.1",
                 "study.internal_losses=0.001", "study.schnupp_lengths=0.03",
                 "study.prm_transmissions=0.0009", "study.homodyne_angles_deg=90"]
    m = run_scenario(name, cfg_file, tmp_path, overrides)
    assert m["files"]
    for f in m["files"]:
        names, data = read_csv(tmp_path / f)
        assert names[:2] == ["frequency_hz", "value"]
        assert data.shape[0] > 0 and np.all(np.isfinite(data[:, :2]))


def test_thread_env_and_module_entry(cfg_file, tmp_path):
    env = dict(os.environ, EPRGEO_THREADS="1")
    out = subprocess.run([sys.executable, "-m", "eprgeo", "run", "homodyne-sweep", "--config",
                          str(cfg_file), "--out", str(tmp_path)], env=env, capture_output=True,
                         text=True)
    assert out.returncode == 0, out.stderr
    listing = subprocess.run([sys.executable, "-m", "eprgeo", "scenarios"], capture_output=True,
                             text=True)
    assert listing.stdout.split() == list(SCENARIOS)
