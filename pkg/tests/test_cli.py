import json
from pathlib import Path

import numpy as np
import pytest

from sddpde import config as cfgmod
from sddpde.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, list_presets, main
from sddpde.config import ConfigError

GOLDEN = Path(__file__).parent / "golden" / "presets.txt"


def write_ini(path, text):
    path.write_text(text)
    return str(path)


def report(out):
    return json.loads((Path(out) / "report.json").read_text())


def test_preset_names_match_golden_file():
    assert cfgmod.preset_names() == GOLDEN.read_text().split()


def test_list_presets(capsys):
    assert main(["list-presets"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 6
    assert [ln.split()[0] for ln in lines] == cfgmod.preset_names()
    assert list_presets().splitlines() == lines


def test_unknown_preset_hints(tmp_path, capsys):
    assert main(["preset", "linear-dde-orcle", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "did you mean 'linear-dde-oracle'" in capsys.readouterr().err


def test_zero_preset(tmp_path):
    out = tmp_path / "zero"
    assert main(["preset", "zero", "--out", str(out)]) == EXIT_OK
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 2:] == 0)
    assert (out / "trajectory_windows.jsonl").read_text().strip()
    assert report(out)["status"] == "PASS"


def test_linear_dde_oracle_preset(tmp_path):
    assert main(["preset", "linear-dde-oracle", "--out", str(tmp_path)]) == EXIT_OK
    checks = {c["name"]: c for c in report(tmp_path)["checks"]}
    gap = checks["Picard vs method-of-steps sup gap"]
    assert gap["passed"] and gap["value"] <= 1e-5


def test_certify_subset(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SDDPDE_RUN__CRITERIA", "3,8")
    assert main(["preset", "certify", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[PASS] criterion 3" in out and "[PASS] criterion 8" in out
    assert len(json.loads((tmp_path / "certify.json").read_text())) == 2


def test_run_from_ini_is_deterministic(tmp_path):
    ini = write_ini(tmp_path / "c.ini", """
[model]
n_modes = 6
delay.c1 = 0.5
nonlinearity.kernel = gaussian

[initial]
name = random
amplitude = 0.3

[run]
kind = solve
t_final = 0.5
""")
    for tag in ("a", "b"):
        assert main(["run", ini, "--out", str(tmp_path / tag), "--seed", "7"]) == EXIT_OK
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert main(["run", ini, "--out", str(tmp_path / "c"), "--seed", "8"]) == EXIT_OK
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "c" / "trajectory.csv").read_bytes()


def test_unreachable_threshold_exits_2(tmp_path):
    ini = write_ini(tmp_path / "c.ini", "[model]\nn_modes = 4\ndelay.c3 = 0.5\n[run]\nt_final = 0.5\n")
    assert main(["run", ini, "--out", str(tmp_path)]) == EXIT_CHECK
    (fail,) = report(tmp_path)["failures"]
    assert fail["module"] == "delay" and "1/C3" in fail["name"]


def test_window_rejection_exits_2(tmp_path):
    ini = write_ini(tmp_path / "c.ini", """
[model]
n_modes = 4
nonlinearity.amplitude = 50
nonlinearity.gain = 50
[initial]
name = bump
[run]
t_final = 1.0
""")
    assert main(["run", ini, "--out", str(tmp_path)]) == EXIT_CHECK
    (fail,) = report(tmp_path)["failures"]
    assert fail["module"] == "solver" and "contraction" in fail["name"]
    assert "l_f_0" in fail["message"]


@pytest.mark.parametrize("text, needle", [
    ("[model]\nn_mode = 4\n", "did you mean 'model.n_modes'"),
    ("[model]\nn_modes = four\n", "cannot parse"),
    ("[initial]\nname = bumpy\n", "did you mean 'bump'"),
    ("[run]\nkind = solver\n", "did you mean 'solve'"),
    ("[runs]\nkind = solve\n", "unknown section"),
    ("[run]\nt_final = -1\n", "positive"),
    ("[model]\nnonlinearity.kernel = box\n", "model:"),
])
def test_configuration_errors_exit_1(tmp_path, capsys, text, needle):
    ini = write_ini(tmp_path / "c.ini", text)
    assert main(["run", ini, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert needle in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path):
    assert main(["run", str(tmp_path / "nope.ini")]) == EXIT_CONFIG


def test_env_overrides_file(tmp_path):
    ini = write_ini(tmp_path / "c.ini", "[model]\ndelay.c1 = 0.5\n")
    cfg = cfgmod.load(ini, environ={"SDDPDE_MODEL__DELAY__C1": "0.7", "OTHER": "x"})
    assert cfg.model_keys["model.delay.c1"] == "0.7"
    assert cfg.build_model().delay.c1 == 0.7
    with pytest.raises(ConfigError):
        cfgmod.load(ini, environ={"SDDPDE_MODEL__DELAY__C9": "1"})


def test_default_seed_and_override():
    assert cfgmod.preset("zero").seed == 42
    assert cfgmod.preset("zero", seed=3).seed == 3


def test_ini_roundtrip(tmp_path):
    flat = dict(cfgmod.PRESETS["linear-dde-oracle"][1])
    path = tmp_path / "p.ini"
    path.write_text(cfgmod.to_ini(flat))
    a, b = cfgmod.load(path, environ={}), cfgmod.from_flat(flat)
    assert (a.model_keys, a.initial_name, a.initial_params, a.run) == \
        (b.model_keys, b.initial_name, b.initial_params, b.run)


def test_presets_build():
    for name in cfgmod.preset_names():
        cfg = cfgmod.preset(name, environ={})
        cfg.build_model()
        assert cfg.kind in cfgmod.RUN_KINDS


def test_inline_comments(tmp_path):
    ini = write_ini(tmp_path / "c.ini", "[model]\nn_modes = 4   ; truncation\ndelay.kind = constant # lag\n")
    cfg = cfgmod.load(ini, environ={})
    assert cfg.build_model().n_modes == 4
    assert cfg.build_model().delay.kind == "constant"
