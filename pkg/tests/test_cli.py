from __future__ import annotations

import json
from pathlib import Path

import pytest

from segray.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run(tmp_path, name, text=None, extra=(), experiment=None):
    cfg = CONFIGS / name
    if text is not None:
        cfg = tmp_path / name
        cfg.write_text(text)
    out = tmp_path / "out"
    exp = experiment or name.replace(".ini", "").replace("_", "-")
    code = main([exp, "--config", str(cfg), "--out-dir", str(out), *extra])
    return code, json.loads((out / "summary.json").read_text()), out


def test_check_identities_constant(tmp_path):
    code, summary, _ = _run(tmp_path, "check_identities.ini")
    assert code == 0
    assert summary["result"]["max_rel_err"] < 1e-10


def test_compute_m(tmp_path):
    code, summary, out = _run(tmp_path, "compute_m.ini")
    assert code == 0
    assert summary["result"]["m"] == pytest.approx(0.75, abs=1e-8)
    assert (out / "plots" / "m_quotient.csv").exists()


def test_profile_invalid_exit_2(tmp_path):
    text = (CONFIGS / "compute_m.ini").read_text().replace(
        "coefficients = 0 1 0 1", "coefficients = 0 1 0 -1").replace(
        "diameter = 2.0", "diameter = 4.0")
    code, summary, _ = _run(tmp_path, "compute_m.ini", text)
    assert code == 2 and summary["error"] == "ProfileInvalid"


def test_unknown_key_exit_2(tmp_path):
    text = (CONFIGS / "compute_m.ini").read_text() + "\n[sampling]\ntolerence = 1\n"
    code, summary, _ = _run(tmp_path, "compute_m.ini", text)
    assert code == 2 and summary["error"] == "ConfigInvalid"


def test_gate_failure_exit_1(tmp_path):
    text = (CONFIGS / "probe_boundary.ini").read_text().replace(
        "steps = 12", "steps = 12\nescape = 1e12")
    code, summary, out = _run(tmp_path, "probe_boundary.ini", text)
    assert code == 1 and summary["status"] == "fail"
    assert (out / "probe_case1.csv").exists()       # files still written


def test_solver_error_exit_2(tmp_path):
    text = (CONFIGS / "solve_eigen.ini").read_text().replace("h = 0.02", "h = 0.3")
    code, summary, _ = _run(tmp_path, "solve_eigen.ini", text)
    assert code == 2 and summary["error"] == "GridTooCoarse"


def test_reproducible_bytes(tmp_path):
    outs = []
    for k in range(2):
        sub = tmp_path / f"r{k}"
        sub.mkdir()
        code, _, out = _run(sub, "solve_heat.ini", extra=("--seed", "3"))
        assert code == 0
        outs.append(out)
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    assert files
    for f in files:
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
        assert (outs[0] / f).read_bytes().startswith(b"# config_hash=")


def test_all_experiments_have_configs():
    from segray.config import EXPERIMENTS
    for exp in EXPERIMENTS:
        assert (CONFIGS / (exp.replace("-", "_") + ".ini")).exists()
