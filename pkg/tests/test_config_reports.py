from __future__ import annotations

import json
import math

import numpy as np
import pytest

from segray.concavity import boundary_probe, verify_model_self
from segray.config import load_config, parse_config
from segray.errors import ConfigInvalid
from segray.reports import (QuotientCurve, emit_plot_data, jsonable, read_csv,
                            write_csv, write_json)

BASE = """
[run]
experiment = compute-m
seed = 4

[profile]
kind = polynomial
coefficients = 0 1 0 1
diameter = 2.0
"""


def test_parse_and_hash():
    cfg = parse_config(BASE)
    assert cfg.experiment == "compute-m" and cfg.seed == 4
    assert cfg.get("profile", "coefficients") == [0.0, 1.0, 0.0, 1.0]
    # the seed is not part of the hash, everything else is
    assert parse_config(BASE.replace("seed = 4", "seed = 9")).config_hash == cfg.config_hash
    assert parse_config(BASE.replace("2.0", "3.0")).config_hash != cfg.config_hash


@pytest.mark.parametrize("text", [
    BASE + "tolerence = 1\n",
    BASE + "[nonsense]\na = 1\n",
    BASE.replace("2.0", "-2.0"),
    BASE.replace("compute-m", "compute-everything"),
    BASE + "[sampling]\ncount = many\n",
    BASE + "[profile]\nkind = again\n",
])
def test_strict_rejection(text):
    with pytest.raises(ConfigInvalid):
        parse_config(text)


def test_keys_case_sensitive():
    with pytest.raises(ConfigInvalid):
        parse_config(BASE + "[model]\nl = 1\n")
    assert parse_config(BASE + "[model]\nL = 1\n").get("model", "L") == 1.0


def test_experiment_mismatch(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(BASE)
    with pytest.raises(ConfigInvalid):
        load_config(p, "solve-heat")
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "missing.ini")


def test_csv_format(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["x", "label"], [[0.1, "a,b"], [1e-300, 'q"t']],
                  config_hash="abc", seed=3)
    raw = p.read_bytes()
    assert raw.startswith(b"# config_hash=abc seed=3\r\n")
    assert b'"a,b"' in raw and b'"q""t"' in raw
    assert raw.count(b"\r\n") == 4
    rows = read_csv(p)
    assert rows[0] == ["x", "label"] and float(rows[2][0]) == 1e-300
    assert rows[1][0] == repr(0.1)


def test_json_stable_and_strict(tmp_path):
    p = write_json(tmp_path / "s.json", {"b": np.float64(math.nan), "a": np.arange(2),
                                         "c": np.bool_(True)})
    text = p.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1], "b": None, "c": True}
    assert jsonable({1: math.inf}) == {"1": None}


def test_plot_series(tmp_path, unit_disc, model_eigen_unit):
    rep = verify_model_self(model_eigen_unit, count=50)
    (p,) = emit_plot_data(rep, tmp_path, "self")
    assert read_csv(p)[0] == ["r", "margin", "t"]
    probe = boundary_probe(unit_disc, mode="case1", steps=6)
    (p,) = emit_plot_data(probe, tmp_path, "probe")
    rows = read_csv(p)
    assert rows[0] == ["k", "boundary_distance", "E_f"] and len(rows) == 7
    s = np.linspace(0, 1, 101)
    curve = QuotientCurve(s, 6 / ((1 + 3 * s ** 2) * (1 + s ** 2)))
    (p,) = emit_plot_data(curve, tmp_path, "m")
    vals = np.array([[float(c) for c in r] for r in read_csv(p)[1:]])
    k = np.argmin(vals[:, 1])
    assert vals[k, 0] == 1.0 and vals[k, 1] == pytest.approx(0.75)
    with pytest.raises(TypeError):
        emit_plot_data(object(), tmp_path, "x")
