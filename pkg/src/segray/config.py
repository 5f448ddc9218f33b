"""Run configuration: an INI file with a fixed set of sections and keys.

Grammar (``key = value`` lines under ``[section]`` headers, ``#`` or ``;``
comments).  Lists are whitespace separated; polynomial term tables use
``"e1 e2 : c; e1 e2 : c"``; matrices use ``"a b; c d"``.  Unknown sections or
keys are rejected so a misspelt tolerance can never pass silently.

Example::

    [run]
    experiment = verify-elliptic
    seed = 7

    [domain]
    kind = disc
    radius = 1.0

    [grid]
    h = 0.01

    [model]
    L = 1.0
    nodes = 2001

    [sampling]
    count = 10000
    cutoff = 0.02
    tolerance = 0.01
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid

EXPERIMENTS = ("check-identities", "probe-boundary", "solve-heat", "solve-eigen",
               "compute-m", "verify-elliptic", "verify-parabolic",
               "kernel-spot-check")


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _words(text):
    return text.replace(",", " ").split()


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (parser, constraint) per key; constraint in {None, "pos", "nonneg", "int+"}
_SCALAR_FN = {"function": (str, None), "terms": (str, None),
              "wavevector": (_floats, None), "amplitude": (float, None),
              "phase": (float, None), "offset": (float, None), "a": (float, None)}

SCHEMA = {
    "run": {"experiment": (str, None), "seed": (int, "nonneg"),
            "out_dir": (str, None)},
    "domain": {"kind": (str, None), "radius": (float, "pos"),
               "center": (_floats, None), "semi_axes": (_floats, "pos"),
               "quadratic": (_floats, "nonneg"), "quartic": (_floats, "nonneg")},
    "tensor": {"kind": (str, None), "matrix": (str, None), **_SCALAR_FN},
    "potential": dict(_SCALAR_FN),
    "model": {"L": (float, "pos"), "nodes": (int, "pos"),
              "potential_terms": (str, None)},
    "grid": {"h": (float, "pos"), "dt": (float, "pos"), "t_end": (float, "nonneg"),
             "t_list": (_floats, "nonneg"), "scheme": (str, None)},
    "quadrature": {"panels": (int, "pos"), "nodes_per_panel": (int, "pos"),
                   "adaptive": (_bool, None), "refine_tol": (float, "pos"),
                   "grade_levels": (int, "nonneg")},
    "sampling": {"count": (int, "pos"), "cutoff": (float, "pos"),
                 "tolerance": (float, "pos"), "tol_rel": (float, "pos"),
                 "spot_fraction": (float, "nonneg")},
    "identities": {"pairs": (int, "pos"), "h": (float, "pos"),
                   "min_r": (float, "pos"), "rel_tol": (float, "pos"),
                   "min_order": (float, "pos")},
    "profile": {"kind": (str, None), "coefficients": (_floats, None),
                "diameter": (float, "pos")},
    "modulus": {"kind": (str, None), "coefficients": (_floats, None)},
    "mformula": {"variant": (str, None), "m0": (float, "nonneg"),
                 "ns": (int, "pos"), "nt": (int, "pos")},
    "probe": {"modes": (_words, None), "steps": (int, "pos"),
              "escape": (float, "pos"), "probe_distance": (float, "pos"),
              "direction": (_floats, None)},
    "initial": {"kind": (str, None), "scale": (float, "pos")},
    "kernel": {"width": (float, "pos"), "source": (_floats, None)},
}


@dataclass
class RunConfig:
    experiment: str
    sections: dict
    seed: int = 0
    out_dir: str | None = None
    source: str | None = None
    raw: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    @property
    def config_hash(self) -> str:
        """sha256 of the canonical JSON of the raw key/value text."""
        canon = json.dumps({"experiment": self.experiment, "sections": self.raw},
                           sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _check(section, key, value, constraint):
    vals = np.atleast_1d(np.asarray(value, dtype=float)) \
        if constraint is not None else None
    if constraint == "pos" and not np.all(vals > 0):
        raise ConfigInvalid(f"[{section}] {key} must be positive")
    if constraint == "nonneg" and not np.all(vals >= 0):
        raise ConfigInvalid(f"[{section}] {key} must be nonnegative")


def parse_config(text: str, experiment: str | None = None,
                 source: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str            # keys are case sensitive
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigInvalid(f"cannot parse config: {exc}") from exc
    sections, raw = {}, {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigInvalid(f"unknown section [{name}]")
        sections[name], raw[name] = {}, {}
        for key, text_value in cp.items(name):
            if key not in SCHEMA[name]:
                raise ConfigInvalid(f"unknown key {key!r} in [{name}]")
            parser, constraint = SCHEMA[name][key]
            try:
                value = parser(text_value)
            except ValueError as exc:
                raise ConfigInvalid(f"[{name}] {key}: {exc}") from exc
            _check(name, key, value, constraint)
            sections[name][key] = value
            raw[name][key] = text_value.strip()
    run = sections.get("run", {})
    named = run.get("experiment")
    if experiment is None:
        experiment = named
    elif named is not None and named != experiment:
        raise ConfigInvalid(f"config names experiment {named!r}, "
                            f"command asked for {experiment!r}")
    if experiment not in EXPERIMENTS:
        raise ConfigInvalid(f"unknown experiment {experiment!r}; "
                            f"choose from {', '.join(EXPERIMENTS)}")
    raw.get("run", {}).pop("seed", None)     # the seed is recorded separately
    raw.get("run", {}).pop("out_dir", None)
    return RunConfig(experiment, sections, int(run.get("seed", 0)),
                     run.get("out_dir"), source, raw)


def load_config(path, experiment: str | None = None) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, experiment, str(p))
