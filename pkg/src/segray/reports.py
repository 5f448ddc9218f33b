"""CSV and JSON writers shared by the command line runs.

CSV files use RFC 4180 quoting and CRLF line ends, preceded by one comment
line carrying the config hash and seed.  Floats are written with ``repr`` so
identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class QuotientCurve:
    s: np.ndarray
    values: np.ndarray
    t: float = 0.0


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows, config_hash: str = "", seed=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash} seed={seed}\r\n")
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """Rows of a file written by :func:`write_csv` (header comment skipped)."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        return list(csv.reader(fh))


def jsonable(obj):
    """Convert numpy values and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2,
                      ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_report(report, path, config_hash="", seed=None) -> Path:
    """Per-sample table of a verification or boundary report."""
    return write_csv(path, report.columns(), report.rows(), config_hash, seed)


def emit_plot_data(report, out_dir, stem: str, config_hash: str = "",
                   seed=None) -> list:
    """Plain CSV series for plotting.

    Verification reports give ``r, margin, t``; boundary sequences give
    ``k, boundary_distance, E_f``; quotient curves give ``s, quotient, t``.
    """
    out_dir = Path(out_dir)
    from .concavity.boundary import BoundarySequenceReport
    from .concavity.verify import VerificationReport

    if isinstance(report, VerificationReport):
        order = np.lexsort((report.t, report.r))
        rows = zip(report.r[order], report.margin[order], report.t[order])
        return [write_csv(out_dir / f"{stem}_margin_vs_r.csv",
                          ["r", "margin", "t"], rows, config_hash, seed)]
    if isinstance(report, BoundarySequenceReport):
        if report.mode == "lemma31":
            rows = zip(report.k, report.boundary_distance, report.values)
            cols = ["k", "boundary_distance", "c0"]
        else:
            E = report.values * report.r if report.mode == "case5" else report.values
            rows = zip(report.k, report.boundary_distance, E)
            cols = ["k", "boundary_distance", "E_f"]
        return [write_csv(out_dir / f"{stem}_sequence.csv", cols, rows,
                          config_hash, seed)]
    if isinstance(report, QuotientCurve):
        rows = ((s, q, report.t) for s, q in zip(report.s, report.values))
        return [write_csv(out_dir / f"{stem}_quotient.csv",
                          ["s", "quotient", "t"], rows, config_hash, seed)]
    raise TypeError(f"no plot series for {type(report).__name__}")
