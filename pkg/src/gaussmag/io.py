"""CSV and JSON emission for trajectories and experiment summaries."""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from gaussmag.averages import AverageEngine
from gaussmag.fields import FieldModel
from gaussmag.observables import diagnostics


def csv_header(d: int) -> list[str]:
    cols = ["t"]
    cols += [f"q{i}" for i in range(1, d + 1)]
    cols += [f"v{i}" for i in range(1, d + 1)]
    for name in ("ReQ", "ImQ", "ReU", "ImU"):
        cols += [f"{name}{i}{j}" for i in range(1, d + 1) for j in range(1, d + 1)]
    cols += ["zeta_R", "zeta_I", "norm", "energy", "energy_err_abs", "energy_err_rel", "sympl_r1", "sympl_r2", "det_Q_abs"]
    return cols


def trajectory_records(states, model: FieldModel, engine=None) -> list[dict]:
    """One row per state with parameters and diagnostics; energy errors relative to the first row."""
    engine = engine or AverageEngine()
    rows = []
    E0 = None
    for s in states:
        dg = diagnostics(s, model, engine, E0)
        if E0 is None:
            E0 = dg.energy
        d = s.dim
        vals = [s.t, *s.q, *s.v, *s.Q.real.ravel(), *s.Q.imag.ravel(), *s.Upsilon.real.ravel(), *s.Upsilon.imag.ravel()]
        vals += [s.zeta_R, s.zeta_I, dg.norm, dg.energy, dg.energy_err_abs, dg.energy_err_rel, dg.sympl_r1, dg.sympl_r2, dg.det_Q_abs]
        rows.append(dict(zip(csv_header(d), (float(v) for v in vals))))
    return rows


def emit_csv(records: list[dict], path, dim: int | None = None) -> Path:
    """Write ``records`` with a header row; floats use the shortest round-trip repr."""
    path = Path(path)
    if records:
        header = list(records[0].keys())
    elif dim is not None:
        header = csv_header(dim)
    else:
        header = []
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in records:
                w.writerow([repr(float(r[k])) for k in header])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def emit_json(obj, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def output_dir(cli_value: str | None) -> Path:
    """CLI value, else ``$GWP_OUT_DIR``, else the current directory; created if missing."""
    p = Path(cli_value or os.environ.get("GWP_OUT_DIR") or ".")
    p.mkdir(parents=True, exist_ok=True)
    return p
