"""Forecast-horizon sweep."""
from __future__ import annotations

import numpy as np

from .dataset import horizon_steps
from .lstm import train_recurrent
from .metrics import evaluate_model
from .trees import train_trees

TRAINERS = {"recurrent": train_recurrent, "trees": train_trees}


def parse_range(spec):
    """'30:330:60' -> [30, 90, ..., 330] (inclusive stop); '30,90' -> [30, 90]."""
    s = str(spec).strip()
    if ":" in s:
        parts = [float(p) for p in s.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad range {spec!r}; expected start:stop:step")
        a, b, st = parts
        n = int(np.floor((b - a) / st + 1e-9)) + 1
        vals = [a + i * st for i in range(max(n, 0))]
    else:
        vals = [float(p) for p in s.split(",") if p.strip()]
    if not vals:
        raise ValueError(f"empty horizon list {spec!r}")
    for v in vals:
        horizon_steps(v)
    return [int(v) if float(v).is_integer() else v for v in vals]


def mse_slope(rows, per_ms=60.0):
    """Least-squares MSE increase per ``per_ms`` of horizon."""
    h = np.array([r["h_ms"] for r in rows], dtype=float)
    m = np.array([r["mse"] for r in rows], dtype=float)
    if len(h) < 2:
        return float("nan")
    return float(np.polyfit(h, m, 1)[0] * per_ms)


def ablate_horizon(ds, horizons, model="recurrent", variant="ftvac", seed=0, log=None, **train_kw):
    """Train and evaluate one model per horizon; rows carry ``h_ms`` and the metric grid."""
    if model not in TRAINERS:
        raise ValueError(f"unknown model {model!r}")
    rows = []
    for h in horizons:
        kw = dict(train_kw)
        if model == "recurrent":
            kw["seed"] = seed
        m = TRAINERS[model](ds, variant, h, **kw)
        row = {"h_ms": h, "model": model, "variant": m.variant}
        row.update(evaluate_model(m, ds, "test"))
        if log:
            log(f"h={h} ms  mse {row['mse']:.5f}  mbte@0.5 {row['mbte@0.5']}")
        rows.append(row)
    return rows
