"""Model files and metric reports.

Recurrent models are stored as ``.npz`` with a JSON header array; tree
models as JSON. Both carry a format version, the architecture and the
input normalisation.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dataset import Normalizer
from .lstm import LSTMParams, RecurrentModel
from .metrics import THRESHOLDS
from .trees import Tree, TreeModel

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _norm_dict(norm):
    return norm.to_dict() if norm is not None else None


def _norm_from(d):
    return Normalizer.from_dict(d) if d else None


def save_model(model, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(model, RecurrentModel):
        p = model.params
        header = {"version": FORMAT_VERSION, "kind": "recurrent", "variant": model.variant,
                  "h_ms": model.h_ms, "n_in": model.n_in, "hidden": p.hidden, "layers": len(p.W),
                  "n_out": int(p.Wy.shape[1]), "best_epoch": model.best_epoch,
                  "norm": _norm_dict(model.norm), "history": [list(h) for h in model.history]}
        arrays = {f"W{i}": w for i, w in enumerate(p.W)}
        arrays.update({f"b{i}": b for i, b in enumerate(p.b)})
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), Wy=p.Wy, by=p.by, **arrays)
    elif isinstance(model, TreeModel):
        doc = {"version": FORMAT_VERSION, "kind": "trees", "variant": model.variant, "h_ms": model.h_ms,
               "window": model.window, "shrinkage": model.shrinkage, "base": model.base.tolist(),
               "edges": [np.asarray(e).tolist() for e in model.edges],
               "norm": _norm_dict(model.norm),
               "trees": [[t.to_dict() for t in ts] for ts in model.trees]}
        path.write_text(json.dumps(doc) + "\n")
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    return path


def _check_version(h, path):
    v = h.get("version")
    if v != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported model version {v!r}")


def load_model(path):
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"PK":
        with np.load(path, allow_pickle=False) as z:
            if "header" not in z:
                raise ModelFormatError(f"{path}: missing header")
            h = json.loads(str(z["header"]))
            _check_version(h, path)
            n = h["layers"]
            params = LSTMParams([z[f"W{i}"] for i in range(n)], [z[f"b{i}"] for i in range(n)],
                                z["Wy"], z["by"])
        return RecurrentModel(params, h["variant"], h["h_ms"], _norm_from(h["norm"]),
                              [tuple(r) for r in h.get("history", [])], h.get("best_epoch", -1))
    try:
        h = json.loads(path.read_text())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"{path}: not a model file ({e})") from None
    _check_version(h, path)
    if h.get("kind") != "trees":
        raise ModelFormatError(f"{path}: unknown model kind {h.get('kind')!r}")
    edges = [np.asarray(e, dtype=float) for e in h["edges"]]
    trees = [[Tree.from_dict(t) for t in ts] for ts in h["trees"]]
    return TreeModel(h["variant"], h["h_ms"], edges, np.asarray(h["base"], dtype=float), trees,
                     h["shrinkage"], h["window"], _norm_from(h["norm"]))


def metric_columns(thresholds=THRESHOLDS):
    cols = ["mse"]
    cols += [f"bqa@{th}" for th in thresholds]
    cols += [f"mbte@{th}" for th in thresholds]
    cols += [f"mbte_iqr@{th}" for th in thresholds]
    return cols


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if not np.isfinite(v) else f"{float(v):.6g}"
    return str(v)


def write_report(path, rows, key_cols, thresholds=THRESHOLDS):
    """CSV with ``key_cols`` followed by the metric grid columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(key_cols) + metric_columns(thresholds)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, float("nan"))) for c in cols])
    return path


def read_report(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        d = {}
        for k, v in r.items():
            try:
                d[k] = float(v)
            except ValueError:
                d[k] = v
        out.append(d)
    return out


def format_grid(rows, key_cols, thresholds=THRESHOLDS):
    """Plain-text metrics table for the terminal."""
    cols = list(key_cols) + metric_columns(thresholds)
    cells = [cols] + [[_fmt(r.get(c, float("nan"))) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells)
