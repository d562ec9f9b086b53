"""Forecast metrics: MSE, break quadrant accuracy and median break time error."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import constants as C

THRESHOLDS = (0.5, 0.6, 0.7)


@dataclass
class Forecast:
    values: np.ndarray     # (T, 4); NaN where the model has too little history
    valid: np.ndarray      # (T,) bool
    status: str            # "ok" or "empty"


def forecast(model, x):
    """Model predictions with an explicit status; "empty" when no row is valid
    (a window model on a trial shorter than its window)."""
    v = np.asarray(model.predict(x), dtype=float)
    ok = np.all(np.isfinite(v), axis=1) if v.size else np.zeros(len(v), dtype=bool)
    return Forecast(v, ok, "ok" if ok.any() else "empty")


def align(pred, truth, steps):
    """Put a forecast on the truth timeline.

    ``pred[t]`` estimates ``truth[t + steps]``; returns the overlapping
    (pred, truth) pair with rows lacking a prediction dropped from the front.
    """
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    n = min(len(pred), len(truth) - steps)
    if n <= 0:
        return pred[:0], truth[:0]
    p = pred[:n]
    y = truth[steps:steps + n]
    ok = np.all(np.isfinite(p), axis=1)
    first = int(np.argmax(ok)) if ok.any() else n
    return np.clip(p[first:], 0.0, 1.0), y[first:]


def metric_mse(pred, truth):
    p = np.asarray(pred, dtype=float)
    y = np.asarray(truth, dtype=float)
    if p.size == 0 or p.shape != y.shape:
        raise ValueError("empty or mismatched overlap")
    return float(np.mean((p - y) ** 2))


def first_crossing(series, th):
    """(index, quadrant) of the earliest drop below ``th``; lowest quadrant on ties."""
    s = np.asarray(series, dtype=float)
    below = s < th
    rows = np.flatnonzero(below.any(axis=1))
    if rows.size == 0:
        return None
    t = int(rows[0])
    return t, int(np.argmax(below[t]))


@dataclass
class BreakResult:
    value: float
    n_used: int
    excluded: int          # truth never crosses
    missed: int = 0        # prediction never crosses


def metric_bqa(preds, truths, th):
    """Fraction of trials whose predicted first-breaking quadrant is correct."""
    hits, used, excl = 0, 0, 0
    for p, y in zip(preds, truths):
        ty = first_crossing(y, th)
        if ty is None:
            excl += 1
            continue
        used += 1
        tp = first_crossing(p, th)
        hits += int(tp is not None and tp[1] == ty[1])
    return BreakResult(hits / used if used else float("nan"), used, excl)


def _whole(x):
    """Round half away from zero, so negating the errors negates the result."""
    return float(np.sign(x) * np.floor(abs(x) + 0.5))


def metric_mbte(preds, truths, th, sample_ms=C.SAMPLE_MS):
    """Median and IQR of (t_truth - t_pred) in ms, in whole sample periods.

    Positive means the forecast saw the break coming early (conservative).
    """
    errs, excl, missed = [], 0, 0
    for p, y in zip(preds, truths):
        ty = first_crossing(y, th)
        if ty is None:
            excl += 1
            continue
        tp = first_crossing(p, th)
        if tp is None:
            missed += 1
            continue
        errs.append(ty[0] - tp[0])
    if not errs:
        return (float("nan"), float("nan")), BreakResult(float("nan"), 0, excl, missed)
    q25, q50, q75 = (_whole(np.percentile(errs, q)) for q in (25, 50, 75))
    med = q50 * sample_ms
    iqr = (q75 - q25) * sample_ms
    return (med, iqr), BreakResult(med, len(errs), excl, missed)


def evaluate_model(model, ds, split="test", thresholds=THRESHOLDS):
    """Metric grid row (MSE plus BQA and MBTE per threshold) for one model on one split."""
    xs, ys = ds.part(split, model.variant)
    preds, truths, mses = [], [], []
    for x, y in zip(xs, ys):
        p, t = align(model.predict(x), y, model.steps)
        if len(p) == 0:
            continue
        preds.append(p)
        truths.append(t)
        mses.append(metric_mse(p, t))
    row = {"mse": float(np.mean(mses)) if mses else float("nan"), "n_trials": len(mses)}
    for th in thresholds:
        b = metric_bqa(preds, truths, th)
        (med, iqr), info = metric_mbte(preds, truths, th)
        row[f"bqa@{th}"] = b.value
        row[f"mbte@{th}"] = med
        row[f"mbte_iqr@{th}"] = iqr
        row[f"missed@{th}"] = info.missed
        row[f"excluded@{th}"] = b.excluded
    return row
