"""Haptic exploration analysis: sliding profiles and surface-normal seeking."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import constants as C
from .spectral import dft_mag_at, stft_30

TRANSITION_SPAN = 0.5     # s
STEADY_WINDOW = 2.0       # s, palpation analysis window
SWEEP_ANGLES = (-30, -15, 0, 15, 30)
EVENT_KINDS = ("half-contact", "full-texture", "texture-to-smooth")


@dataclass
class Transition:
    time: float
    magnitude: float
    start: float
    end: float
    kind: str = "generic"


@dataclass
class SlidingProfile:
    times: np.ndarray
    ch_all: np.ndarray
    ch_diff: np.ndarray
    per_channel: np.ndarray
    events: list = field(default_factory=list)


def detect_transition(series, times=None, span=TRANSITION_SPAN):
    """Spans where the change over ``span`` seconds exceeds half the full range.

    Overlapping spans are merged; each is reported at its midpoint with the
    largest signed change it contains. ``times`` defaults to sample indices
    at the sensor rate.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("empty series")
    t = np.arange(x.size) / C.SENSOR_RATE if times is None else np.asarray(times, dtype=float)
    thr = 0.5 * (x.max() - x.min())
    if thr <= 0:
        return []
    dt = np.median(np.diff(t)) if t.size > 1 else 1.0
    w = max(1, int(round(span / dt)))
    if x.size <= w:
        w = x.size - 1
        if w < 1:
            return []
    delta = x[w:] - x[:-w]
    hit = np.abs(delta) > thr
    out = []
    # each exceeding window covers samples [i, i + w]; merge overlapping covers
    for i in np.flatnonzero(hit):
        if out and i <= out[-1][1]:
            out[-1][1] = i + w
            if abs(delta[i]) > abs(delta[out[-1][2]]):
                out[-1][2] = i
        else:
            out.append([i, i + w, i])
    return [Transition(0.5 * (t[a] + t[b]), float(delta[k]), float(t[a]), float(t[b]))
            for a, b, k in out]


def sliding_profile(trace, hop=1):
    """Average and right-minus-left carrier magnitude along a PWM slide."""
    scen = trace.meta.get("scenario", {})
    if scen.get("vacuum_mode", "pwm") != "pwm":
        raise ValueError("sliding analysis needs a PWM trace (no carrier under full vacuum)")
    idx, v = stft_30(trace.p_vac, hop)
    right = v[:, list(C.RIGHT)].mean(axis=1)
    left = v[:, list(C.LEFT)].mean(axis=1)
    times = np.asarray(trace.t)[idx]
    prof = SlidingProfile(times, v.mean(axis=1), right - left, v)
    prof.events = detect_transition(prof.ch_all, times)
    marks = trace.meta.get("events")
    if marks:
        for ev in prof.events:
            kind, tm = min(marks.items(), key=lambda kv: abs(kv[1] - ev.time))
            if ev.start - TRANSITION_SPAN <= tm <= ev.end + TRANSITION_SPAN:
                ev.kind = kind
    return prof


def excursion_pattern(prof: SlidingProfile, ev: Transition, margin, pad=TRANSITION_SPAN):
    """'+-' when ch_diff rises above +margin and later falls below -margin
    around the transition span; otherwise the observed sign sequence."""
    sel = (prof.times >= ev.start - pad) & (prof.times <= ev.end + pad)
    d = prof.ch_diff[sel]
    pos = np.flatnonzero(d > margin)
    neg = np.flatnonzero(d < -margin)
    if pos.size and neg.size and pos[0] < neg[-1]:
        return "+-"
    if pos.size and neg.size:
        return "-+"
    return "+" if pos.size else ("-" if neg.size else "0")


@dataclass
class NormalSeekResult:
    best_angle: float
    angles: np.ndarray
    curves: np.ndarray          # (angles, 4) steady |DFT30| per channel
    seal_quality: float
    classification: str
    asymmetry: np.ndarray


def steady_dft(trace, window=STEADY_WINDOW):
    """Per-channel carrier magnitude averaged over the final ``window`` seconds."""
    t = np.asarray(trace.t)
    sel = t >= t[-1] - window
    _, v = stft_30(np.asarray(trace.p_vac)[sel])
    return v.mean(axis=0)


def normal_seek(sweep, required=SWEEP_ANGLES):
    """Pick the palpation angle with the most balanced left/right seal."""
    sweep = sorted(((float(a), tr) for a, tr in sweep), key=lambda p: p[0])
    have = {a for a, _ in sweep}
    missing = [a for a in required if float(a) not in have]
    if missing:
        raise ValueError(f"sweep missing angles {missing}")
    angles = np.array([a for a, _ in sweep])
    curves = np.array([steady_dft(tr) if hasattr(tr, "p_vac") else np.asarray(tr, dtype=float)
                       for _, tr in sweep])
    return normal_from_curves(angles, curves)


def normal_from_curves(angles, curves):
    angles = np.asarray(angles, dtype=float)
    curves = np.asarray(curves, dtype=float)
    asym = np.abs(curves[:, list(C.LEFT)].mean(axis=1) - curves[:, list(C.RIGHT)].mean(axis=1))
    i = int(np.argmin(asym))
    means = curves.mean(axis=1)
    q = float(means[i])
    cls = "GOOD" if q >= means.max() else "POOR"
    return NormalSeekResult(float(angles[i]), angles, curves, q, cls, asym)


__all__ = ["detect_transition", "sliding_profile", "normal_seek", "normal_from_curves",
           "steady_dft", "excursion_pattern", "dft_mag_at", "Transition", "SlidingProfile",
           "NormalSeekResult"]
