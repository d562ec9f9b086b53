"""Per-quadrant contact labels from seal-ring frames."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import constants as C

RING_RADIUS = 48.0
BAND = 16.0                  # px, radial band width
N_SUB = 9                    # subsectors per quadrant
R_SWEEP = (0.6, 1.2)         # band centres as multiples of the ring radius
R_STEP = 2.0
ANG_STEP = 0.5               # deg
SUB_CORE = 0.5               # fraction of each subsector averaged (centred)
SMOOTH = 5                   # frames, centre moving average
LOST_ENERGY = 0.2
EXTRAP_HISTORY = 10
MAX_ORIENT_GAP = 0.5         # s


class LabelError(ValueError):
    pass


@dataclass
class QuadrantLabel:
    t: float
    values: np.ndarray
    center: tuple


def as_unit(frames):
    """Frames as floats in [0, 1], normalised by the sequence maximum."""
    f = np.asarray(frames, dtype=float)
    m = f.max()
    return f / m if m > 0 else f


def _ring_fit(img, thresh=0.2, iters=8, radius=None):
    """Ring centre from bright pixels; returns ((cx, cy), energy, radius).

    An algebraic circle fit gives the start, then a few Gauss-Newton steps
    fit a circle geometrically. With ``radius`` given it is held fixed, which
    keeps the centre unbiased on a thick partial arc.
    """
    mask = img > thresh
    energy = float(img[mask].sum())
    if mask.sum() < 12:
        return None, energy, radius
    y, x = np.nonzero(mask)
    x = x.astype(float)
    y = y.astype(float)
    w = img[mask]
    A = np.column_stack([x, y, np.ones_like(x)]) * w[:, None]
    b = (x ** 2 + y ** 2) * w
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c = np.array([0.5 * sol[0], 0.5 * sol[1]])
    free = radius is None
    r = math.sqrt(max(sol[2] + c @ c, 1.0)) if free else radius
    for _ in range(iters):
        dx, dy = x - c[0], y - c[1]
        d = np.maximum(np.hypot(dx, dy), 1e-9)
        res = d - r
        J = -np.column_stack([dx / d, dy / d])
        if free:
            J = np.column_stack([J, -np.ones_like(d)])
        JW = J * w[:, None]
        step = np.linalg.solve(JW.T @ J + 1e-9 * np.eye(J.shape[1]), -JW.T @ res)
        c = c + step[:2]
        if free:
            r += step[2]
        if np.abs(step).max() < 1e-4:
            break
    return (float(c[0]), float(c[1])), energy, float(r)


def track_center(frames):
    """Ring centre (x, y) per frame.

    A circle is fitted to the bright ring pixels of each frame (a partial ring
    still pins its centre), then smoothed with a centred 5-frame moving
    average. Frames whose ring energy falls below 20% of the first frame's
    take a linear extrapolation of the previous 10 centres instead.
    """
    f = as_unit(frames)
    if f.ndim == 2:
        f = f[None]
    first, e0, r_eff = _ring_fit(f[0])
    if first is None or f[0].max() <= 0.2:
        raise LabelError("no detectable ring in the first frame")
    raw = np.empty((len(f), 2))
    lost = np.zeros(len(f), dtype=bool)
    for i, img in enumerate(f):
        c, e, _ = _ring_fit(img, radius=r_eff)
        if c is None or e < LOST_ENERGY * e0:
            lost[i] = True
            raw[i] = np.nan
        else:
            raw[i] = c
    out = _smooth(raw, lost)
    for i in np.flatnonzero(lost):
        lo = max(0, i - EXTRAP_HISTORY)
        hist = np.arange(lo, i)
        if hist.size >= 2:
            for d in range(2):
                k = np.polyfit(hist, out[hist, d], 1)
                out[i, d] = np.polyval(k, i)
        elif hist.size == 1:
            out[i] = out[hist[0]]
        else:
            out[i] = first
    return out


def _smooth(raw, lost):
    out = raw.copy()
    h = SMOOTH // 2
    for i in np.flatnonzero(~lost):
        lo, hi = max(0, i - h), min(len(raw), i + h + 1)
        seg = raw[lo:hi][~lost[lo:hi]]
        out[i] = seg.mean(axis=0)
    return out


def _polar_grid():
    radii = np.arange(R_SWEEP[0] * RING_RADIUS - BAND / 2,
                      R_SWEEP[1] * RING_RADIUS + BAND / 2 + 1e-9, 1.0)
    n_ang = int(round(90.0 / ANG_STEP))
    # sample centres within each quadrant, 0..90 deg from its leading boundary
    offs = (np.arange(n_ang) + 0.5) * ANG_STEP
    return radii, offs


_RADII, _OFFS = _polar_grid()
_SUB = np.minimum((_OFFS // (90.0 / N_SUB)).astype(int), N_SUB - 1)
_pos_in_sub = (_OFFS - _SUB * (90.0 / N_SUB)) / (90.0 / N_SUB)
_CORE = np.abs(_pos_in_sub - 0.5) <= 0.5 * SUB_CORE
_BAND_CENTRES = np.arange(R_SWEEP[0] * RING_RADIUS, R_SWEEP[1] * RING_RADIUS + 1e-9, R_STEP)


_SUB_MASK = np.stack([(_SUB == s) & _CORE for s in range(N_SUB)], axis=1).astype(float)  # (ang, sub)
_BAND_ROWS = [np.flatnonzero(np.abs(_RADII - rc) <= BAND / 2) for rc in _BAND_CENTRES]


def quadrant_contact_label(frame, center, orientation=0.0, normalize=True):
    """Minimum over nine subsectors of the peak radial-band mean, per quadrant.

    ``orientation`` (rad) rotates the quadrant layout with the cup. Only the
    central half of each subsector is averaged so the cross-fade at quadrant
    boundaries does not leak into the edge subsectors.
    """
    raw = np.asarray(frame)
    img = raw.astype(float)
    if raw.dtype == np.uint8:
        img = img / 255.0
    elif normalize and img.max() > 1.0:
        img = img / img.max()
    cx, cy = float(center[0]), float(center[1])
    h, w = img.shape
    if not (0.0 <= cx <= w - 1 and 0.0 <= cy <= h - 1):
        raise LabelError(f"centre {center} outside the raster")
    yaw = math.degrees(orientation)
    starts = np.array(C.CHAMBER_AZIMUTH, dtype=float) - 45.0 + yaw
    ang = np.radians(starts[:, None] + _OFFS[None, :])                     # (4, A)
    xs = cx + _RADII[None, :, None] * np.cos(ang)[:, None, :]             # (4, R, A)
    ys = cy + _RADII[None, :, None] * np.sin(ang)[:, None, :]
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    if not inside.any():
        raise LabelError("band entirely outside the raster")
    vals = ndimage.map_coordinates(img, [ys.ravel(), xs.ravel()], order=1,
                                   mode="nearest").reshape(xs.shape)
    vals = np.where(inside, vals, 0.0)
    vs = vals @ _SUB_MASK                                                  # (4, R, sub)
    ns = inside.astype(float) @ _SUB_MASK
    sums = np.stack([vs[:, rows].sum(axis=1) for rows in _BAND_ROWS], axis=1)   # (4, B, sub)
    cnts = np.stack([ns[:, rows].sum(axis=1) for rows in _BAND_ROWS], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(cnts > 0, sums / np.maximum(cnts, 1e-12), -np.inf)
    if np.any(np.all(cnts == 0, axis=1)):
        raise LabelError("band entirely outside the raster for a subsector")
    return np.clip(means.max(axis=1).min(axis=1), 0.0, 1.0)


def label_frames(frames, centers, orientation):
    f = as_unit(frames)
    return np.array([quadrant_contact_label(img, c, o, normalize=False)
                     for img, c, o in zip(f, centers, orientation)])


def label_sequence(frames, frame_t, orient_t, orient, sample_t=None):
    """Labels for every frame, optionally resampled to the pressure timeline.

    Returns ``(labels, centers)``; labels are per frame unless ``sample_t``
    is given.
    """
    frame_t = np.asarray(frame_t, dtype=float)
    orient_t = np.asarray(orient_t, dtype=float)
    if orient_t.size == 0:
        raise LabelError("empty orientation series")
    gaps = np.diff(orient_t)
    if gaps.size and gaps.max() > MAX_ORIENT_GAP:
        raise LabelError(f"orientation gap of {gaps.max():.2f} s exceeds {MAX_ORIENT_GAP} s")
    if frame_t[0] < orient_t[0] - MAX_ORIENT_GAP or frame_t[-1] > orient_t[-1] + MAX_ORIENT_GAP:
        raise LabelError("orientation series does not cover the frames")
    yaw = np.interp(frame_t, orient_t, orient)
    centers = track_center(frames)
    lab = label_frames(frames, centers, yaw)
    if sample_t is None:
        return lab, centers
    st = np.asarray(sample_t, dtype=float)
    res = np.column_stack([np.interp(st, frame_t, lab[:, k]) for k in range(4)])
    return res, centers


def first_break(labels, th):
    """Earliest index where any label drops below ``th`` and the quadrants
    crossing there (ties count for each); ``(None, [])`` if none cross."""
    lab = np.asarray(labels)
    below = lab < th
    rows = np.flatnonzero(below.any(axis=1))
    if rows.size == 0:
        return None, []
    i = int(rows[0])
    return i, [int(q) for q in np.flatnonzero(below[i])]


def break_stats(batch, th):
    """Per-quadrant first-break rates over a batch of label series.

    Returns ``(rates (4,), n_used, n_excluded)``.
    """
    if not 0.0 < th < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    counts = np.zeros(4)
    used = 0
    for lab in batch:
        i, qs = first_break(lab, th)
        if i is None:
            continue
        used += 1
        counts[qs] += 1
    rates = counts / used if used else counts
    return rates, used, len(batch) - used
