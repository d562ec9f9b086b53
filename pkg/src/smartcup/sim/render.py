"""Synthetic FTIR seal-ring frames.

Pixel (row, col) maps to x = col, y = row; azimuths are ``atan2(y - cy, x - cx)``
in degrees, the same convention the labeler uses. Quadrant k is centred at
its chamber azimuth plus the cup yaw.
"""
from __future__ import annotations

import math

import numpy as np

from .. import constants as C
from .network import ConfigError

SIZE = 128
RING_RADIUS = 48.0
RING_HALF_WIDTH = 9.0       # flat top spans radius 39..57 px
EDGE_SOFT = 1.0             # px, radial roll-off
BLEND_DEG = 10.0
PIXEL_NOISE = 0.02

_rows, _cols = np.mgrid[0:SIZE, 0:SIZE].astype(float)


def azimuth_profile(alpha_deg, contact, yaw_deg=0.0):
    """Ring intensity at azimuths ``alpha_deg`` for a 4-vector ``contact``.

    Quadrant values hold across their arcs and cross-fade with a raised
    cosine over ``BLEND_DEG`` centred on each boundary.
    """
    c = np.asarray(contact, dtype=float)
    a = np.asarray(alpha_deg, dtype=float)
    # position relative to quadrant 1's leading boundary, in [0, 360)
    start = C.CHAMBER_AZIMUTH[0] - 45.0 + yaw_deg
    rel = np.mod(a - start, 360.0)
    # quadrant order walking up in azimuth from chamber 1
    order = np.argsort([(az - C.CHAMBER_AZIMUTH[0]) % 360.0 for az in C.CHAMBER_AZIMUTH])
    seg = np.minimum((rel // 90.0).astype(int), 3)
    cur = c[order[seg]]
    nxt = c[order[(seg + 1) % 4]]
    prv = c[order[(seg - 1) % 4]]
    off = rel - seg * 90.0
    h = 0.5 * BLEND_DEG
    out = cur.copy()
    up = off > 90.0 - h
    w = 0.5 - 0.5 * np.cos(np.pi * (off[up] - (90.0 - h)) / BLEND_DEG)
    out[up] = (1.0 - w) * cur[up] + w * nxt[up]
    dn = off < h
    w = 0.5 - 0.5 * np.cos(np.pi * (off[dn] + h) / BLEND_DEG)
    out[dn] = (1.0 - w) * prv[dn] + w * cur[dn]
    return out


def radial_profile(r):
    d = np.abs(np.asarray(r) - RING_RADIUS) - RING_HALF_WIDTH
    return np.clip(1.0 - d / EDGE_SOFT, 0.0, 1.0)


def render_seal_frame(contact, center=(63.5, 63.5), seed=None, yaw=0.0, noise=PIXEL_NOISE,
                      rng=None, as_uint8=True):
    """Render one 128x128 ring frame. ``yaw`` in radians."""
    c = np.asarray(contact, dtype=float)
    if c.shape != (4,) or np.any(c < 0) or np.any(c > 1):
        raise ConfigError("contact must be 4 values in [0, 1]")
    cx, cy = float(center[0]), float(center[1])
    if not (0.0 <= cx <= SIZE - 1 and 0.0 <= cy <= SIZE - 1):
        raise ConfigError(f"ring centre {center} outside the raster")
    dx = _cols - cx
    dy = _rows - cy
    r = np.hypot(dx, dy)
    alpha = np.degrees(np.arctan2(dy, dx))
    img = radial_profile(r) * azimuth_profile(alpha, c, math.degrees(yaw))
    if noise > 0:
        if rng is None:
            rng = np.random.default_rng(seed)
        img = img + rng.normal(0.0, noise, size=img.shape)
    img = np.clip(img, 0.0, 1.0)
    if as_uint8:
        return np.round(img * 255.0).astype(np.uint8)
    return img


def detach_pose(p, t):
    """Ground-truth ring centre (px) and cup yaw (rad) during a twist detachment."""
    from .scenarios import twist_axis
    t = np.asarray(t, dtype=float)
    tau = np.clip(t - p["t_hold"], 0.0, None)
    u = twist_axis(p["phi"], p["theta"])
    beta = math.radians(p["omega"]) * tau
    yaw = beta * u[2]
    v = np.asarray(p["velocity"], dtype=float)
    vxy = math.hypot(v[0], v[1])
    dirn = np.array([v[0], v[1]]) / vxy if vxy > 1e-9 else np.zeros(2)
    # lateral slip saturates as the lip lets go
    mag = p["drift_px"] * np.tanh(tau / 0.4) * min(1.0, vxy / 0.01)
    tilt = 0.5 * p["drift_px"] * np.tanh(beta * math.hypot(u[0], u[1]) / 0.3)
    tdir = np.array([-u[1], u[0]]) / max(1e-9, math.hypot(u[0], u[1]))
    cen = np.asarray(p["center"], dtype=float)[None, :] + mag[:, None] * dirn + tilt[:, None] * tdir
    scale = np.maximum(1.0, np.linalg.norm(cen - np.asarray(p["center"]), axis=1) / p["drift_px"])
    cen = np.asarray(p["center"]) + (cen - np.asarray(p["center"])) / scale[:, None]
    return cen, yaw


def render_detach_frames(sched, config, frame_rate, rng, noise=True):
    from .scenarios import FrameSeq
    p = sched.twist
    n = int(math.floor(sched.duration * frame_rate + 1e-9)) + 1
    t = np.arange(n) / frame_rate
    contact = np.clip(sched.contact(t), 0.0, 1.0)
    cen, yaw = detach_pose(p, t)
    sigma = PIXEL_NOISE if noise else 0.0
    imgs = np.empty((n, SIZE, SIZE), dtype=np.uint8)
    for i in range(n):
        imgs[i] = render_seal_frame(contact[i], cen[i], yaw=yaw[i], noise=sigma, rng=rng)
    to = np.arange(int(math.floor(sched.duration * 10.0)) + 2) / 10.0
    _, yaw_o = detach_pose(p, to)
    return FrameSeq(t, imgs, cen, to, yaw_o)
