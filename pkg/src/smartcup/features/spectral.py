"""Carrier-bin spectral magnitudes of the chamber pressure signals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import constants as C

WINDOW = 83                      # 0.5 s at the sensor rate
F_CARRIER = float(C.PWM_FREQ)


@dataclass
class SpectralFeature:
    channel: int
    value: float
    window_start: float
    window_len: int = WINDOW


def carrier_bin(n, f_target=F_CARRIER, rate=C.SENSOR_RATE):
    return int(round(f_target * n / rate))


def _check(n, f_target, rate):
    if n == 0:
        raise ValueError("empty window")
    if n < 16:
        raise ValueError(f"window needs at least 16 samples, got {n}")
    if not 0.0 < f_target < 0.5 * rate:
        raise ValueError("target frequency must lie in (0, rate/2)")


def _kernel(n, k):
    return np.exp(-2j * np.pi * k * np.arange(n) / n)


def dft_mag_at(window, f_target=F_CARRIER, rate=C.SENSOR_RATE):
    """Amplitude of the nearest DFT bin to ``f_target``; a bin-centred sine of
    amplitude A returns A. ``window`` may be (N,) or (N, channels)."""
    x = np.asarray(window, dtype=float)
    n = x.shape[0]
    _check(n, f_target, rate)
    k = carrier_bin(n, f_target, rate)
    return np.abs(_kernel(n, k) @ x) * (2.0 / n)


def hamming(n):
    """Periodic Hamming window; its spectrum lives on bins 0 and +-1 only, so
    a constant input has no energy at the carrier bin."""
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_30(x, hop=1, rate=C.SENSOR_RATE, n=WINDOW, f_target=F_CARRIER):
    """Hamming-windowed carrier magnitude over every full window.

    Returns ``(centre_index, values)``; ``values`` is (M,) for a 1-D input and
    (M, channels) for a 2-D one. Windows running past the end are dropped.
    """
    x = np.asarray(x, dtype=float)
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if x.shape[0] < n:
        raise ValueError(f"trace shorter than one window ({x.shape[0]} < {n})")
    _check(n, f_target, rate)
    k = carrier_bin(n, f_target, rate)
    w = hamming(n) * _kernel(n, k)
    frames = np.lib.stride_tricks.sliding_window_view(x, n, axis=0)[::hop]
    # frames: (M, n) or (M, ch, n)
    # coherent-gain normalisation: a bin-centred sine of amplitude A reads A
    vals = np.abs(frames @ w) * (2.0 / hamming(n).sum())
    centres = np.arange(frames.shape[0]) * hop + (n - 1) // 2
    return centres, vals


def stft_features(x, t, hop=1, channel_base=1):
    """:class:`SpectralFeature` records for a (K, channels) trace."""
    idx, vals = stft_30(x, hop)
    vals = vals.reshape(len(idx), -1)
    out = []
    for m, i in enumerate(idx):
        start = t[i - (WINDOW - 1) // 2]
        for c in range(vals.shape[1]):
            out.append(SpectralFeature(c + channel_base, float(vals[m, c]), float(start)))
    return out
