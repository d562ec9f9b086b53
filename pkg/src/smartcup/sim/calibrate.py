"""One-off calibration of the leak coefficients.

Volumes, neck, crosstalk and tube coefficients are fixed by hand; the three
leak coefficients are each found by a bracketed scalar search on the algebraic
steady state, then written to the packaged default config.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy import optimize

from .network import DEFAULT_CONFIG_PATH, CupConfig, build_network, steady_state_algebraic

TARGETS = {
    "single_leak_differential": 400.0,   # Pa, max - min for one vertical leak
    "grit_600_vacuum": 74000.0,          # Pa, uniform leak, full vacuum
    "grit_120_vacuum": 25000.0,          # Pa, coarsest paper
}


def chamber_vacuum(cfg: CupConfig, leaks, open_fraction=1.0):
    net = build_network(cfg)
    P = steady_state_algebraic(net, np.asarray(leaks, dtype=float), open_fraction)
    return cfg.p_atm - P[:4]


def _solve(fn, target, lo, hi):
    return optimize.brentq(lambda lg: fn(10.0 ** lg) - target, np.log10(lo), np.log10(hi),
                           xtol=1e-10, rtol=1e-12)


def calibrate(base: CupConfig | None = None, targets=None) -> CupConfig:
    base = base or CupConfig()
    tg = dict(TARGETS, **(targets or {}))

    def diff(g):
        pv = chamber_vacuum(base, [g, 0, 0, 0])
        return pv.max() - pv.min()

    def uniform(g):
        return chamber_vacuum(base, [g] * 4).mean()

    g_single = 10.0 ** _solve(diff, tg["single_leak_differential"], 1e-11, 1e-6)
    g600 = 10.0 ** _solve(lambda g: -uniform(g), -tg["grit_600_vacuum"], 1e-11, 1e-6)
    g120 = 10.0 ** _solve(lambda g: -uniform(g), -tg["grit_120_vacuum"], 1e-11, 1e-5)
    d = base.to_dict()
    d.update(g_leak_single=g_single, g_grit_600=g600, g_grit_120=g120)
    return CupConfig.from_dict(d)


def write_default(cfg: CupConfig, path: Path | str = DEFAULT_CONFIG_PATH):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"version": 1, "cup": cfg.to_dict(), "targets": TARGETS}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


if __name__ == "__main__":
    cfg = calibrate()
    print(json.dumps(cfg.to_dict(), indent=2))
    print("wrote", write_default(cfg))
