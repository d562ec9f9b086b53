"""Randomised twist-detachment batches over the (phi, theta) axis grid."""
from __future__ import annotations

import math

import numpy as np

from .network import CupConfig
from .scenarios import Scenario, SensorModel, run_scenario

PHI_GRID = tuple(22.5 * i for i in range(9))        # 0..180
THETA_GRID = tuple(30.0 * i for i in range(12))     # 0..330
N_CELLS = len(PHI_GRID) * len(THETA_GRID)
OMEGA = (25.0, 35.0)          # deg/s
V_XY = (-0.01, 0.01)          # m/s
V_Z = (0.006, 0.02)           # m/s
LIP_SLACK = (2.0e-3, 4.0e-3)  # m


def grid_cells(n):
    """Cell index per trial: repetition-major so any prefix covers the grid evenly."""
    reps = max(1, math.ceil(n / N_CELLS))
    cells = np.tile(np.arange(N_CELLS), reps)
    return cells[:n]


def sample_detach_params(cell, rng):
    i, j = divmod(int(cell), len(THETA_GRID))
    phi = PHI_GRID[i] + rng.uniform(-0.5, 0.5) * 22.5
    theta = THETA_GRID[j] + rng.uniform(-0.5, 0.5) * 30.0
    v = (rng.uniform(*V_XY), rng.uniform(*V_XY), rng.uniform(*V_Z))
    return {"phi": float(phi), "theta": float(theta % 360.0), "omega": float(rng.uniform(*OMEGA)),
            "velocity": tuple(float(x) for x in v), "lip_slack": float(rng.uniform(*LIP_SLACK))}


def trial_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def detach_trial(seed, index, cell, config=None, sensor=None, frames=False, frame_rate=240.0):
    rng = trial_rng(seed, index)
    params = sample_detach_params(cell, rng)
    tr = run_scenario(Scenario("detach", params), seed, config, sensor, frames=frames,
                      frame_rate=frame_rate, rng=rng)
    tr.meta.update(trial=int(index), cell=int(cell))
    return tr


def sample_detach_batch(n, seed, config: CupConfig | None = None, sensor: SensorModel | None = None,
                        frames=False, frame_rate=240.0, threads=1):
    """``n`` detachment traces; each trial has its own seed stream so the
    result does not depend on ``threads``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    config = config or CupConfig.default()
    cells = grid_cells(n)
    args = [(seed, i, c, config, sensor, frames, frame_rate) for i, c in enumerate(cells)]
    if threads and threads > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(threads) as ex:
            return list(ex.map(_star, args))
    return [detach_trial(*a) for a in args]


def _star(a):
    return detach_trial(*a)
