"""Trial datasets for contact forecasting."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import constants as C

VARIANTS = {"ft": tuple(range(4, 10)), "vac": tuple(range(4)), "ftvac": tuple(range(10))}
VARIANT_NAMES = {"ft": "FT Only", "vac": "Vac Only", "ftvac": "FT+Vac"}


def canonical_variant(v):
    key = str(v).lower().replace("+", "").replace("-", "").replace("_", "").replace(" ", "")
    key = {"ftonly": "ft", "vaconly": "vac", "vacft": "ftvac"}.get(key, key)
    if key not in VARIANTS:
        raise ValueError(f"unknown variant {v!r}; expected one of FT, Vac, FT+Vac")
    return key


def horizon_steps(h_ms):
    steps = h_ms / C.SAMPLE_MS
    if h_ms < 0 or abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"horizon {h_ms} ms is not a non-negative multiple of {C.SAMPLE_MS:g} ms")
    return int(round(steps))


@dataclass
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, arrays):
        x = np.concatenate([np.asarray(a, dtype=float) for a in arrays], axis=0)
        mu = x.mean(axis=0)
        sd = x.std(axis=0)
        sd[sd < 1e-12] = 1.0
        return cls(mu, sd)

    def __call__(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


@dataclass
class SeqDataset:
    inputs: list                  # raw (T, 10) per trial
    targets: list                 # (T, 4) per trial
    meta: list
    split: dict                   # "train", "val", "test" -> index arrays
    norm: Normalizer
    x: list = field(default_factory=list)     # normalised inputs

    def __post_init__(self):
        if not self.x:
            self.x = [self.norm(a) for a in self.inputs]

    def __len__(self):
        return len(self.inputs)

    def part(self, name, variant="ftvac"):
        cols = list(VARIANTS[canonical_variant(variant)])
        idx = self.split[name]
        return [self.x[i][:, cols] for i in idx], [self.targets[i] for i in idx]


def trial_arrays(trace, labels=None):
    x = np.column_stack([trace.p_vac, trace.ft])
    y = np.asarray(trace.contact if labels is None else labels, dtype=float)
    if len(x) != len(y):
        raise ValueError(f"trial length mismatch: {len(x)} inputs vs {len(y)} labels")
    return x, y


def split_indices(n, ratio=0.8, val_ratio=0.1, seed=0):
    """Shuffle trials and cut train+val / test, then val off the pool."""
    if n < 2:
        raise ValueError("need at least two trials")
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5e1])).permutation(n)
    n_pool = int(round(ratio * n))
    n_pool = min(max(n_pool, 1), n - 1)
    pool, test = perm[:n_pool], perm[n_pool:]
    n_val = int(round(val_ratio * n_pool))
    if n_pool >= 2:
        n_val = min(max(n_val, 1), n_pool - 1)
    else:
        n_val = 0
    val, train = pool[:n_val], pool[n_val:]
    if len(train) == 0 or len(test) == 0:
        raise ValueError("empty split")
    return {"train": np.sort(train), "val": np.sort(val), "test": np.sort(test)}


def build_dataset(traces, labels=None, split_seed=0, ratio=0.8, val_ratio=0.1):
    """Align inputs and labels per trial; normalisation is fit on training trials only.

    ``labels`` defaults to each trace's ground-truth contact.
    """
    traces = list(traces)
    if labels is None:
        labels = [None] * len(traces)
    labels = list(labels)
    if len(labels) != len(traces):
        raise ValueError("traces and labels differ in trial count")
    pairs = [trial_arrays(tr, lb) for tr, lb in zip(traces, labels)]
    inputs = [p[0] for p in pairs]
    targets = [np.clip(p[1], 0.0, 1.0) for p in pairs]
    split = split_indices(len(inputs), ratio, val_ratio, split_seed)
    norm = Normalizer.fit([inputs[i] for i in split["train"]])
    meta = [dict(getattr(tr, "meta", {}) or {}) for tr in traces]
    return SeqDataset(inputs, targets, meta, split, norm)


def from_arrays(inputs, targets, split_seed=0, ratio=0.8, val_ratio=0.1):
    inputs = [np.asarray(a, dtype=float) for a in inputs]
    targets = [np.asarray(a, dtype=float) for a in targets]
    for a, b in zip(inputs, targets):
        if len(a) != len(b):
            raise ValueError("trial length mismatch")
    split = split_indices(len(inputs), ratio, val_ratio, split_seed)
    norm = Normalizer.fit([inputs[i] for i in split["train"]])
    return SeqDataset(inputs, targets, [{} for _ in inputs], split, norm)
