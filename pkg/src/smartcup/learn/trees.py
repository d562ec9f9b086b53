"""Sliding-window gradient-boosted regression trees (histogram splits).

Features are quantile-binned once; each tree grows level by level with
exact greedy search over bin boundaries using gradient histograms. The
histogram pass is the hot loop and has a numba and a numpy version.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._accel import USE_NUMBA, njit
from .dataset import VARIANTS, Normalizer, canonical_variant, horizon_steps

WINDOW = 10
MAX_DEPTH = 5
N_BINS = 64
LAMBDA = 1.0
SHRINKAGE = 0.1
MIN_CHILD = 20          # rows per leaf


@njit
def _hist_nb(bins, grad, node, n_nodes, n_bins):
    n, d = bins.shape
    G = np.zeros((n_nodes, d, n_bins))
    N = np.zeros((n_nodes, d, n_bins))
    for i in range(n):
        k = node[i]
        if k < 0:
            continue
        g = grad[i]
        for j in range(d):
            b = bins[i, j]
            G[k, j, b] += g
            N[k, j, b] += 1.0
    return G, N


def _hist_np(bins, grad, node, n_nodes, n_bins):
    n, d = bins.shape
    keep = node >= 0
    b = bins[keep].astype(np.int64)
    k = node[keep].astype(np.int64)
    g = grad[keep]
    flat = (k[:, None] * d + np.arange(d)[None, :]) * n_bins + b
    size = n_nodes * d * n_bins
    G = np.bincount(flat.ravel(), np.repeat(g, d), minlength=size)
    N = np.bincount(flat.ravel(), minlength=size).astype(float)
    return G.reshape(n_nodes, d, n_bins), N.reshape(n_nodes, d, n_bins)


histograms = _hist_nb if USE_NUMBA else _hist_np


@dataclass
class Tree:
    feature: np.ndarray     # per internal node, -1 for leaves
    threshold: np.ndarray   # bin index; go left when bin <= threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def depth(self):
        def d(k):
            return 0 if self.feature[k] < 0 else 1 + max(d(self.left[k]), d(self.right[k]))
        return d(0)

    def apply(self, bins):
        k = np.zeros(len(bins), dtype=np.int64)
        active = self.feature[k] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            f = self.feature[k[idx]]
            go_left = bins[idx, f] <= self.threshold[k[idx]]
            k[idx] = np.where(go_left, self.left[k[idx]], self.right[k[idx]])
            active = self.feature[k] >= 0
        return self.value[k]

    def to_dict(self):
        return {n: getattr(self, n).tolist() for n in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=np.int64),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=float))


def fit_bins(X, n_bins=N_BINS):
    """Per-feature upper bin edges from training quantiles."""
    qs = np.linspace(0, 1, n_bins + 1)[1:-1]
    edges = np.quantile(X, qs, axis=0).T            # (d, n_bins-1)
    return np.array([np.unique(e) for e in edges], dtype=object)


def apply_bins(X, edges):
    out = np.empty(X.shape, dtype=np.int32)
    for j, e in enumerate(edges):
        out[:, j] = np.searchsorted(e, X[:, j], side="left")
    return out


def grow_tree(bins, resid, max_depth=MAX_DEPTH, n_bins=N_BINS, lam=LAMBDA, min_child=MIN_CHILD):
    """Greedy level-wise tree on squared error; returns (tree, per-row predictions)."""
    n = len(resid)
    feat, thr, left, right, val = [-1], [0], [-1], [-1], [0.0]
    node = np.zeros(n, dtype=np.int64)
    frontier = [0]           # tree node ids at the current level, in order
    for _ in range(max_depth):
        if not frontier:
            break
        slot = np.full(len(feat), -1, dtype=np.int64)
        slot[frontier] = np.arange(len(frontier))
        row_slot = slot[node]
        G, N = histograms(bins, resid, row_slot, len(frontier), n_bins)
        Gl = np.cumsum(G, axis=2)
        Nl = np.cumsum(N, axis=2)
        Gt = Gl[:, :, -1:]
        Nt = Nl[:, :, -1:]
        Gr = Gt - Gl
        Nr = Nt - Nl
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = Gl ** 2 / (Nl + lam) + Gr ** 2 / (Nr + lam) - Gt ** 2 / (Nt + lam)
        gain[(Nl < min_child) | (Nr < min_child) | ~np.isfinite(gain)] = -np.inf
        nxt = []
        for s, k in enumerate(frontier):
            flat = int(np.argmax(gain[s]))
            j, b = divmod(flat, n_bins)
            if not np.isfinite(gain[s, j, b]) or gain[s, j, b] <= 1e-12:
                continue
            feat[k], thr[k] = j, b
            li, ri = len(feat), len(feat) + 1
            left[k], right[k] = li, ri
            for _c in range(2):
                feat.append(-1)
                thr.append(0)
                left.append(-1)
                right.append(-1)
                val.append(0.0)
            rows = node == k
            go = bins[:, j] <= b
            node[rows & go] = li
            node[rows & ~go] = ri
            nxt += [li, ri]
        frontier = nxt
    sums = np.bincount(node, resid, minlength=len(feat))
    cnts = np.bincount(node, minlength=len(feat))
    leaf = np.asarray(feat) < 0
    den = cnts + lam
    val = np.where(leaf & (den > 0), sums / np.where(den > 0, den, 1.0), 0.0)
    tree = Tree(np.asarray(feat, dtype=np.int64), np.asarray(thr, dtype=np.int64),
                np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64), val)
    return tree, val[node]


def windows(x, l=WINDOW):
    """(T, d) -> (T - l + 1, l*d); row r is the flattened window ending at step r + l - 1."""
    x = np.asarray(x, dtype=float)
    if len(x) < l:
        return np.zeros((0, l * x.shape[1]))
    w = np.lib.stride_tricks.sliding_window_view(x, l, axis=0)    # (T-l+1, d, l)
    return w.transpose(0, 2, 1).reshape(w.shape[0], -1)


def window_rows(xs, ys, steps, l=WINDOW):
    X, Y = [], []
    for x, y in zip(xs, ys):
        W = windows(x, l)
        ends = np.arange(l - 1, len(x))
        ok = ends + steps < len(y)
        if ok.any():
            X.append(W[ok])
            Y.append(np.asarray(y)[ends[ok] + steps])
    if not X:
        raise ValueError(f"window of {l} samples exceeds every trial")
    return np.vstack(X), np.vstack(Y)


@dataclass
class TreeModel:
    variant: str
    h_ms: float
    edges: list
    base: np.ndarray                  # (4,)
    trees: list                       # per output channel, list of Tree
    shrinkage: float = SHRINKAGE
    window: int = WINDOW
    norm: Normalizer | None = None
    history: list = field(default_factory=list)

    @property
    def steps(self):
        return horizon_steps(self.h_ms)

    def predict(self, x):
        """(T, width) -> (T, 4) with NaN for the first ``window - 1`` rows;
        row t estimates contact at t + h."""
        x = np.asarray(x, dtype=float)
        width = len(VARIANTS[self.variant])
        if x.ndim != 2 or x.shape[1] != width:
            raise ValueError(f"input width {x.shape[-1]} does not match variant {self.variant!r} ({width})")
        out = np.full((len(x), len(self.base)), np.nan)
        if len(x) < self.window:
            return out
        B = apply_bins(windows(x, self.window), self.edges)
        for c, ts in enumerate(self.trees):
            p = np.full(len(B), self.base[c])
            for t in ts:
                p += self.shrinkage * t.apply(B)
            out[self.window - 1:, c] = p
        return out

    def max_depth(self):
        return max((t.depth() for ts in self.trees for t in ts), default=0)


def train_trees(ds, variant="ftvac", h_ms=30, rounds=50, seed=0, max_depth=MAX_DEPTH,
                shrinkage=SHRINKAGE, window=WINDOW, n_bins=N_BINS, min_child=MIN_CHILD, log=None):
    """One boosted ensemble per contact channel on flattened input windows."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    variant = canonical_variant(variant)
    steps = horizon_steps(h_ms)
    xs, ys = ds.part("train", variant)
    vx, vy = ds.part("val", variant)
    X, Y = window_rows(xs + vx, ys + vy, steps, window)
    edges = fit_bins(X, n_bins)
    B = apply_bins(X, edges)
    base = Y.mean(axis=0)
    trees = []
    for c in range(Y.shape[1]):
        pred = np.full(len(Y), base[c])
        ts = []
        for r in range(rounds):
            tree, upd = grow_tree(B, Y[:, c] - pred, max_depth, n_bins, min_child=min_child)
            pred += shrinkage * upd
            ts.append(tree)
        trees.append(ts)
        if log:
            log(f"channel {c}: train mse {np.mean((pred - Y[:, c]) ** 2):.5f}")
    return TreeModel(variant, h_ms, list(edges), base, trees, shrinkage, window, ds.norm)
