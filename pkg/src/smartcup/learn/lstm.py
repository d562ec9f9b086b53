"""Two-layer LSTM forecaster with hand-written backpropagation through time.

Gate blocks are ordered (input, forget, cell, output); each layer keeps one
weight matrix over the concatenated [input, previous hidden] and one bias.
Sequences are batched time-major and right-padded; padding only ever follows
valid steps, so it cannot reach a valid output and needs masking in the loss
alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import VARIANTS, Normalizer, canonical_variant, horizon_steps

HIDDEN = 200
N_OUT = 4


class TrainingError(RuntimeError):
    pass


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


@dataclass
class LSTMParams:
    W: list          # per layer (in + H, 4H)
    b: list          # per layer (4H,)
    Wy: np.ndarray   # (H, 4)
    by: np.ndarray   # (4,)

    @classmethod
    def init(cls, n_in, hidden=HIDDEN, n_layers=2, n_out=N_OUT, rng=None, dtype=np.float64):
        rng = rng or np.random.default_rng(0)
        k = 1.0 / math.sqrt(hidden)
        W, b = [], []
        for layer in range(n_layers):
            d = n_in if layer == 0 else hidden
            W.append(rng.uniform(-k, k, size=(d + hidden, 4 * hidden)).astype(dtype))
            b.append(rng.uniform(-k, k, size=4 * hidden).astype(dtype))
        Wy = rng.uniform(-k, k, size=(hidden, n_out)).astype(dtype)
        by = rng.uniform(-k, k, size=n_out).astype(dtype)
        return cls(W, b, Wy, by)

    def arrays(self):
        return [*self.W, *self.b, self.Wy, self.by]

    def count(self):
        return int(sum(a.size for a in self.arrays()))

    def copy(self):
        return LSTMParams([w.copy() for w in self.W], [x.copy() for x in self.b],
                          self.Wy.copy(), self.by.copy())

    def astype(self, dtype):
        return LSTMParams([w.astype(dtype) for w in self.W], [x.astype(dtype) for x in self.b],
                          self.Wy.astype(dtype), self.by.astype(dtype))

    @property
    def hidden(self):
        return self.Wy.shape[0]


def parameter_count(n_in, hidden=HIDDEN, n_layers=2, n_out=N_OUT):
    total = 0
    for layer in range(n_layers):
        d = n_in if layer == 0 else hidden
        total += (d + hidden) * 4 * hidden + 4 * hidden
    return total + hidden * n_out + n_out


def _layer_forward(X, W, b):
    """X (T, B, D) -> hidden states (T, B, H) and a cache for backward."""
    T, B, D = X.shape
    H = W.shape[1] // 4
    Wx, Wh = W[:D], W[D:]
    Zx = (X.reshape(T * B, D) @ Wx).reshape(T, B, 4 * H) + b
    hs = np.empty((T + 1, B, H), dtype=X.dtype)
    cs = np.empty((T + 1, B, H), dtype=X.dtype)
    gates = np.empty((T, B, 4 * H), dtype=X.dtype)
    hs[0] = 0.0
    cs[0] = 0.0
    for t in range(T):
        z = Zx[t] + hs[t] @ Wh
        a = gates[t]
        a[:, :2 * H] = _sigmoid(z[:, :2 * H])
        a[:, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
        a[:, 3 * H:] = _sigmoid(z[:, 3 * H:])
        cs[t + 1] = a[:, H:2 * H] * cs[t] + a[:, :H] * a[:, 2 * H:3 * H]
        hs[t + 1] = a[:, 3 * H:] * np.tanh(cs[t + 1])
    return hs[1:], (X, hs, cs, gates)


def _layer_backward(dHout, W, cache):
    """Gradient of the loss w.r.t. layer inputs and parameters."""
    X, hs, cs, gates = cache
    T, B, D = X.shape
    H = W.shape[1] // 4
    Wh = W[D:]
    dZ = np.empty((T, B, 4 * H), dtype=X.dtype)
    dh = np.zeros((B, H), dtype=X.dtype)
    dc = np.zeros((B, H), dtype=X.dtype)
    WhT = Wh.T.copy()
    for t in range(T - 1, -1, -1):
        a = gates[t]
        i, f, g, o = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        dh = dh + dHout[t]
        tc = np.tanh(cs[t + 1])
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = dZ[t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cs[t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dc = dc * f
        dh = dz @ WhT
    flatZ = dZ.reshape(T * B, 4 * H)
    dWx = X.reshape(T * B, D).T @ flatZ
    dWh = hs[:-1].reshape(T * B, H).T @ flatZ
    db = flatZ.sum(axis=0)
    dX = (flatZ @ W[:D].T).reshape(T, B, D)
    return dX, np.vstack([dWx, dWh]), db


def forward(params: LSTMParams, X):
    """X (T, B, D) -> outputs (T, B, 4) and caches."""
    caches = []
    h = X
    for W, b in zip(params.W, params.b):
        h, cache = _layer_forward(h, W, b)
        caches.append(cache)
    T, B, H = h.shape
    Y = (h.reshape(T * B, H) @ params.Wy).reshape(T, B, -1) + params.by
    return Y, (caches, h)


def loss_and_grad(params: LSTMParams, X, Yt, mask):
    """Masked mean squared error and its gradient.

    ``mask`` (T, B) marks steps whose output has a target.
    """
    Y, (caches, htop) = forward(params, X)
    m = mask[:, :, None].astype(X.dtype)
    n = max(float(mask.sum()) * Y.shape[2], 1.0)
    err = (Y - Yt) * m
    loss = float((err.astype(np.float64) ** 2).sum() / n)
    dY = (2.0 / n) * err
    T, B, H = htop.shape
    dYf = dY.reshape(T * B, -1)
    gWy = htop.reshape(T * B, H).T @ dYf
    gby = dYf.sum(axis=0)
    dH = (dYf @ params.Wy.T).reshape(T, B, H)
    gW = [None] * len(params.W)
    gb = [None] * len(params.b)
    for layer in range(len(params.W) - 1, -1, -1):
        dH, gW[layer], gb[layer] = _layer_backward(dH, params.W[layer], caches[layer])
    return loss, LSTMParams(gW, gb, gWy, gby)


class Adam:
    def __init__(self, params: LSTMParams, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(a) for a in params.arrays()]
        self.v = [np.zeros_like(a) for a in params.arrays()]
        self.t = 0

    def step(self, params: LSTMParams, grads: LSTMParams):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params.arrays(), grads.arrays(), self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def pack(xs, ys=None, steps=0, dtype=np.float64):
    """Time-major padded batch. Targets are shifted so output t holds y[t + steps]."""
    B = len(xs)
    T = max(len(x) for x in xs)
    D = xs[0].shape[1]
    X = np.zeros((T, B, D), dtype=dtype)
    Y = np.zeros((T, B, N_OUT), dtype=dtype)
    M = np.zeros((T, B), dtype=bool)
    for j, x in enumerate(xs):
        X[:len(x), j] = x
        if ys is not None:
            y = ys[j]
            n = len(y) - steps
            if n > 0:
                Y[:n, j] = y[steps:]
                M[:n, j] = True
    return X, Y, M


def _batches(lengths, size, rng):
    """Length-bucketed batches in a shuffled order."""
    order = np.argsort(lengths, kind="stable")
    chunks = [order[i:i + size] for i in range(0, len(order), size)]
    return [chunks[k] for k in rng.permutation(len(chunks))]


@dataclass
class RecurrentModel:
    params: LSTMParams
    variant: str
    h_ms: float
    norm: Normalizer | None = None
    history: list = field(default_factory=list)
    best_epoch: int = -1

    @property
    def steps(self):
        return horizon_steps(self.h_ms)

    @property
    def n_in(self):
        return len(VARIANTS[self.variant])

    def predict(self, x):
        """x (T, width) normalised inputs -> (T, 4); row t estimates contact at t + h."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ValueError(f"input width {x.shape[-1]} does not match variant {self.variant!r} "
                             f"({self.n_in})")
        p = self.params.astype(np.float64)
        Y, _ = forward(p, x[:, None, :])
        return Y[:, 0, :]


def masked_mse(params, xs, ys, steps, batch=64, dtype=np.float64):
    tot, cnt = 0.0, 0
    for i in range(0, len(xs), batch):
        X, Y, M = pack(xs[i:i + batch], ys[i:i + batch], steps, dtype)
        P, _ = forward(params, X)
        e = ((P - Y) ** 2).sum(axis=2).astype(np.float64)
        tot += float(e[M].sum())
        cnt += int(M.sum()) * N_OUT
    return tot / max(cnt, 1)


def train_recurrent(ds, variant="ftvac", h_ms=30, seed=0, epochs=100, lr=1e-3, hidden=HIDDEN,
                    batch_size=1, clip=10.0, dtype=np.float32, log=None):
    """Fit on the training split; keep the parameters with the best validation MSE."""
    variant = canonical_variant(variant)
    steps = horizon_steps(h_ms)
    xs, ys = ds.part("train", variant)
    vx, vy = ds.part("val", variant)
    if not xs:
        raise TrainingError("empty training split")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x157]))
    params = LSTMParams.init(len(VARIANTS[variant]), hidden, rng=rng, dtype=dtype)
    opt = Adam(params, lr)
    lengths = np.array([len(x) for x in xs])
    best, best_val, best_ep = params.copy(), np.inf, -1
    history = []
    for ep in range(epochs):
        tr_loss = 0.0
        for bi, idx in enumerate(_batches(lengths, batch_size, rng)):
            X, Y, M = pack([xs[i] for i in idx], [ys[i] for i in idx], steps, dtype)
            if not M.any():
                continue
            loss, g = loss_and_grad(params, X, Y, M)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {ep}, batch {bi}")
            if clip:
                norm = math.sqrt(sum(float((a.astype(np.float64) ** 2).sum()) for a in g.arrays()))
                if norm > clip:
                    for a in g.arrays():
                        a *= clip / norm
            opt.step(params, g)
            tr_loss += loss * len(idx)
        tr_loss /= len(xs)
        val = masked_mse(params, vx, vy, steps, dtype=dtype) if vx else tr_loss
        history.append((ep, tr_loss, val))
        if log:
            log(f"epoch {ep:3d}  train {tr_loss:.5f}  val {val:.5f}")
        if val < best_val:
            best, best_val, best_ep = params.copy(), val, ep
    return RecurrentModel(best.astype(np.float64), variant, h_ms, ds.norm, history, best_ep)
