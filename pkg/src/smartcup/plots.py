"""SVG figures from the CSV outputs."""
from __future__ import annotations

from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "smartcup"
matplotlib.rcParams["svg.fonttype"] = "none"

CH_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red")


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def _cols(header, data, names):
    idx = {h: i for i, h in enumerate(header)}
    missing = [n for n in names if n not in idx]
    if missing:
        raise ValueError(f"missing columns {missing}")
    return [data[:, idx[n]] for n in names]


def plot_texture(header, data, path):
    """Mean vacuum against grit, one line per mode, shaded by one std."""
    grit, mode, mean, std = _cols(header, data, ["grit", "mode", "mean_pvac", "std_pvac"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for m, name in ((0, "full vacuum"), (1, "PWM")):
        sel = mode == m
        if not sel.any():
            continue
        o = np.argsort(grit[sel])
        g, mu, sd = grit[sel][o], mean[sel][o] / 1e3, std[sel][o] / 1e3
        ax.plot(g, mu, marker="o", label=name)
        ax.fill_between(g, mu - sd, mu + sd, alpha=0.25)
    ax.set_xlabel("sandpaper grit")
    ax.set_ylabel("mean P_vac (kPa)")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_trace(header, data, path):
    """Chamber vacuum and, when present, quadrant contact against time."""
    idx = {h: i for i, h in enumerate(header)}
    t = data[:, idx["t"]]
    has_c = all(f"c{k}" in idx for k in range(1, 5))
    fig, axes = plt.subplots(2 if has_c else 1, 1, sharex=True, figsize=(6, 4.5 if has_c else 3))
    axes = np.atleast_1d(axes)
    for k in range(4):
        axes[0].plot(t, data[:, idx[f"p{k + 1}"]] / 1e3, color=CH_COLORS[k], lw=0.8, label=f"ch{k + 1}")
    axes[0].set_ylabel("P_vac (kPa)")
    axes[0].legend(ncol=4, fontsize=7)
    if has_c:
        for k in range(4):
            axes[1].plot(t, data[:, idx[f"c{k + 1}"]], color=CH_COLORS[k], lw=0.8)
        axes[1].set_ylabel("contact")
        axes[1].set_ylim(-0.05, 1.05)
    axes[-1].set_xlabel("time (s)")
    fig.tight_layout()
    return _save(fig, path)


def plot_sliding(header, data, path):
    """Two panels: channel-mean carrier magnitude and right-minus-left difference."""
    t, ch_all, ch_diff = _cols(header, data, ["t", "ch_all", "ch_diff"])
    fig, (a0, a1) = plt.subplots(2, 1, sharex=True, figsize=(6, 4.5))
    a0.plot(t, ch_all, color="k", lw=0.9)
    a0.set_ylabel("ch_all |STFT30| (Pa)")
    a1.plot(t, ch_diff, color="tab:purple", lw=0.9)
    a1.axhline(0.0, color="0.6", lw=0.6)
    a1.set_ylabel("ch_diff (Pa)")
    a1.set_xlabel("time (s)")
    fig.tight_layout()
    return _save(fig, path)


def plot_palpation(header, data, path):
    """Steady carrier magnitude per chamber against palpation angle."""
    ang, ch, val = _cols(header, data, ["angle", "ch", "dft30"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k in range(1, 5):
        sel = ch == k
        o = np.argsort(ang[sel])
        ax.plot(ang[sel][o], val[sel][o], marker="o", color=CH_COLORS[k - 1], label=f"ch{k}")
    ax.set_xlabel("palpation angle (deg)")
    ax.set_ylabel("|DFT30| (Pa)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_stft(header, data, path):
    t, ch, val = _cols(header, data, ["t", "ch", "stft30"])
    fig, ax = plt.subplots(figsize=(6, 3))
    for k in np.unique(ch).astype(int):
        sel = ch == k
        ax.plot(t[sel], val[sel], lw=0.8, color=CH_COLORS[(k - 1) % 4], label=f"ch{k}")
    ax.set_xlabel("window start (s)")
    ax.set_ylabel("|STFT30| (Pa)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_metrics(rows, path):
    """Grouped bars of test MSE per model and input variant."""
    labels = [f"{r['model']}\n{r['variant']}\nh={r['h_ms']:g}" for r in rows]
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(rows)), 3.5))
    ax.bar(np.arange(len(rows)), [r["mse"] for r in rows], color="tab:gray")
    ax.set_xticks(np.arange(len(rows)), labels, fontsize=7)
    ax.set_ylabel("test MSE")
    fig.tight_layout()
    return _save(fig, path)


def plot_ablation(rows, path, th=0.5):
    h = np.array([r["h_ms"] for r in rows], dtype=float)
    fig, (a0, a1) = plt.subplots(2, 1, sharex=True, figsize=(5, 4.5))
    a0.plot(h, [r["mse"] for r in rows], marker="o")
    a0.set_ylabel("test MSE")
    a1.plot(h, [r[f"mbte@{th}"] for r in rows], marker="o", color="tab:red")
    a1.axhline(0.0, color="0.6", lw=0.6)
    a1.set_ylabel(f"MBTE@{th} (ms)")
    a1.set_xlabel("horizon h (ms)")
    fig.tight_layout()
    return _save(fig, path)
