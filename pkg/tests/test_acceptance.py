"""Acceptance suite: one test per criterion, each printing a single pass/fail line."""
import filecmp
import time

import numpy as np
import pytest

from smartcup import constants as C
from smartcup.cli import main
from smartcup.features import exploration as ex
from smartcup.features.spectral import WINDOW, dft_mag_at, hamming, stft_30
from smartcup.labels.core import label_sequence, quadrant_contact_label
from smartcup.learn import lstm
from smartcup.learn.ablation import ablate_horizon, mse_slope
from smartcup.learn.dataset import build_dataset
from smartcup.learn.metrics import evaluate_model, metric_mbte
from smartcup.learn.trees import train_trees
from smartcup.sim.batch import detach_trial, sample_detach_batch
from smartcup.sim.network import ValveState, build_network, steady_state
from smartcup.sim.render import render_seal_frame
from smartcup.sim.scenarios import GRITS, Scenario, horizontal_leaks, run_scenario, vertical_leaks

MID = (63.5, 63.5)


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return _report


def test_criterion_01_leak_localization(cfg, report):
    t0 = time.perf_counter()
    net = build_network(cfg)
    hits, diffs = 0, []
    for k in range(4):
        pv = cfg.p_atm - steady_state(net, ValveState.full(), vertical_leaks(cfg, k))[0]
        hits += int(np.argmin(pv) == k)
        diffs.append(pv.max() - pv.min())
        pv = cfg.p_atm - steady_state(net, ValveState.full(), horizontal_leaks(cfg, k))[0]
        hits += int(np.argmin(pv) == (k + 2) % 4)
    dt = time.perf_counter() - t0
    ok = hits == 8 and all(200.0 <= d <= 800.0 for d in diffs) and dt < 10.0
    report(1, ok, f"{hits}/8 orderings, vertical differential {min(diffs):.0f}-{max(diffs):.0f} Pa, {dt:.1f} s")


def test_criterion_02_texture_calibration(report):
    t0 = time.perf_counter()
    full, pwm = {}, {}
    for g in GRITS:
        for mode, store in (("full", full), ("pwm", pwm)):
            tr = run_scenario(Scenario("texture", {"grit": g}, 4.0, mode), 0)
            store[g] = tr.p_vac[tr.t >= 2.0].mean()
    dt = time.perf_counter() - t0
    means = [full[g] for g in GRITS]
    ratios = [full[g] / pwm[g] for g in GRITS]
    ok = (abs(full[600] / 74e3 - 1) <= 0.1 and all(a < b for a, b in zip(means, means[1:]))
          and all(10.0 <= r <= 40.0 for r in ratios) and dt < 60.0)
    report(2, ok, f"600 grit {full[600] / 1e3:.1f} kPa, increasing {all(a < b for a, b in zip(means, means[1:]))}, "
                  f"full/pwm {min(ratios):.1f}-{max(ratios):.1f}x, {dt:.1f} s")


def _oracle(x, scale):
    n = len(x)
    m = np.arange(n)
    return abs(np.sum(x * np.exp(-2j * np.pi * 15 * m / n))) * 2.0 / scale


def test_criterion_03_dsp_oracle(report):
    rng = np.random.default_rng(0)
    w = hamming(WINDOW)
    worst = 0.0
    for _ in range(1000):
        x = rng.normal(size=WINDOW) * 10 ** rng.uniform(-2, 5)
        a, b = dft_mag_at(x), _oracle(x, WINDOW)
        worst = max(worst, abs(a - b) / b)
        _, v = stft_30(x)
        b = _oracle(x * w, w.sum())
        worst = max(worst, abs(v[0] - b) / b)
    n = np.arange(WINDOW)
    amp = 37.0
    sine = amp * np.sin(2 * np.pi * 30.12 * n / C.SENSOR_RATE + 0.3)
    sine_err = max(abs(dft_mag_at(sine) / amp - 1), abs(stft_30(sine)[1][0] / amp - 1))
    ok = worst <= 1e-9 and sine_err <= 0.02
    report(3, ok, f"max oracle rel err {worst:.1e} over 1000 windows, sine amplitude err {100 * sine_err:.2f}%")


def test_criterion_04_sliding_signatures(report):
    got = {}
    for surface in ("wavy", "ribbed"):
        tr = run_scenario(Scenario("slide", {"surface": surface}, None, "pwm"), 0)
        prof = ex.sliding_profile(tr)
        marks = tr.meta["events"]
        smooth = [e for e in prof.events if e.kind == "texture-to-smooth"]
        rises = bool(smooth) and smooth[0].magnitude > 0
        half = prof.times < marks["full-texture"]
        half_ok = prof.ch_diff[half].mean() > 0 and not any(e.start < marks["full-texture"] for e in prof.events)
        margin = 0.01 * (prof.ch_all.max() - prof.ch_all.min())
        excursions = bool(prof.events) and all(ex.excursion_pattern(prof, e, margin) == "+-" for e in prof.events)
        got[surface] = int(rises) + int(half_ok) + int(excursions)
    ok = all(v == 3 for v in got.values())
    report(4, ok, ", ".join(f"{s}->smooth {v}/3" for s, v in got.items()))


def _sweep(radius, preload):
    return ex.normal_seek([(a, run_scenario(Scenario("palpate", {"angle": float(a), "tip_radius": radius,
                                                                 "preload": preload}, None, "pwm"), 0))
                           for a in ex.SWEEP_ANGLES])


def test_criterion_05_normal_seeking(report):
    res = {case: _sweep(*case) for case in ((11.0, 1.0), (8.0, 1.0), (11.0, 0.5))}
    best = all(r.best_angle == 0.0 for r in res.values())
    cls = [r.classification for r in res.values()]
    ratio = res[(11.0, 1.0)].seal_quality / res[(11.0, 0.5)].seal_quality
    ok = best and cls == ["GOOD", "POOR", "POOR"] and ratio >= 100.0
    report(5, ok, f"best angles {[r.best_angle for r in res.values()]}, classes {cls}, 1 N / 0.5 N quality {ratio:.0f}x")


def test_criterion_06_label_roundtrip(report):
    grid = np.round(np.arange(0, 1.01, 0.1), 1)
    rng = np.random.default_rng(0)
    worst = 0.0
    cases = np.vstack([np.column_stack([grid] * 4), np.column_stack([grid, grid[::-1], grid, grid[::-1]]),
                       rng.choice(grid, size=(200, 4))])
    for c in cases:
        lab = quadrant_contact_label(render_seal_frame(c, MID, noise=0.0, as_uint8=False), MID, normalize=False)
        worst = max(worst, np.abs(lab - c).max())
    track = 0.0
    for i in range(4):
        tr = detach_trial(11, i, 9 * i, frames=True)
        fr = tr.frames
        _, centers = label_sequence(fr.images, fr.t, fr.orientation_t, fr.orientation)
        track = max(track, np.linalg.norm(centers - fr.centers, axis=1).max())
    ok = worst <= 0.05 and track < 5.0
    report(6, ok, f"max label err {worst:.3f} over {len(cases)} grid vectors, max tracking err {track:.2f} px")


RECURRENT_EPOCHS = 40


def test_criterion_07_learning_benchmark(report):
    t0 = time.perf_counter()
    ds = build_dataset(sample_detach_batch(740, 0))
    n_pool = len(ds.split["train"]) + len(ds.split["val"])
    trees = evaluate_model(train_trees(ds, "ftvac", 30), ds)
    # one trial per step; 40 epochs keeps the whole check inside the 30 min budget
    rec = evaluate_model(lstm.train_recurrent(ds, "ftvac", 30, epochs=RECURRENT_EPOCHS), ds)
    dt = time.perf_counter() - t0
    # sign convention: a forecast crossing 5 samples before the truth is +30 ms
    truth = np.ones((40, 4))
    truth[20:, 2] = 0.0
    early = np.ones((40, 4))
    early[15:, 2] = 0.0
    (mbte, _), _ = metric_mbte([early], [truth], 0.5)
    whole = all(rec[f"mbte@{th}"] % C.SAMPLE_MS == 0 for th in (0.5, 0.6, 0.7))
    ratio = rec["mse"] / trees["mse"]
    ok = (n_pool == 592 and len(ds.split["test"]) == 148 and ratio <= 0.5 and rec["bqa@0.5"] >= 0.75
          and mbte == 30.0 and whole and dt < 1800)
    report(7, ok, f"recurrent mse {rec['mse']:.2e} vs trees {trees['mse']:.2e} (ratio {ratio:.2f}, need <= 0.5), "
                  f"recurrent BQA@0.5 {rec['bqa@0.5']:.2f}, trees BQA@0.5 {trees['bqa@0.5']:.2f}, "
                  f"MBTE@0.5 {rec['mbte@0.5']:+.0f} ms, fixture {mbte:+.0f} ms, {dt / 60:.1f} min")


def _numeric(p, X, Y, M, eps=1e-5):
    out = []
    for a in p.arrays():
        flat = a.reshape(-1)
        g = np.zeros(flat.size)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            lp, _ = lstm.loss_and_grad(p, X, Y, M)
            flat[i] = old - eps
            lm, _ = lstm.loss_and_grad(p, X, Y, M)
            flat[i] = old
            g[i] = (lp - lm) / (2 * eps)
        out.append(g)
    return np.concatenate(out)


def test_criterion_08_gradient_check(report):
    worst = 0.0
    for draw in range(100):
        rng = np.random.default_rng(draw)
        n_in = int(rng.integers(1, 4))
        p = lstm.LSTMParams.init(n_in, hidden=int(rng.integers(2, 4)), rng=rng)
        T, B = int(rng.integers(2, 6)), int(rng.integers(1, 3))
        X = rng.normal(size=(T, B, n_in))
        Y = rng.uniform(size=(T, B, 4))
        M = rng.random((T, B)) < 0.8
        M[0, 0] = True
        _, g = lstm.loss_and_grad(p, X, Y, M)
        a = np.concatenate([x.ravel() for x in g.arrays()])
        b = _numeric(p, X, Y, M)
        worst = max(worst, np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b)))
    report(8, worst <= 1e-5, f"worst relative gradient error {worst:.1e} over 100 draws")


ABLATION_TRIALS = 300


def test_criterion_09_horizon_ablation(report):
    # the tree baseline trains to convergence in minutes; see the ledger for why not the recurrent model
    ds = build_dataset(sample_detach_batch(ABLATION_TRIALS, 0))
    rows = ablate_horizon(ds, [30, 90, 150, 210, 270, 330], "trees", "ftvac", 0)
    mse = [r["mse"] for r in rows]
    mbte = [r["mbte@0.5"] for r in rows]
    nondec = all(a <= b for a, b in zip(mse, mse[1:]))
    trend = np.polyfit([r["h_ms"] for r in rows[2:]], mbte[2:], 1)[0]
    ok = nondec and trend < 0 and mbte[-1] < 0
    report(9, ok, f"mse {['%.2e' % m for m in mse]}, non-decreasing {nondec}, "
                  f"MBTE@0.5 {[f'{m:+.0f}' for m in mbte]} ms (slope over h>=150 {trend:+.3f}), "
                  f"mse slope {mse_slope(rows):.4f} per 60 ms (recorded only)")


def _pipeline(root):
    steps = [
        ("simulate", "--scenario", "detach", "--batch", 8, "--frame-rate", 60, "--seed", 4, "--out", root / "sim"),
        ("simulate", "--scenario", "texture", "--grit", "all", "--mode", "full,pwm", "--duration", 3,
         "--seed", 4, "--out", root / "tex"),
        ("featurize", "--kind", "texture", "--in", root / "tex", "--out", root / "texf"),
        ("featurize", "--kind", "stft", "--in", root / "sim" / "trial_0000" / "trace.csv", "--out", root / "stft"),
        ("label", "--in", root / "sim", "--out", root / "lab"),
        ("train", "--in", root / "sim", "--labels", root / "lab", "--model", "trees", "--rounds", 5,
         "--seed", 4, "--out", root / "model"),
        ("train", "--in", root / "sim", "--labels", root / "lab", "--model", "recurrent", "--epochs", 2,
         "--seed", 4, "--out", root / "model"),
        ("evaluate", "--in", root / "sim", "--labels", root / "lab", "--model", "all", "--model-dir",
         root / "model", "--out", root / "eval"),
        ("ablate", "--in", root / "sim", "--model", "trees", "--rounds", 3, "--h", "30:150:60", "--seed", 4,
         "--out", root / "abl"),
    ]
    for s in steps:
        assert main([str(a) for a in s]) == 0, s
    return sorted(p.relative_to(root) for p in root.rglob("*.csv"))


def test_criterion_10_determinism(tmp_path, report):
    a = _pipeline(tmp_path / "a")
    b = _pipeline(tmp_path / "b")
    same = a == b and all(filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in a)
    report(10, same and len(a) > 0, f"{len(a)} CSV files compared, byte-identical {same}")
