"""Command-line pipeline: simulate, featurize, label, train, evaluate, ablate, plot, calibrate.

Global flags may be given before or after the subcommand. Each one falls
back to an environment variable with the ``SMARTCUP_`` prefix
(``SMARTCUP_SEED``, ``SMARTCUP_CONFIG``, ``SMARTCUP_OUT``,
``SMARTCUP_THREADS``). simulate, train and ablate refuse to run without a
seed. Exit codes: 0 success, 2 configuration or input
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .sim import io as sio
from .sim.network import ConfigError, CupConfig, IntegratorError, SteadyStateError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
ENV_PREFIX = "SMARTCUP_"
MANIFEST = "manifest.json"


class InputError(ValueError):
    pass


# ---------------------------------------------------------------- config

def load_config(path):
    """(CupConfig, scenario dict or None, SensorModel) from an optional JSON file.

    ``cup`` entries override the packaged calibrated defaults.
    """
    from .sim.scenarios import SensorModel
    doc = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
    extra = set(doc) - {"version", "cup", "scenario", "sensor", "targets"}
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    cup = CupConfig.default().to_dict()
    cup.update(doc.get("cup", {}))
    cfg = CupConfig.from_dict(cup)
    try:
        sensor = SensorModel(**doc.get("sensor", {}))
    except TypeError as e:
        raise ConfigError(f"bad sensor section: {e}") from None
    return cfg, doc.get("scenario"), sensor


def config_hash(cfg, scenario=None, sensor=None):
    blob = {"cup": cfg.to_dict(), "scenario": scenario,
            "sensor": None if sensor is None else vars(sensor)}
    return hashlib.sha256(json.dumps(blob, sort_keys=True, default=str).encode()).hexdigest()


def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out, args, outputs, cfg_hash=None, inputs=(), extra=None):
    """One manifest per output directory; paths are relative to it."""
    out = Path(out)
    files = sorted({Path(p).resolve() for p in outputs})
    doc = {
        "tool": "smartcup", "version": __version__, "subcommand": args.command,
        "seed": args.seed, "config": args.config, "config_hash": cfg_hash,
        "threads": args.threads,
        "inputs": [str(p) for p in inputs],
        "outputs": {str(f.relative_to(out.resolve())): _sha(f) for f in files},
        "args": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "threads")},
    }
    if extra:
        doc["summary"] = extra
    return sio.write_json(out / MANIFEST, doc)


# ---------------------------------------------------------------- data loading

def trial_dirs(root):
    """Directories holding a ``trace.csv`` under ``root`` (or ``root`` itself)."""
    root = Path(root)
    if (root / "trace.csv").exists():
        return [root]
    dirs = sorted(p.parent for p in root.glob("*/trace.csv"))
    if not dirs:
        raise InputError(f"no trace.csv found in {root}")
    return dirs


def load_traces(root):
    return [(d.name, sio.read_trace(d / "trace.csv")) for d in trial_dirs(root)]


def load_labels(labels_root, names, traces):
    out = []
    for name, tr in zip(names, traces):
        p = Path(labels_root) / name / "labels.csv"
        if not p.exists():
            raise InputError(f"missing labels for trial {name}: {p}")
        _, a = sio.read_csv(p, ["t", "c1", "c2", "c3", "c4"])
        if len(a) != len(tr.t) or not np.allclose(a[:, 0], tr.t, atol=1e-6):
            raise InputError(f"{p}: label timeline does not match the trace")
        out.append(a[:, 1:5])
    return out


def load_dataset(args):
    from .learn.dataset import build_dataset
    named = load_traces(args.inp)
    names = [n for n, _ in named]
    traces = [t for _, t in named]
    labels = load_labels(args.labels, names, traces) if args.labels else None
    return build_dataset(traces, labels, split_seed=args.split_seed)


# ---------------------------------------------------------------- simulate

def _float_list(s, kind=float):
    return [kind(x) for x in str(s).split(",") if x.strip()]


def _scenario_runs(args, base):
    """List of (dir name or None, Scenario)."""
    from .features.exploration import SWEEP_ANGLES
    from .sim.scenarios import DEFAULTS, GRITS, Scenario
    kind = args.scenario or (base or {}).get("kind")
    if kind is None:
        raise ConfigError("no scenario given (use --scenario or a 'scenario' config section)")
    if kind not in DEFAULTS:
        raise ConfigError(f"unknown scenario {kind!r}")
    b = Scenario.from_dict(base) if base and base.get("kind") == kind else Scenario(kind)
    params = dict(b.params)
    modes = _float_list(args.mode, str) if args.mode else [b.vacuum_mode]
    dur = args.duration if args.duration is not None else b.duration
    runs = []
    if kind == "texture":
        grits = GRITS if args.grit == "all" else _float_list(args.grit, int) if args.grit else [params.get("grit", 600)]
        multi = len(grits) * len(modes) * args.reps > 1
        for g in grits:
            for m in modes:
                for r in range(args.reps):
                    name = f"grit_{g}_{m}_r{r}" if multi else None
                    runs.append((name, Scenario("texture", dict(params, grit=g), dur, m)))
    elif kind == "slide":
        if args.surface:
            params["surface"] = args.surface
        mode = modes[0] if args.mode else "pwm"
        runs.append((None, Scenario("slide", params, dur, mode)))
    elif kind == "palpate":
        for k, v in (("tip_radius", args.tip_radius), ("preload", args.preload)):
            if v is not None:
                params[k] = v
        mode = modes[0] if args.mode else "pwm"
        if args.angles:
            angles = SWEEP_ANGLES if args.angles == "sweep" else _float_list(args.angles)
            for a in angles:
                runs.append((f"angle_{a:g}", Scenario("palpate", dict(params, angle=float(a)), dur, mode)))
        else:
            runs.append((None, Scenario("palpate", params, dur, mode)))
    else:
        runs.append(("trial_0000", Scenario("detach", params, dur, modes[0])))
    for _, s in runs:
        s.resolved()
    return runs


def _write_trial(tr, d, frames):
    d.mkdir(parents=True, exist_ok=True)
    paths = [sio.write_trace(tr, d / "trace.csv"), d / "trace.json"]
    if frames and tr.frames is not None:
        sio.write_frames(tr.frames, d)
        paths += [d / "centers.csv", d / "orientation.csv", d / "frame_times.csv"]
    return [str(p) for p in paths]


def _run_one(job):
    name, scen, seed, index, cfg, sensor, frames, frame_rate, out = job
    from .sim.batch import trial_rng
    from .sim.scenarios import run_scenario
    rng = trial_rng(seed, index) if name is not None else None
    tr = run_scenario(scen, seed, cfg, sensor, frames=frames, frame_rate=frame_rate, rng=rng)
    d = Path(out) / name if name is not None else Path(out)
    return _write_trial(tr, d, frames)


def _detach_one(job):
    seed, index, cell, cfg, sensor, frames, frame_rate, out = job
    from .sim.batch import detach_trial
    tr = detach_trial(seed, index, cell, cfg, sensor, frames=frames, frame_rate=frame_rate)
    return _write_trial(tr, Path(out) / f"trial_{index:04d}", frames)


def _pool_map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_simulate(args):
    cfg, scen_doc, sensor = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = args.frames
    if args.batch is not None:
        if (args.scenario or (scen_doc or {}).get("kind")) != "detach":
            raise ConfigError("--batch is only defined for the detach scenario")
        from .sim.batch import grid_cells
        jobs = [(args.seed, i, int(c), cfg, sensor, frames, args.frame_rate, str(out))
                for i, c in enumerate(grid_cells(args.batch))]
        outputs = _pool_map(_detach_one, jobs, args.threads)
        scen_record = {"kind": "detach", "batch": args.batch}
    else:
        runs = _scenario_runs(args, scen_doc)
        jobs = [(name, s, args.seed, i, cfg, sensor, frames and s.kind == "detach",
                 args.frame_rate, str(out)) for i, (name, s) in enumerate(runs)]
        outputs = _pool_map(_run_one, jobs, args.threads)
        scen_record = [s.resolved().to_dict() for _, s in runs]
    files = [p for group in outputs for p in group]
    doc = {"version": 1, "cup": cfg.to_dict(), "scenario": scen_record, "sensor": vars(sensor)}
    files.append(str(sio.write_json(out / "config.json", doc)))
    write_manifest(out, args, files, config_hash(cfg, scen_record, sensor))
    print(f"wrote {len(outputs)} trace(s) to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- featurize

def _steady_mean(tr, window):
    t = np.asarray(tr.t)
    return float(np.asarray(tr.p_vac)[t >= t[-1] - window].mean())


def cmd_featurize(args):
    from .features import exploration as ex
    from .features.spectral import stft_features
    out = Path(args.out)
    files, summary = [], None
    if args.kind == "stft":
        tr = sio.read_trace(_trace_file(args.inp))
        rows = [(f.window_start, f.channel, f.value) for f in stft_features(tr.p_vac, tr.t, args.hop)]
        files.append(sio.write_csv(out / "features.csv", ["t", "ch", "stft30"], rows))
    elif args.kind == "sliding":
        tr = sio.read_trace(_trace_file(args.inp))
        prof = ex.sliding_profile(tr, args.hop)
        files.append(sio.write_csv(out / "profile.csv", ["t", "ch_all", "ch_diff"],
                                   np.column_stack([prof.times, prof.ch_all, prof.ch_diff])))
        margin = args.margin
        p = out / "events.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "magnitude", "start", "end", "kind", "pattern"])
            for ev in prof.events:
                w.writerow([f"{ev.time:.6g}", f"{ev.magnitude:.6g}", f"{ev.start:.6g}", f"{ev.end:.6g}",
                            ev.kind, ex.excursion_pattern(prof, ev, margin)])
        files.append(p)
        for ev in prof.events:
            print(f"{ev.kind:>18s}  t={ev.time:6.2f} s  d(ch_all)={ev.magnitude:+8.2f} Pa  "
                  f"ch_diff {ex.excursion_pattern(prof, ev, margin)}")
    elif args.kind == "dft":
        named = load_traces(args.inp)
        sweep = [(float(tr.meta["scenario"]["params"]["angle"]), tr) for _, tr in named]
        res = ex.normal_seek(sweep)
        rows = [(a, c + 1, res.curves[i, c]) for i, a in enumerate(res.angles) for c in range(4)]
        files.append(sio.write_csv(out / "dft.csv", ["angle", "ch", "dft30"], rows))
        summary = {"best_angle": res.best_angle, "seal_quality": res.seal_quality,
                   "classification": res.classification}
        print(f"best angle {res.best_angle:g} deg  seal quality {res.seal_quality:.4g} Pa  "
              f"{res.classification}")
    elif args.kind == "texture":
        groups = {}
        for _, tr in load_traces(args.inp):
            s = tr.meta["scenario"]
            key = (int(s["params"]["grit"]), 0 if s["vacuum_mode"] == "full" else 1)
            groups.setdefault(key, []).append(_steady_mean(tr, ex.STEADY_WINDOW))
        rows = [(g, m, np.mean(v), np.std(v), len(v)) for (g, m), v in sorted(groups.items())]
        files.append(sio.write_csv(out / "texture.csv", ["grit", "mode", "mean_pvac", "std_pvac", "n"], rows))
    write_manifest(out, args, files, inputs=[args.inp], extra=summary)
    return EXIT_OK


def _trace_file(p):
    p = Path(p)
    return p / "trace.csv" if p.is_dir() else p


# ---------------------------------------------------------------- label

def _label_one(job):
    d, out = job
    from .labels.core import label_sequence
    d = Path(d)
    fr = sio.read_frames(d)
    tr = sio.read_trace(d / "trace.csv")
    lab, _ = label_sequence(fr.images, fr.t, fr.orientation_t, fr.orientation, sample_t=tr.t)
    p = sio.write_csv(Path(out) / d.name / "labels.csv", ["t", "c1", "c2", "c3", "c4"],
                      np.column_stack([tr.t, lab]))
    return str(p), lab


def cmd_label(args):
    from .labels.core import break_stats
    out = Path(args.out)
    dirs = [d for d in trial_dirs(args.inp) if any(d.glob("frame_*.pgm"))]
    if not dirs:
        raise InputError(f"no frame directories under {args.inp}")
    res = _pool_map(_label_one, [(str(d), str(out)) for d in dirs], args.threads)
    files = [p for p, _ in res]
    rows = []
    for th in (0.5, 0.6, 0.7):
        rates, used, excl = break_stats([lab for _, lab in res], th)
        rows.append([th, *rates, used, excl])
    files.append(sio.write_csv(out / "break_stats.csv",
                               ["th", "q1", "q2", "q3", "q4", "n_used", "n_excluded"], rows))
    for r in rows:
        print(f"th={r[0]:.1f}  " + "  ".join(f"Q{k + 1} {100 * r[1 + k]:5.1f}%" for k in range(4))
              + f"  (n={r[5]}, excluded {r[6]})")
    write_manifest(out, args, files, inputs=[args.inp])
    return EXIT_OK


# ---------------------------------------------------------------- train / evaluate / ablate

def model_filename(kind, variant, h):
    return f"{kind}_{variant}_h{h:g}" + (".npz" if kind == "recurrent" else ".json")


def cmd_train(args):
    from .learn.dataset import canonical_variant, horizon_steps
    from .learn.io import save_model
    from .learn.lstm import train_recurrent
    from .learn.trees import train_trees
    horizon_steps(args.h)
    variant = canonical_variant(args.variant)
    ds = load_dataset(args)
    out = Path(args.out)
    log = print if args.verbose else None
    if args.model == "recurrent":
        m = train_recurrent(ds, variant, args.h, seed=args.seed, epochs=args.epochs, lr=args.lr,
                            batch_size=args.batch_size, log=log)
    else:
        m = train_trees(ds, variant, args.h, rounds=args.rounds, log=log)
    files = [save_model(m, out / model_filename(args.model, variant, args.h))]
    if args.model == "recurrent":
        files.append(sio.write_csv(out / f"history_{variant}_h{args.h:g}.csv",
                                   ["epoch", "train_mse", "val_mse"], m.history))
    print(f"saved {files[0]}")
    write_manifest(out, args, files, inputs=[args.inp])
    return EXIT_OK


def _expand(value, choices):
    return list(choices) if value == "all" else [value]


def cmd_evaluate(args):
    from .learn.dataset import VARIANTS, canonical_variant, horizon_steps
    from .learn.io import format_grid, load_model, write_report
    from .learn.metrics import evaluate_model
    horizon_steps(args.h)
    ths = tuple(args.th) if args.th else (0.5, 0.6, 0.7)
    ds = load_dataset(args)
    rows = []
    for kind in _expand(args.model, ("recurrent", "trees")):
        for v in _expand(args.variant, VARIANTS):
            v = canonical_variant(v)
            p = Path(args.model_dir) / model_filename(kind, v, args.h)
            if not p.exists():
                if args.model == "all" or args.variant == "all":
                    continue
                raise InputError(f"model file not found: {p}")
            m = load_model(p)
            if m.steps != horizon_steps(args.h):
                raise InputError(f"{p}: trained for h={m.h_ms} ms, not {args.h}")
            row = {"model": kind, "variant": v, "h_ms": args.h}
            row.update(evaluate_model(m, ds, "test", ths))
            rows.append(row)
    if not rows:
        raise InputError(f"no models found in {args.model_dir}")
    keys = ["model", "variant", "h_ms"]
    out = Path(args.out)
    f = write_report(out / "metrics.csv", rows, keys, ths)
    print(format_grid(rows, keys, ths))
    write_manifest(out, args, [f], inputs=[args.inp, args.model_dir])
    return EXIT_OK


def cmd_ablate(args):
    from .learn.ablation import ablate_horizon, mse_slope, parse_range
    from .learn.io import format_grid, write_report
    hs = parse_range(args.h)
    ds = load_dataset(args)
    kw = {"epochs": args.epochs} if args.model == "recurrent" else {"rounds": args.rounds}
    rows = ablate_horizon(ds, hs, args.model, args.variant, seed=args.seed,
                          log=print if args.verbose else None, **kw)
    out = Path(args.out)
    f = write_report(out / "ablation.csv", rows, ["h_ms", "model", "variant"])
    slope = mse_slope(rows)
    print(format_grid(rows, ["h_ms"]))
    print(f"MSE slope: {slope:.5f} per 60 ms")
    write_manifest(out, args, [f], inputs=[args.inp], extra={"mse_slope_per_60ms": slope})
    return EXIT_OK


# ---------------------------------------------------------------- plot / calibrate

def cmd_plot(args):
    from . import plots
    from .learn.io import read_report
    out = Path(args.out)
    target = out / f"{args.kind}.svg"
    if args.kind in ("metrics", "ablation"):
        rows = read_report(args.inp)
        if not rows:
            raise InputError(f"{args.inp}: empty report")
        getattr(plots, f"plot_{args.kind}")(rows, target)
    else:
        header, data = sio.read_csv(_trace_file(args.inp) if args.kind == "trace" else args.inp)
        try:
            getattr(plots, f"plot_{args.kind}")(header, data, target)
        except (KeyError, ValueError) as e:
            raise InputError(f"{args.inp}: {e}") from None
    print(f"wrote {target}")
    write_manifest(out, args, [target], inputs=[args.inp])
    return EXIT_OK


def cmd_calibrate(args):
    from .sim.calibrate import TARGETS, calibrate, write_default
    from .sim.network import DEFAULT_CONFIG_PATH
    base, _, _ = load_config(args.config)
    cfg = calibrate(base)
    out = Path(args.out)
    files = [write_default(cfg, out / "config.json")]
    if args.install:
        write_default(cfg, DEFAULT_CONFIG_PATH)
        print(f"installed {DEFAULT_CONFIG_PATH}")
    for k in ("g_leak_single", "g_grit_600", "g_grit_120"):
        print(f"{k:14s} {getattr(cfg, k):.6g}")
    write_manifest(out, args, files, config_hash(cfg), extra={"targets": TARGETS})
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _env(name, default, kind=str):
    v = os.environ.get(ENV_PREFIX + name.upper())
    if v is None or v == "":
        return default
    try:
        return kind(v)
    except ValueError:
        raise ConfigError(f"{ENV_PREFIX}{name.upper()}={v!r} is not a valid {kind.__name__}") from None


def _global_flags(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(_env("seed", None, int)),
                   help="root RNG seed (required by simulate, train and ablate)")
    p.add_argument("--config", default=d(_env("config", None)), help="JSON config file")
    p.add_argument("--out", default=d(_env("out", "smartcup_out")), help="output directory")
    p.add_argument("--threads", type=int, default=d(_env("threads", 1, int)),
                   help="worker processes for per-trial work")


def build_parser():
    ap = argparse.ArgumentParser(prog="smartcup", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"smartcup {__version__}")
    _global_flags(ap, False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, True)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate scenarios to trace CSVs")
    s.add_argument("--scenario", choices=("texture", "slide", "palpate", "detach"))
    s.add_argument("--grit", help="grit, comma list or 'all' (texture)")
    s.add_argument("--reps", type=int, default=5, help="repetitions per grit and mode (texture)")
    s.add_argument("--mode", help="full, pwm or 'full,pwm'")
    s.add_argument("--surface", choices=("wavy", "ribbed"))
    s.add_argument("--tip-radius", type=float)
    s.add_argument("--preload", type=float)
    s.add_argument("--angles", help="palpation angles as a comma list or 'sweep'")
    s.add_argument("--duration", type=float)
    s.add_argument("--batch", type=int, help="number of randomised detach trials")
    s.add_argument("--frames", action=argparse.BooleanOptionalAction, default=True,
                   help="render seal frames for detach trials")
    s.add_argument("--frame-rate", type=float, default=240.0)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("featurize", parents=[common], help="carrier-magnitude features")
    f.add_argument("--kind", choices=("stft", "sliding", "dft", "texture"), default="stft")
    f.add_argument("--in", dest="inp", required=True, help="trace CSV or simulate output directory")
    f.add_argument("--hop", type=int, default=1)
    f.add_argument("--margin", type=float, default=5.0, help="ch_diff excursion margin (Pa)")
    f.set_defaults(func=cmd_featurize)

    lb = sub.add_parser("label", parents=[common], help="quadrant contact labels from frames")
    lb.add_argument("--in", dest="inp", required=True)
    lb.set_defaults(func=cmd_label)

    def data_args(p):
        p.add_argument("--in", dest="inp", required=True, help="detach batch directory")
        p.add_argument("--labels", help="label directory; default is simulator contact")
        p.add_argument("--split-seed", type=int, default=0)
        p.add_argument("--variant", default="ftvac")
        p.add_argument("--verbose", action="store_true")

    t = sub.add_parser("train", parents=[common], help="train a forecaster")
    data_args(t)
    t.add_argument("--model", choices=("recurrent", "trees"), default="recurrent")
    t.add_argument("--h", type=float, default=30.0, help="horizon in ms (multiple of 6)")
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--batch-size", type=int, default=1, help="trials per optimisation step")
    t.add_argument("--rounds", type=int, default=50)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", parents=[common], help="test-split metrics grid")
    data_args(e)
    e.set_defaults(variant="all")
    e.add_argument("--model", choices=("recurrent", "trees", "all"), default="all")
    e.add_argument("--model-dir", required=True)
    e.add_argument("--h", type=float, default=30.0)
    e.add_argument("--th", type=float, action="append", help="threshold; repeatable")
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("ablate", parents=[common], help="forecast-horizon sweep")
    data_args(a)
    a.add_argument("--model", choices=("recurrent", "trees"), default="recurrent")
    a.add_argument("--h", default="30:330:60", help="start:stop:step or comma list, ms")
    a.add_argument("--epochs", type=int, default=100)
    a.add_argument("--rounds", type=int, default=50)
    a.set_defaults(func=cmd_ablate)

    pl = sub.add_parser("plot", parents=[common], help="SVG figure from a CSV output")
    pl.add_argument("--kind", required=True,
                    choices=("texture", "trace", "sliding", "palpation", "stft", "metrics", "ablation"))
    pl.add_argument("--in", dest="inp", required=True)
    pl.set_defaults(func=cmd_plot)

    c = sub.add_parser("calibrate", parents=[common], help="fit leak coefficients")
    c.add_argument("--install", action="store_true", help="also overwrite the packaged default")
    c.set_defaults(func=cmd_calibrate)
    return ap


SEEDED = ("simulate", "train", "ablate")


def main(argv=None):
    from .labels.core import LabelError
    from .learn.io import ModelFormatError
    from .learn.lstm import TrainingError
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.command in SEEDED and args.seed is None:
            raise ConfigError(f"{args.command} needs --seed or {ENV_PREFIX}SEED; there is no implicit seed")
        return args.func(args)
    except (IntegratorError, SteadyStateError, TrainingError, LabelError, FloatingPointError) as e:
        print(f"smartcup: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, InputError, ModelFormatError, FileNotFoundError, ValueError, KeyError) as e:
        print(f"smartcup: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
