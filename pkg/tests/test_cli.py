import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from smartcup.cli import main
from smartcup.learn.io import read_report
from smartcup.sim import io as sio


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as e:           # argparse usage errors
        return e.code


def run_proc(*argv, env=None, cwd=None):
    e = dict(os.environ)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "smartcup", *map(str, argv)], capture_output=True,
                          text=True, env=e, cwd=cwd)


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_texture_anchor(tmp_path):
    assert run("simulate", "--scenario", "texture", "--grit", 600, "--mode", "full", "--duration", 4,
               "--seed", 0, "--out", tmp_path / "sim") == 0
    assert run("featurize", "--kind", "texture", "--in", tmp_path / "sim", "--out", tmp_path / "f") == 0
    _, tab = sio.read_csv(tmp_path / "f" / "texture.csv", ["grit", "mean_pvac"])
    assert tab[0, 0] == 600
    assert tab[0, 2] == pytest.approx(74e3, rel=0.1)


def test_detach_batch_covers_grid(tmp_path):
    out = tmp_path / "b"
    assert run("simulate", "--scenario", "detach", "--batch", 108, "--no-frames", "--seed", 1, "--out", out) == 0
    trials = sorted(p for p in out.iterdir() if p.is_dir())
    assert len(trials) == 108
    cells = {json.loads((p / "trace.json").read_text())["cell"] for p in trials}
    assert len(cells) == 108
    assert len(list(out.rglob("manifest.json"))) == 1


def test_rerun_identical_hashes(tmp_path):
    for name in ("a", "b"):
        assert run("simulate", "--scenario", "detach", "--batch", 3, "--no-frames", "--seed", 5,
                   "--out", tmp_path / name) == 0
    assert manifest(tmp_path / "a")["outputs"] == manifest(tmp_path / "b")["outputs"]
    assert run("simulate", "--scenario", "detach", "--batch", 3, "--no-frames", "--seed", 6,
               "--out", tmp_path / "c") == 0
    assert manifest(tmp_path / "a")["outputs"] != manifest(tmp_path / "c")["outputs"]


def test_exit_codes(tmp_path):
    assert run("simulate", "--scenario", "swim", "--seed", 0, "--out", tmp_path / "x") == 2
    r = run_proc("simulate", "--scenario", "texture", "--out", tmp_path / "noseed", env={"SMARTCUP_SEED": ""})
    assert r.returncode == 2 and "seed" in r.stderr
    assert run("train", "--in", tmp_path / "missing", "--seed", 0, "--out", tmp_path / "y") == 2
    assert run("train", "--in", tmp_path, "--h", 31, "--seed", 0, "--out", tmp_path / "y") == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"plumbing": {}}')
    assert run("simulate", "--scenario", "texture", "--config", bad, "--seed", 0, "--out", tmp_path / "z") == 2
    stiff = tmp_path / "stiff.json"
    stiff.write_text('{"cup": {"g_neck": 1e-3}}')
    r = run_proc("simulate", "--scenario", "texture", "--grit", 600, "--duration", 0.5, "--config", stiff,
                 "--seed", 0, "--out", tmp_path / "w")
    assert r.returncode == 3, r.stderr
    assert "numerical" in r.stderr


def test_env_overrides(tmp_path):
    r = run_proc("simulate", "--scenario", "texture", "--grit", 240, "--duration", 0.5,
                 env={"SMARTCUP_OUT": str(tmp_path / "envout"), "SMARTCUP_SEED": "17"})
    assert r.returncode == 0, r.stderr
    m = manifest(tmp_path / "envout")
    assert m["seed"] == 17
    r = run_proc("simulate", "--scenario", "texture", "--grit", 240, "--duration", 0.5, "--seed", 4,
                 "--out", tmp_path / "flag", env={"SMARTCUP_SEED": "17"})
    assert manifest(tmp_path / "flag")["seed"] == 4


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    steps = [
        ("simulate", "--scenario", "detach", "--batch", 10, "--frame-rate", 60, "--seed", 2, "--out", root / "sim"),
        ("label", "--in", root / "sim", "--out", root / "lab"),
        ("train", "--in", root / "sim", "--labels", root / "lab", "--model", "trees", "--rounds", 5,
         "--seed", 2, "--out", root / "model"),
        ("train", "--in", root / "sim", "--labels", root / "lab", "--model", "recurrent", "--epochs", 1,
         "--variant", "vac", "--seed", 2, "--out", root / "model"),
        ("evaluate", "--in", root / "sim", "--labels", root / "lab", "--model", "all", "--model-dir",
         root / "model", "--out", root / "eval"),
    ]
    for s in steps:
        assert run(*s) == 0, s
    return root


def test_pipeline_closure(pipeline):
    lab = pipeline / "lab"
    trials = sorted(p.name for p in (pipeline / "sim").iterdir() if p.is_dir())
    assert sorted(p.name for p in lab.iterdir() if p.is_dir()) == trials
    h, y = sio.read_csv(lab / trials[0] / "labels.csv", ["t", "c1", "c2", "c3", "c4"])
    tr = sio.read_trace(pipeline / "sim" / trials[0] / "trace.csv")
    assert np.allclose(y[:, 0], tr.t)
    assert np.abs(y[:, 1:] - tr.contact).max() < 0.15
    rows = read_report(pipeline / "eval" / "metrics.csv")
    assert {(r["model"], r["variant"]) for r in rows} == {("recurrent", "vac"), ("trees", "ftvac")}
    assert all(np.isfinite(r["mse"]) for r in rows)
    assert manifest(pipeline / "eval")["inputs"]


def test_pipeline_manifests_one_per_dir(pipeline):
    for d in ("sim", "lab", "model", "eval"):
        assert len(list((pipeline / d).rglob("manifest.json"))) == 1


def test_ablate_rows_and_plot(pipeline, tmp_path):
    assert run("ablate", "--in", pipeline / "sim", "--model", "trees", "--rounds", 2, "--h", "30:330:60",
               "--seed", 0, "--out", tmp_path / "abl") == 0
    rows = read_report(tmp_path / "abl" / "ablation.csv")
    assert [r["h_ms"] for r in rows] == [30, 90, 150, 210, 270, 330]
    assert "mse_slope_per_60ms" in json.dumps(manifest(tmp_path / "abl"))
    assert run("plot", "--kind", "ablation", "--in", tmp_path / "abl" / "ablation.csv", "--out", tmp_path / "p") == 0
    assert (tmp_path / "p" / "ablation.svg").stat().st_size > 0


def test_sliding_plot_has_two_panels(tmp_path):
    assert run("simulate", "--scenario", "slide", "--surface", "ribbed", "--seed", 0, "--out", tmp_path / "s") == 0
    assert run("featurize", "--kind", "sliding", "--in", tmp_path / "s", "--out", tmp_path / "f") == 0
    assert run("plot", "--kind", "sliding", "--in", tmp_path / "f" / "profile.csv", "--out", tmp_path / "p") == 0
    svg = ET.parse(tmp_path / "p" / "sliding.svg").getroot()
    axes = [g for g in svg.iter("{http://www.w3.org/2000/svg}g") if (g.get("id") or "").startswith("axes_")]
    assert len(axes) == 2
    ev = read_report(tmp_path / "f" / "events.csv")
    assert any(e["kind"] == "texture-to-smooth" and e["pattern"] == "+-" for e in ev)
