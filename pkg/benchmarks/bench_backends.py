"""Compare the numba kernels with the pure-numpy fallback.

The backend is fixed at import time, so each one is timed in its own
interpreter. Run from the repository root:

    python3 benchmarks/bench_backends.py [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, time
import numpy as np
from smartcup._accel import backend
from smartcup.sim import network as nw
from smartcup.sim.scenarios import Scenario, run_scenario
from smartcup.learn.trees import histograms

def best(fn, repeat):
    fn()                      # compile / warm caches
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t)
    return min(ts)

repeat = {repeat}
net = nw.build_network()
valve = nw.ValveState.pwm()
leaks = np.full(4, net.config.g_grit_600)
n = 20_000                    # 2 s of RK4 at 1e-4 s
res = {{"backend": backend()}}
res["rk4_2s"] = best(lambda: nw.run(net, valve, leaks, n), repeat)
res["texture_4s"] = best(lambda: run_scenario(Scenario("texture", {{"grit": 600}}, 4.0, "pwm"), 0), repeat)
rng = np.random.default_rng(0)
bins = rng.integers(0, 64, size=(50_000, 100)).astype(np.int32)
grad = rng.normal(size=50_000)
node = rng.integers(0, 16, size=50_000).astype(np.int64)
res["tree_hist"] = best(lambda: histograms(bins, grad, node, 16, 64), repeat)
print(json.dumps(res))
"""


def run_backend(flag, repeat):
    env = dict(os.environ, SMARTCUP_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    nb = run_backend("1", args.repeat)
    npy = run_backend("0", args.repeat)
    print(f"{'kernel':12s} {'numba (s)':>10s} {'numpy (s)':>10s} {'speedup':>8s}")
    for k in ("rk4_2s", "texture_4s", "tree_hist"):
        print(f"{k:12s} {nb[k]:10.4f} {npy[k]:10.4f} {npy[k] / nb[k]:7.1f}x")
    if nb["backend"] != "numba":
        print("note: numba not importable; both rows ran the numpy path")


if __name__ == "__main__":
    main()
