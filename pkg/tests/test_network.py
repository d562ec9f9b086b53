import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smartcup import constants as C
from smartcup.sim import network as nw
from smartcup.sim.calibrate import TARGETS, chamber_vacuum
from smartcup.sim.network import (ConfigError, CupConfig, IntegratorError, ValveState, build_network,
                                  mass_flow, steady_state, steady_state_algebraic)
from smartcup.sim.scenarios import horizontal_leaks, vertical_leaks


def test_topology(cfg):
    net = build_network(cfg)
    counts = {k: len(net.edges_of(k)) for k in nw.EDGE_KINDS}
    assert counts == {"neck": 4, "lip-leak": 4, "wall-crosstalk": 4, "tube": 1}


def test_zero_volume_rejected(cfg):
    d = cfg.to_dict()
    d["v_chamber"] = 0.0
    with pytest.raises(ConfigError):
        CupConfig.from_dict(d)


def test_zero_crosstalk_is_valid(cfg):
    d = cfg.to_dict()
    d["g_cross"] = 0.0
    net = build_network(CupConfig.from_dict(d))
    P = steady_state_algebraic(net, [cfg.g_leak_single, 0, 0, 0])
    assert np.all(np.isfinite(P))


def test_unknown_config_key():
    with pytest.raises(ConfigError):
        CupConfig.from_dict({"v_chamber": 1e-6, "bogus": 1})


def test_mass_flow_examples():
    assert mass_flow(1e-6, 101325.0, 101325.0) == 0.0
    assert mass_flow(1e-6, 101325.0, 100325.0) == pytest.approx(1e-6 * math.sqrt(1000.0), rel=1e-12)


def test_mass_flow_linear_core_is_continuous():
    p_lin = 50.0
    below = mass_flow(1e-7, p_lin * (1 - 1e-12), 0.0, p_lin)
    above = mass_flow(1e-7, p_lin, 0.0, p_lin)
    assert below == pytest.approx(above, rel=1e-9)


@given(st.floats(0, 2e5), st.floats(0, 2e5), st.floats(1e-10, 1e-5), st.sampled_from([0.0, 50.0]))
def test_mass_flow_antisymmetric(a, b, g, p_lin):
    assert mass_flow(g, a, b, p_lin) == -mass_flow(g, b, a, p_lin)


@given(st.lists(st.floats(1.0e4, 1.0e5), min_size=5, max_size=5),
       st.lists(st.floats(0.0, 1e-7), min_size=4, max_size=4))
def test_mass_conservation_per_node(p_int, leaks):
    """dP/dt * V / (R T) equals the net edge inflow at every internal node."""
    net = build_network(CupConfig.default())
    P = np.array(p_int + [C.P_ATM, C.P_ATM - 60000.0])
    rates = net.rates(leaks, P)
    flows = net.edge_flows(leaks, P)
    for node in range(5):
        inflow = flows[net.e_to == node].sum() - flows[net.e_from == node].sum()
        stored = rates[node] * net.volume[node] / (C.R_AIR * C.T_GAS)
        assert abs(stored - inflow) < 1e-12


def test_sealed_cup_reaches_source(cfg):
    P, _ = steady_state(build_network(cfg), ValveState.full(), np.zeros(4))
    assert np.allclose(cfg.p_atm - P, cfg.max_vacuum, atol=1.0)


def test_closed_valve_reaches_ambient(cfg):
    net = build_network(cfg).with_pressure(np.r_[np.full(5, cfg.p_atm - 50000.0), cfg.p_atm, cfg.p_atm])
    P, _ = steady_state(net, ValveState.closed(), np.full(4, 1e-7))
    assert np.allclose(cfg.p_atm - P, 0.0, atol=1.0)


@pytest.mark.parametrize("k", range(4))
def test_vertical_leak_ordering(cfg, k):
    pv = chamber_vacuum(cfg, vertical_leaks(cfg, k))
    diag, n1, n2 = (k + 2) % 4, (k + 1) % 4, (k + 3) % 4
    assert np.argmin(pv) == k
    assert pv[k] < pv[n1] and pv[k] < pv[n2]
    assert pv[n1] == pytest.approx(pv[n2], abs=1.0)
    assert pv[n1] < pv[diag]
    assert 200.0 <= pv.max() - pv.min() <= 600.0


@pytest.mark.parametrize("k", range(4))
def test_horizontal_leak_diagonal(cfg, k):
    pv = chamber_vacuum(cfg, horizontal_leaks(cfg, k))
    assert np.argmin(pv) == (k + 2) % 4


def test_symmetric_leaks_equal(cfg):
    pv = chamber_vacuum(cfg, np.full(4, cfg.g_grit_600))
    assert pv.max() - pv.min() < C.SENSOR_RESOLUTION


def test_algebraic_matches_time_stepping(cfg):
    leaks = vertical_leaks(cfg, 1)
    P_alg = steady_state_algebraic(build_network(cfg), leaks)[:4]
    P_ts, _ = steady_state(build_network(cfg), ValveState.full(), leaks)
    assert np.allclose(P_alg, P_ts, atol=0.5)


def test_calibration_targets(cfg):
    d = chamber_vacuum(cfg, vertical_leaks(cfg, 0))
    assert d.max() - d.min() == pytest.approx(TARGETS["single_leak_differential"], rel=1e-3)
    assert chamber_vacuum(cfg, np.full(4, cfg.g_grit_600)).mean() == pytest.approx(
        TARGETS["grit_600_vacuum"], rel=1e-3)
    assert chamber_vacuum(cfg, np.full(4, cfg.g_grit_120)).mean() == pytest.approx(
        TARGETS["grit_120_vacuum"], rel=1e-3)


def test_stability_guard(cfg):
    d = cfg.to_dict()
    d["g_neck"] = 1e-3
    net = build_network(CupConfig.from_dict(d))
    with pytest.raises(IntegratorError):
        nw.run(net, ValveState.full(), np.zeros(4), 10)


def test_negative_leak_rejected(cfg):
    with pytest.raises(ValueError):
        nw.run(build_network(cfg), ValveState.full(), np.array([-1e-9, 0, 0, 0]), 10)


def test_step_matches_run(cfg):
    net = build_network(cfg)
    leaks = np.full(4, cfg.g_grit_600)
    a = nw.step(net, ValveState.full(1.0), leaks)
    b, _, _, _ = nw.run(net, ValveState.full(1.0), leaks, 1)
    assert np.array_equal(a.pressure, b.pressure)


def test_pwm_valve_wave():
    v = ValveState.pwm()
    t = np.arange(0, 1.0, 1e-4)
    u = v.command(t)
    assert u.mean() == pytest.approx(C.PWM_DUTY, abs=1e-3)


_BACKEND_SCRIPT = """
import json, numpy as np
from smartcup._accel import backend
from smartcup.sim.scenarios import Scenario, run_scenario
tr = run_scenario(Scenario("texture", {"grit": 400}, 1.5, "pwm"), 3)
print(json.dumps({"backend": backend(), "p": tr.p_true.tolist(), "m": tr.p_vac.tolist()}))
"""


def _run_backend(flag):
    env = dict(os.environ, SMARTCUP_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", _BACKEND_SCRIPT], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_backends_agree():
    a = _run_backend("1")
    b = _run_backend("0")
    assert b["backend"] == "numpy"
    pa, pb = np.array(a["p"]), np.array(b["p"])
    assert np.allclose(pa, pb, rtol=1e-9, atol=1e-6)
