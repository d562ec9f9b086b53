import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smartcup import constants as C
from smartcup.learn.metrics import first_crossing
from smartcup.sim.batch import N_CELLS, grid_cells, sample_detach_batch, trial_rng
from smartcup.sim.network import ConfigError
from smartcup.sim.render import render_seal_frame
from smartcup.sim.scenarios import (Scenario, SensorModel, grit_leak, peel_opening, run_scenario,
                                    twist_axis, DEFAULTS)


@pytest.fixture(scope="module")
def detach00():
    return run_scenario(Scenario("detach", {"phi": 0.0, "theta": 0.0, "omega": 30.0}), 0)


def test_unknown_kind():
    with pytest.raises(ConfigError):
        Scenario("swim").resolved()


def test_unknown_param():
    with pytest.raises(ConfigError):
        Scenario("texture", {"colour": "red"}).resolved()


def test_bad_grit():
    with pytest.raises(ConfigError):
        Scenario("texture", {"grit": 999}).resolved()


def test_scenario_roundtrip():
    s = Scenario("palpate", {"angle": 15.0, "preload": 0.5}, 3.0, "pwm")
    assert Scenario.from_dict(s.to_dict()) == s


def test_grit_leak_monotone(cfg):
    g = [grit_leak(cfg, x) for x in (120, 180, 240, 320, 400, 600)]
    assert all(a > b for a, b in zip(g, g[1:]))
    assert g[0] == pytest.approx(cfg.g_grit_120)
    assert g[-1] == pytest.approx(cfg.g_grit_600)


def test_trace_determinism():
    s = Scenario("texture", {"grit": 320}, 1.0, "pwm")
    a = run_scenario(s, 11)
    b = run_scenario(s, 11)
    for name in ("t", "p_vac", "ft", "contact"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = run_scenario(s, 12)
    assert not np.array_equal(a.p_vac, c.p_vac)


def test_sensor_quantization():
    tr = run_scenario(Scenario("texture", {"grit": 180}, 1.0, "full"), 5)
    counts = np.round(tr.p_vac / C.SENSOR_RESOLUTION)
    assert np.array_equal(counts * C.SENSOR_RESOLUTION, tr.p_vac)


@given(st.lists(st.floats(-1e5, 1e5), min_size=1, max_size=50), st.integers(0, 2**31))
def test_sensor_read_grid(values, seed):
    out = SensorModel().read(np.array(values), np.random.default_rng(seed))
    assert np.array_equal(np.round(out / C.SENSOR_RESOLUTION) * C.SENSOR_RESOLUTION, out)


def test_sample_times_rate():
    t = SensorModel().sample_times(1.0)
    assert np.allclose(np.diff(t), 1.0 / C.SENSOR_RATE)


def test_pwm_bracketed_by_valve_states(cfg):
    """Under PWM every chamber stays strictly between closed and open steady states."""
    from smartcup.sim.calibrate import chamber_vacuum
    tr = run_scenario(Scenario("texture", {"grit": 400}, 3.0, "pwm"), 0)
    open_ss = chamber_vacuum(cfg, np.full(4, grit_leak(cfg, 400)))
    late = tr.p_true[tr.t > 1.0]
    assert np.all(late > 0.0)
    assert np.all(late < open_ss[None, :])


@given(st.floats(0, 180), st.floats(0, 360))
def test_twist_axis_unit(phi, theta):
    assert np.linalg.norm(twist_axis(phi, theta)) == pytest.approx(1.0)


def test_grid_cells():
    assert np.array_equal(np.sort(grid_cells(N_CELLS)), np.arange(N_CELLS))
    counts = np.bincount(grid_cells(740), minlength=N_CELLS)
    assert counts.min() >= 6


def test_trial_rng_streams_independent():
    a = trial_rng(7, 0).random(3)
    b = trial_rng(7, 1).random(3)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, trial_rng(7, 0).random(3))


def test_batch_serial_equals_parallel():
    a = sample_detach_batch(3, 9, threads=1)
    b = sample_detach_batch(3, 9, threads=2)
    for x, y in zip(a, b):
        assert np.array_equal(x.p_vac, y.p_vac)
        assert np.array_equal(x.ft, y.ft)


def test_detach_traces_terminate_detached():
    for tr in sample_detach_batch(6, 3):
        assert tr.contact[-1].min() < 0.1


def test_detach_single_first_breaker(detach00):
    hit = first_crossing(detach00.contact, 0.5)
    assert hit is not None
    t, q = hit
    assert (detach00.contact[t] < 0.5).sum() == 1


def test_detach_diagonal_drops_first(detach00):
    """The chamber diagonal to the first-breaking quadrant is the first to lose 1 kPa."""
    _, q = first_crossing(detach00.contact, 0.5)
    p = detach00.p_true
    hold = p[detach00.t < DEFAULTS["detach"]["t_hold"]].mean(axis=0)
    drop = hold[None, :] - p
    first = np.array([np.argmax(drop[:, k] > 1000.0) for k in range(4)])
    assert np.argmin(first) == (q + 2) % 4


def test_detach_contact_monotone(detach00):
    c = detach00.contact
    assert np.all(np.diff(c, axis=0) <= 1e-12)


def test_peel_opening_monotone():
    p = Scenario("detach").resolved().params
    lift = np.linspace(0, 2 * p["lip_slack"] + p["gap_max"], 200)
    o = peel_opening(lift, p)
    assert np.all(np.diff(o) >= 0)
    assert o[0] == 0.0


def test_ft_noise_present_and_seeded():
    s = Scenario("detach", {"phi": 45.0, "theta": 90.0})
    a = run_scenario(s, 1)
    b = run_scenario(s, 2)
    assert a.ft.shape == (len(a.t), 6)
    assert not np.array_equal(a.ft, b.ft)


def test_render_full_ring():
    from smartcup.labels.core import quadrant_contact_label
    img = render_seal_frame(np.ones(4), noise=0.0, as_uint8=False)
    assert np.all(quadrant_contact_label(img, (63.5, 63.5), normalize=False) >= 0.95)


def test_render_dark_quadrant():
    from smartcup.sim.render import RING_RADIUS
    img = render_seal_frame(np.array([0.0, 1, 1, 1]), noise=0.0, as_uint8=False)
    # quadrant 1 spans 90..180 deg; skip the 5 deg blend zones
    a = np.radians(np.arange(100, 171))
    x = np.round(63.5 + RING_RADIUS * np.cos(a)).astype(int)
    y = np.round(63.5 + RING_RADIUS * np.sin(a)).astype(int)
    assert img[y, x].max() <= 0.1


def test_render_rejects_bad_contact():
    with pytest.raises(ConfigError):
        render_seal_frame(np.array([1.2, 1, 1, 1]))
    with pytest.raises(ConfigError):
        render_seal_frame(np.ones(4), center=(500, 10))
