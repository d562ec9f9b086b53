import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smartcup import constants as C
from smartcup.features import exploration as ex
from smartcup.features.spectral import WINDOW, carrier_bin, dft_mag_at, hamming, stft_30, stft_features
from smartcup.sim.scenarios import Scenario, SensorModel, run_scenario


def direct_dft(x, k, scale=None):
    """O(N^2) oracle: every bin by explicit summation, then pick ``k``."""
    n = len(x)
    m = np.arange(n)
    bins = np.array([np.sum(x * np.exp(-2j * np.pi * kk * m / n)) for kk in range(n)])
    return np.abs(bins[k]) * 2.0 / (n if scale is None else scale)


def direct_stft(x, k=15):
    w = hamming(len(x))
    return direct_dft(x * w, k, w.sum())


def test_carrier_bin():
    assert carrier_bin(WINDOW) == 15
    assert 15 * C.SENSOR_RATE / WINDOW == pytest.approx(30.12, abs=0.01)


@given(arrays(np.float64, WINDOW, elements=st.floats(-1e5, 1e5)))
def test_dft_matches_direct_sum(x):
    assert dft_mag_at(x) == pytest.approx(direct_dft(x, 15), rel=1e-9, abs=1e-9 * (np.abs(x).max() + 1))
    _, v = stft_30(x)
    assert v[0] == pytest.approx(direct_stft(x), rel=1e-9, abs=1e-9 * (np.abs(x).max() + 1))


def test_constant_window_zero():
    assert dft_mag_at(np.full(WINDOW, 5e4)) == pytest.approx(0.0, abs=1e-8)
    _, v = stft_30(np.full(300, 7.0))
    assert np.allclose(v, 0.0, atol=1e-10)


def test_bin_centred_sine_amplitude():
    n = np.arange(WINDOW)
    x = 100.0 * np.sin(2 * np.pi * 30.12 * n / C.SENSOR_RATE)
    assert dft_mag_at(x) == pytest.approx(100.0, rel=0.02)
    _, v = stft_30(x)
    assert v[0] == pytest.approx(100.0, rel=0.02)


def test_stft_matches_oracle_on_windows():
    rng = np.random.default_rng(0)
    x = rng.normal(size=400)
    idx, v = stft_30(x, hop=7)
    half = (WINDOW - 1) // 2
    assert idx[0] == half and np.all(np.diff(idx) == 7)
    for c, val in zip(idx, v):
        assert val == pytest.approx(direct_stft(x[c - half:c - half + WINDOW]), rel=1e-9)


def test_simulated_trace_window_matches_oracle():
    tr = run_scenario(Scenario("texture", {"grit": 400}, 2.0, "pwm"), 0)
    seg = tr.p_vac[200:200 + WINDOW, 0]
    _, v = stft_30(seg)
    assert v[0] == pytest.approx(direct_stft(seg), rel=1e-9)


def test_single_window_centre():
    idx, v = stft_30(np.random.default_rng(1).normal(size=WINDOW))
    assert list(idx) == [41]
    assert len(v) == 1


def test_short_trace_rejected():
    with pytest.raises(ValueError):
        stft_30(np.zeros(WINDOW - 1))


def test_stft_features_records():
    t = np.arange(200) / C.SENSOR_RATE
    feats = stft_features(np.zeros((200, 4)), t, hop=10)
    assert {f.channel for f in feats} == {1, 2, 3, 4}
    assert feats[0].window_start == 0.0


def test_amplitude_step_rises_monotonically():
    n = np.arange(600)
    amp = np.where(n < 300, 50.0, 100.0)
    x = amp * np.sin(2 * np.pi * 30.12 * n / C.SENSOR_RATE)
    idx, v = stft_30(x)
    span = (idx - 41 < 300) & (idx + 41 >= 300)
    seg = v[span]
    assert np.all(np.diff(seg) > 0)


@given(st.floats(0.01, 100.0))
def test_scale_equivariance(s):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(250, 4)) * 100
    _, a = stft_30(x)
    _, b = stft_30(s * x)
    assert np.allclose(b, s * a, rtol=1e-12, atol=0)


def test_detect_constant_empty():
    assert ex.detect_transition(np.ones(500)) == []


def test_detect_single_step():
    x = np.r_[np.zeros(400), np.ones(400)]
    t = np.arange(800) / C.SENSOR_RATE
    ev = ex.detect_transition(x, t)
    assert len(ev) == 1
    assert abs(ev[0].time - t[400]) < ex.TRANSITION_SPAN
    assert ev[0].magnitude == pytest.approx(1.0)


def test_detect_half_range_steps_strict():
    x = np.r_[np.zeros(400), np.full(400, 0.5), np.ones(400)]
    assert ex.detect_transition(x) == []


@given(st.floats(1e-3, 1e3))
def test_detect_scale_invariant(s):
    rng = np.random.default_rng(4)
    x = np.r_[np.zeros(300), np.ones(300)] + 0.05 * rng.normal(size=600)
    a = ex.detect_transition(x)
    b = ex.detect_transition(s * x)
    assert [e.time for e in a] == [e.time for e in b]


def _profile(diff):
    t = np.arange(len(diff)) / C.SENSOR_RATE
    return ex.SlidingProfile(t, np.zeros_like(diff), diff, np.zeros((len(diff), 4)))


def test_excursion_patterns():
    d = np.r_[np.zeros(100), np.full(50, 10.0), np.full(50, -10.0), np.zeros(100)]
    prof = _profile(d)
    ev = ex.Transition(1.2, 1.0, 0.6, 1.8)
    assert ex.excursion_pattern(prof, ev, 5.0) == "+-"
    assert ex.excursion_pattern(_profile(-d), ev, 5.0) == "-+"
    assert ex.excursion_pattern(_profile(np.zeros(300)), ev, 5.0) == "0"


def test_sliding_rejects_full_vacuum():
    tr = run_scenario(Scenario("texture", {"grit": 600}, 1.0, "full"), 0)
    with pytest.raises(ValueError):
        ex.sliding_profile(tr)


def test_sliding_ch_diff_scales():
    tr = run_scenario(Scenario("slide", {"surface": "ribbed"}, 3.0, "pwm"), 0)
    a = ex.sliding_profile(tr, hop=5)
    tr.p_vac = tr.p_vac * 3.0
    b = ex.sliding_profile(tr, hop=5)
    assert np.allclose(b.ch_diff, 3.0 * a.ch_diff, rtol=1e-12, atol=1e-9)
    assert [e.time for e in a.events] == [e.time for e in b.events]


def _curves():
    angles = np.array(ex.SWEEP_ANGLES, dtype=float)
    base = 500.0 * np.exp(-(angles / 12.0) ** 2)
    tilt = np.clip(angles / 30.0, -1, 1)
    left = base * (1 + 0.5 * tilt)
    right = base * (1 - 0.5 * tilt)
    return angles, np.column_stack([left, left, right, right]) + 5.0


def test_normal_from_curves_basic():
    angles, curves = _curves()
    res = ex.normal_from_curves(angles, curves)
    assert res.best_angle == 0.0
    assert res.classification == "GOOD"


@pytest.fixture(scope="module")
def sweep_curves():
    sweep = [(a, run_scenario(Scenario("palpate", {"angle": float(a)}, None, "pwm"), 0))
             for a in ex.SWEEP_ANGLES]
    res = ex.normal_seek(sweep)
    return res.angles, res.curves


@given(scale=st.floats(0.01, 100.0), offsets=arrays(np.float64, 4, elements=st.floats(-1.0, 1.0)))
def test_normal_seek_argmin_stable(sweep_curves, scale, offsets):
    angles, curves = sweep_curves
    best = ex.normal_from_curves(angles, curves).best_angle
    assert best == 0.0
    assert ex.normal_from_curves(angles, scale * curves).best_angle == best
    span = curves.max() - curves.min()
    shifted = curves + 0.0099 * span * offsets[None, :]
    assert ex.normal_from_curves(angles, shifted).best_angle == best


def test_normal_seek_missing_angles():
    tr = np.ones(4)
    with pytest.raises(ValueError):
        ex.normal_seek([(0.0, tr), (15.0, tr)])


def test_palpation_mirror_symmetry():
    sensor = SensorModel(noise_rms=0.0)
    a = ex.steady_dft(run_scenario(Scenario("palpate", {"angle": 15.0}, None, "pwm"), 0, sensor=sensor))
    b = ex.steady_dft(run_scenario(Scenario("palpate", {"angle": -15.0}, None, "pwm"), 0, sensor=sensor))
    assert np.allclose(a[list(C.LEFT)], b[list(C.RIGHT)][::-1], rtol=1e-12)
    assert np.allclose(a[list(C.RIGHT)], b[list(C.LEFT)][::-1], rtol=1e-12)
