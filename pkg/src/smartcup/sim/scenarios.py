"""Contact scenarios: texture grading, sliding, palpation and twist detachment.

A scenario expands into per-step lip-leak coefficients for the four chambers,
a valve command, ground-truth quadrant contact and (for detachment) the
commanded twist from which the wrist wrench is synthesised. ``run_scenario``
integrates the network and samples the sensors.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .. import constants as C
from . import network as nw
from .network import ConfigError, CupConfig, ValveState

GRITS = (120, 180, 240, 320, 400, 600)
KINDS = ("texture", "slide", "palpate", "detach")
VACUUM_MODES = ("full", "pwm")
SURFACES = ("wavy", "ribbed")

SCHED_DT = 1e-3          # leak schedules are built at 1 ms and held over 10 steps
N_LIP = 360              # lip discretisation for the geometric scenarios

# physics of the scenario models; all leak levels are multiples of the
# calibrated 600-grit coefficient so they follow a recalibration
DEFAULTS = {
    "texture": {"grit": 600, "t_vacuum": 0.5},
    "slide": {"surface": "wavy", "speed": 6.5e-3, "t_touch": 0.0, "plate_length": 0.035,
              "x_start": 0.0, "t_vacuum": 0.0,
              "texture_leak": {"wavy": 64.0, "ribbed": 96.0}, "smooth_leak": 0.05,
              "routing_ref": 96.0},
    "palpate": {"tip_radius": 11.0, "angle": 0.0, "preload": 1.0, "t_vacuum": 0.5,
                "seal_radius": 10.0, "seal_force": 0.8, "curvature_gap": 32.0,
                "force_gap": 4.0, "tilt_gap": 3.0, "smooth_leak": 0.05},
    "detach": {"phi": 0.0, "theta": 0.0, "omega": 30.0, "velocity": (0.0, 0.0, 0.01),
               "t_hold": 0.3, "lip_slack": 3.0e-3, "gap_max": 5.0e-3, "shear_gain": 0.3,
               "t_tail": 0.1, "smooth_leak": 0.05, "routing_ref": 16.0,
               "prepeel_start": 0.6, "prepeel_leak": 1.0,
               "k_trans": 300.0, "d_trans": 5.0, "k_rot": 0.5, "d_rot": 0.01,
               "ft_bias": (0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
               "drift_px": 4.0, "center": (63.5, 63.5)},
}
OPEN_LEAK = 250.0        # fully lifted lip, multiple of the 600-grit coefficient
FT_NOISE = (0.05, 0.05, 0.08, 2e-3, 2e-3, 1e-3)   # N, N m


@dataclass
class Scenario:
    kind: str
    params: dict = field(default_factory=dict)
    duration: float | None = None
    vacuum_mode: str = "full"

    def resolved(self) -> "Scenario":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        if self.vacuum_mode not in VACUUM_MODES:
            raise ConfigError(f"unknown vacuum mode {self.vacuum_mode!r}")
        p = dict(DEFAULTS[self.kind])
        unknown = set(self.params) - set(p)
        if unknown:
            raise ConfigError(f"unknown {self.kind} parameters: {sorted(unknown)}")
        p.update(self.params)
        if self.kind == "texture" and p["grit"] not in GRITS:
            raise ConfigError(f"unknown grit {p['grit']!r}; expected one of {GRITS}")
        if self.kind == "slide" and p["surface"] not in SURFACES:
            raise ConfigError(f"unknown surface {p['surface']!r}")
        dur = self.duration
        if dur is None:
            dur = {"texture": 4.0, "slide": 10.0, "palpate": 4.0}.get(self.kind)
        if dur is not None and dur <= 0:
            raise ConfigError("duration must be positive")
        return Scenario(self.kind, p, dur, self.vacuum_mode)

    def to_dict(self):
        return {"kind": self.kind, "params": _jsonable(self.params),
                "duration": self.duration, "vacuum_mode": self.vacuum_mode}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], dict(d.get("params", {})), d.get("duration"),
                   d.get("vacuum_mode", "full"))


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass
class Trace:
    t: np.ndarray            # (K,) s
    p_vac: np.ndarray        # (K, 4) Pa
    ft: np.ndarray           # (K, 6) N, N m
    contact: np.ndarray      # (K, 4)
    meta: dict = field(default_factory=dict)
    p_true: np.ndarray | None = None      # noise-free chamber vacuum at the samples
    frames: "FrameSeq | None" = None

    def __len__(self):
        return len(self.t)


@dataclass
class FrameSeq:
    t: np.ndarray            # (F,)
    images: np.ndarray       # (F, H, W) uint8
    centers: np.ndarray      # (F, 2) ground-truth (x, y) px
    orientation_t: np.ndarray
    orientation: np.ndarray  # rad, cup yaw at 10 Hz


@dataclass
class SensorModel:
    resolution: float = C.SENSOR_RESOLUTION
    noise_rms: float = C.SENSOR_NOISE_RMS
    rate: float = C.SENSOR_RATE

    def sample_times(self, duration):
        k = np.arange(int(math.floor(duration * self.rate + 1e-9)) + 1)
        return k / self.rate

    def read(self, p_vac_true, rng):
        x = np.asarray(p_vac_true, dtype=float)
        if self.noise_rms > 0:
            x = x + rng.normal(0.0, self.noise_rms, size=x.shape)
        counts = np.round(x / self.resolution)
        return counts * self.resolution


def grit_leak(config: CupConfig, grit):
    """Per-chamber leak coefficient for a sandpaper grit (log-linear in grit)."""
    if grit not in GRITS:
        raise ConfigError(f"unknown grit {grit!r}; expected one of {GRITS}")
    a, b = math.log(config.g_grit_120), math.log(config.g_grit_600)
    w = (grit - 120.0) / (600.0 - 120.0)
    return math.exp(a + w * (b - a))


def vertical_leaks(config: CupConfig, k, g=None):
    out = np.zeros(4)
    out[k] = config.g_leak_single if g is None else g
    return out


def horizontal_leaks(config: CupConfig, k, g=None):
    g = config.g_leak_single if g is None else g
    return g * nw.horizontal_routing(k, config.horizontal_split)


# ---------------------------------------------------------------- schedules

@dataclass
class Schedule:
    duration: float
    t_vacuum: float
    leaks: np.ndarray        # (n_coarse, 4) at SCHED_DT
    contact: callable        # t -> (len(t), 4)
    initial_sealed: bool = False
    twist: dict | None = None
    events: dict = field(default_factory=dict)


def _quadrant_index():
    """Chamber index owning each lip sample (by nearest chamber centre)."""
    alpha = np.arange(N_LIP) * (360.0 / N_LIP) + 0.5 * 360.0 / N_LIP
    centres = np.array(C.CHAMBER_AZIMUTH)
    d = np.abs((alpha[:, None] - centres[None, :] + 180.0) % 360.0 - 180.0)
    return np.radians(alpha), np.argmin(d, axis=1)


LIP_ALPHA, LIP_QUAD = _quadrant_index()


def _quadrant_mean(values):
    """Average lip samples per chamber quadrant; values (..., N_LIP)."""
    out = np.empty(values.shape[:-1] + (4,))
    for k in range(4):
        out[..., k] = values[..., LIP_QUAD == k].mean(axis=-1)
    return out


def _route(openings, ref, split):
    """Split quadrant openings between own (vertical) and diagonal (horizontal) chambers.

    The horizontal share grows as the total leak shrinks: a mostly sealed cup
    drives the remaining leak inward under the lip.
    """
    total = openings.sum(axis=-1, keepdims=True)
    eta = ref / (ref + total)
    diag = np.roll(openings, 2, axis=-1)
    horiz = (1.0 - split) * diag + split * openings
    return (1.0 - eta) * openings + eta * horiz


def _texture_schedule(s, cfg):
    p = s.params
    g = grit_leak(cfg, p["grit"])
    n = int(round(s.duration / SCHED_DT))
    leaks = np.full((n, 4), g)
    return Schedule(s.duration, p["t_vacuum"], leaks, lambda t: np.ones((len(t), 4)))


def _slide_schedule(s, cfg):
    p = s.params
    g6 = cfg.g_grit_600
    g_tex = p["texture_leak"][p["surface"]] * g6
    g_smooth = p["smooth_leak"] * g6
    g_open = OPEN_LEAK * g6
    R = cfg.lip_radius
    n = int(round(s.duration / SCHED_DT))
    t = np.arange(n) * SCHED_DT
    xc = p["x_start"] + p["speed"] * np.clip(t - p["t_touch"], 0.0, None)
    x = xc[:, None] + R * np.cos(LIP_ALPHA)[None, :]
    dens = np.where(x < 0.0, g_open, np.where(x < p["plate_length"], g_tex, g_smooth))
    dens[t < p["t_touch"]] = g_open
    openings = _quadrant_mean(dens)
    leaks = _route(openings, p["routing_ref"] * g6, cfg.horizontal_split)

    def contact(tq):
        xq = np.interp(tq, t, xc)[:, None] + R * np.cos(LIP_ALPHA)[None, :]
        on = (xq >= 0.0).astype(float)
        on[np.asarray(tq) < p["t_touch"]] = 0.0
        return _quadrant_mean(on)

    t_at = lambda x: p["t_touch"] + max(0.0, x - p["x_start"]) / p["speed"]
    events = {"half-contact": p["t_touch"], "full-texture": t_at(R),
              "texture-to-smooth": t_at(p["plate_length"] + R)}
    return Schedule(s.duration, p["t_vacuum"], leaks, contact, events=events)


def palpation_gaps(p, gap_unit=1.0):
    """Lip gap (units of saturation gap) on the left and right chamber pairs."""
    base = (p["curvature_gap"] * max(0.0, 1.0 / p["tip_radius"] - 1.0 / p["seal_radius"])
            + p["force_gap"] * max(0.0, p["seal_force"] - p["preload"]))
    tilt = p["tilt_gap"] * math.sin(math.radians(p["angle"]))
    # positive angle lifts the right side
    return max(0.0, base - tilt) * gap_unit, max(0.0, base + tilt) * gap_unit


def _palpate_schedule(s, cfg):
    p = s.params
    g6 = cfg.g_grit_600
    gl, gr = palpation_gaps(p)
    sat = lambda x: min(1.0, x) ** 2
    lk = np.empty(4)
    lk[list(C.LEFT)] = p["smooth_leak"] * g6 + OPEN_LEAK * g6 * sat(gl)
    lk[list(C.RIGHT)] = p["smooth_leak"] * g6 + OPEN_LEAK * g6 * sat(gr)
    n = int(round(s.duration / SCHED_DT))
    c = np.empty(4)
    c[list(C.LEFT)] = max(0.0, 1.0 - gl)
    c[list(C.RIGHT)] = max(0.0, 1.0 - gr)
    return Schedule(s.duration, p["t_vacuum"], np.tile(lk, (n, 1)), lambda t: np.tile(c, (len(t), 1)))


def twist_axis(phi_deg, theta_deg):
    """Unit rotation axis. ``phi`` is the elevation out of the contact plane
    (0 and 180 in-plane, 90 along the cup axis); ``theta`` is the in-plane
    azimuth, zero when the lift lands on the centre of quadrant 1."""
    phi = math.radians(phi_deg)
    az = math.radians(theta_deg + C.CHAMBER_AZIMUTH[0] - 90.0)
    return np.array([math.cos(phi) * math.cos(az), math.cos(phi) * math.sin(az), math.sin(phi)])


def detach_kinematics(p, R, t):
    """Lip lift (m) per lip sample, rotation angle and translation for times ``t``."""
    u = twist_axis(p["phi"], p["theta"])
    v = np.asarray(p["velocity"], dtype=float)
    tau = np.clip(np.asarray(t) - p["t_hold"], 0.0, None)
    beta = math.radians(p["omega"]) * tau
    az = math.atan2(u[1], u[0])
    tilt = math.hypot(u[0], u[1])
    # the cup rolls about its pressed edge, so rotation never pushes the lip down
    rot = R * tilt * beta[:, None] * (1.0 + np.sin(LIP_ALPHA[None, :] - az))
    vxy = math.hypot(v[0], v[1])
    along = v[0] * np.cos(LIP_ALPHA) + v[1] * np.sin(LIP_ALPHA)
    shear = p["shear_gain"] * tau[:, None] * (vxy - along[None, :])
    lift = v[2] * tau[:, None] + rot + shear
    return lift, beta, tau, u, v


def peel_opening(lift, p):
    """Lip opening (multiples of the 600-grit coefficient) from local lift.

    The stretched lip starts to leak slightly before it separates; once the
    lift exceeds the slack the opening grows quadratically to fully open.
    """
    slack, gmax = p["lip_slack"], p["gap_max"]
    th = p["prepeel_start"] * slack
    pre = np.clip((lift - th) / (slack - th), 0.0, 1.0) ** 2 * p["prepeel_leak"]
    gap = np.clip((lift - slack) / gmax, 0.0, 1.0)
    return pre + OPEN_LEAK * gap ** 2


def _detach_schedule(s, cfg):
    p = s.params
    g6 = cfg.g_grit_600
    R = cfg.lip_radius
    slack, gmax = p["lip_slack"], p["gap_max"]
    # run until every quadrant is fully open, then a short tail
    vz = max(p["velocity"][2], 1e-4)
    t_end = p["t_hold"] + (slack + gmax) / vz + p["t_tail"]
    if s.duration is not None:
        t_end = s.duration
    n = int(round(t_end / SCHED_DT))
    t = np.arange(n) * SCHED_DT
    lift, *_ = detach_kinematics(p, R, t)
    openings = _quadrant_mean(peel_opening(lift, p)) * g6 + p["smooth_leak"] * g6
    leaks = _route(openings, p["routing_ref"] * g6, cfg.horizontal_split)

    def contact(tq):
        lq, *_ = detach_kinematics(p, R, np.asarray(tq, dtype=float))
        g = np.clip(lq - slack, 0.0, None) / gmax
        worst = np.empty((len(tq), 4))
        for k in range(4):
            worst[:, k] = g[:, LIP_QUAD == k].max(axis=1)
        return np.clip(1.0 - worst, 0.0, 1.0)

    return Schedule(t_end, 0.0, leaks, contact, initial_sealed=True, twist=p)


_SCHEDULERS = {"texture": _texture_schedule, "slide": _slide_schedule,
               "palpate": _palpate_schedule, "detach": _detach_schedule}


def expand(scenario: Scenario, config: CupConfig) -> Schedule:
    s = scenario.resolved()
    return _SCHEDULERS[s.kind](s, config)


# ---------------------------------------------------------------- wrench

def synth_wrench(sched: Schedule, cfg: CupConfig, t, p_vac_true, contact, preload=0.5):
    """Wrist force/torque in the cup frame. Suction acts at the cup centre; a
    linear spring-damper resists the commanded twist while the lip holds."""
    suction = p_vac_true.mean(axis=1) * cfg.suction_area
    ft = np.zeros((len(t), 6))
    if sched.twist is None:
        ft[:, 2] = preload + suction
        return ft
    p = sched.twist
    _, beta, tau, u, v = detach_kinematics(p, cfg.lip_radius, t)
    held = contact.mean(axis=1)
    moving = (tau > 0).astype(float)
    disp = tau[:, None] * v[None, :]
    f = -(p["k_trans"] * disp + p["d_trans"] * moving[:, None] * v[None, :]) * held[:, None]
    f[:, 2] -= suction
    rot = beta[:, None] * u[None, :]
    w = math.radians(p["omega"])
    m = -(p["k_rot"] * rot + p["d_rot"] * w * moving[:, None] * u[None, :]) * held[:, None]
    ft[:, :3] = f
    ft[:, 3:] = m
    return ft + np.asarray(p["ft_bias"], dtype=float)[None, :]


# ---------------------------------------------------------------- run

def command_wave(sched: Schedule, mode, n_steps, dt=C.DT):
    t = np.arange(n_steps) * dt
    on = t >= sched.t_vacuum - 1e-12
    if mode == "full":
        return on.astype(float)
    phase = np.mod((t - sched.t_vacuum) * C.PWM_FREQ, 1.0)
    return (on & (phase < C.PWM_DUTY)).astype(float)


def simulate_schedule(sched: Schedule, mode, config: CupConfig, sensor: SensorModel, dt=C.DT):
    """Integrate and return (sample times, true chamber vacuum (K,4), open fraction)."""
    net = nw.build_network(config)
    n_steps = int(round(sched.duration / dt))
    reps = int(round(SCHED_DT / dt))
    leaks = np.repeat(sched.leaks, reps, axis=0)
    if len(leaks) < n_steps:
        leaks = np.vstack([leaks, np.repeat(leaks[-1:], n_steps - len(leaks), axis=0)])
    leaks = leaks[:n_steps]
    u = command_wave(sched, mode, n_steps, dt)
    t_s = sensor.sample_times(sched.duration)
    rec_idx = np.minimum(np.round(t_s / dt).astype(np.int64), n_steps)
    valve = ValveState(duty=1.0 if mode == "full" else C.PWM_DUTY)
    if sched.initial_sealed:
        P = net.pressure.copy()
        P[:5] = net.source_pressure(1.0)
        net = net.with_pressure(P)
        valve = dataclasses.replace(valve, open_fraction=1.0)
    _, _, rec, rec_of = nw.run(net, valve, leaks, n_steps, dt=dt, record_idx=rec_idx, u=u)
    p_true = config.p_atm - rec[:, :4]
    return t_s, p_true, rec_of


def run_scenario(scenario: Scenario, seed, config: CupConfig | None = None,
                 sensor: SensorModel | None = None, frames=False, frame_rate=240.0, rng=None):
    """Simulate one scenario and return a sampled :class:`Trace`."""
    config = config or CupConfig.default()
    sensor = sensor or SensorModel()
    s = scenario.resolved()
    sched = _SCHEDULERS[s.kind](s, config)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
    t_s, p_true, _ = simulate_schedule(sched, s.vacuum_mode, config, sensor)
    p_meas = sensor.read(p_true, rng)
    contact = np.clip(sched.contact(t_s), 0.0, 1.0)
    preload = s.params.get("preload", 0.5)
    ft_true = synth_wrench(sched, config, t_s, p_true, contact, preload=preload)
    ft = _sample_ft(t_s, ft_true, rng, sensor.noise_rms > 0)
    meta = {"scenario": s.to_dict(), "seed": _jsonable(seed)}
    if sched.events:
        meta["events"] = dict(sched.events)
    tr = Trace(t_s, p_meas, ft, contact, meta, p_true=p_true)
    if frames:
        from .render import render_detach_frames
        tr.frames = render_detach_frames(sched, config, frame_rate, rng,
                                         noise=sensor.noise_rms > 0)
    return tr


def _sample_ft(t_s, ft_true, rng, noisy):
    """Load cell at its own rate, linearly interpolated onto the pressure timeline."""
    t_ft = np.arange(int(math.floor(t_s[-1] * C.FT_RATE)) + 2) / C.FT_RATE
    raw = np.column_stack([np.interp(t_ft, t_s, ft_true[:, j]) for j in range(6)])
    if noisy:
        raw = raw + rng.normal(0.0, 1.0, size=raw.shape) * np.asarray(FT_NOISE)[None, :]
    return np.column_stack([np.interp(t_s, t_ft, raw[:, j]) for j in range(6)])
