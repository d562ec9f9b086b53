"""Lumped gas network of the four-chamber suction cup.

Seven nodes: four chambers, the plenum behind the necks, the ambient
atmosphere and the vacuum source. Every edge carries turbulent orifice flow
``g * sign(dp) * sqrt(|dp|)``; chambers and plenum are isothermal ideal-gas
capacitances, ambient and source are boundary pressures.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .. import constants as C
from . import kernels

NODE_LABELS = ("chamber1", "chamber2", "chamber3", "chamber4", "plenum", "ambient", "source")
PLENUM = 4
AMBIENT = kernels.AMBIENT
SOURCE = kernels.SOURCE

EDGE_KINDS = ("neck", "wall-crosstalk", "lip-leak", "tube")

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "data" / "default_config.json"


class ConfigError(ValueError):
    """Invalid cup or scenario configuration."""


class IntegratorError(RuntimeError):
    """A single step changed some pressure by more than the allowed bound."""


class SteadyStateError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


@dataclass
class CupConfig:
    """Geometry and flow coefficients of the cup (SI units, g in kg/s/Pa^0.5)."""

    v_chamber: float = 4.0e-6
    v_plenum: float = 4.0e-6
    g_neck: float = 2.0e-7
    g_cross: float = 5.0e-8
    g_tube: float = 3.4e-7
    g_leak_single: float = 1.0e-8
    g_grit_120: float = 2.0e-8
    g_grit_600: float = 5.0e-9
    horizontal_split: float = 0.15
    p_lin: float = 50.0
    ejector_threshold: float = 0.4   # valve opening below which the ejector makes no vacuum
    max_vacuum: float = C.MAX_VACUUM
    p_atm: float = C.P_ATM
    lip_radius: float = 0.010        # m, radius of the sealing ring
    outer_diameter: float = 0.024    # m, sets the suction area

    def validate(self):
        for name in ("v_chamber", "v_plenum"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("g_neck", "g_tube", "g_leak_single", "g_grit_120", "g_grit_600"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.g_cross < 0:
            raise ConfigError("g_cross must be >= 0")
        if not 0.0 <= self.horizontal_split <= 1.0:
            raise ConfigError("horizontal_split must lie in [0, 1]")
        if not 0.0 < self.max_vacuum < self.p_atm:
            raise ConfigError("max_vacuum must lie in (0, p_atm)")
        if not 0.0 <= self.ejector_threshold < 1.0:
            raise ConfigError("ejector_threshold must lie in [0, 1)")
        if self.p_lin <= 0:
            raise ConfigError("p_lin must be positive")
        return self

    @property
    def suction_area(self):
        return math.pi * (0.5 * self.outer_diameter) ** 2

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown CupConfig keys: {sorted(extra)}")
        return cls(**d).validate()

    @classmethod
    def default(cls):
        if DEFAULT_CONFIG_PATH.exists():
            doc = json.loads(DEFAULT_CONFIG_PATH.read_text())
            return cls.from_dict(doc.get("cup", doc))
        return cls()


@dataclass
class ValveState:
    """PWM solenoid with first-order lag of the open fraction."""

    duty: float = 1.0
    frequency: float = C.PWM_FREQ
    open_fraction: float = 0.0
    t_on: float = C.VALVE_T_ON
    t_off: float = C.VALVE_T_OFF

    def command(self, t):
        """Square-wave command (0/1) at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        if self.duty >= 1.0:
            return np.ones_like(t)
        if self.duty <= 0.0:
            return np.zeros_like(t)
        phase = np.mod(t * self.frequency, 1.0)
        return (phase < self.duty).astype(float)

    def advance(self, t, dt):
        cmd = float(self.command(t))
        tau = self.t_on if cmd > self.open_fraction else self.t_off
        of = cmd + (self.open_fraction - cmd) * math.exp(-dt / tau)
        return dataclasses.replace(self, open_fraction=of)

    @classmethod
    def full(cls, open_fraction=1.0):
        return cls(duty=1.0, open_fraction=open_fraction)

    @classmethod
    def closed(cls):
        return cls(duty=0.0, open_fraction=0.0)

    @classmethod
    def pwm(cls, duty=C.PWM_DUTY, frequency=C.PWM_FREQ):
        return cls(duty=duty, frequency=frequency)


@dataclass
class CupNetwork:
    config: CupConfig
    pressure: np.ndarray                 # (7,) absolute, Pa
    volume: np.ndarray                   # (7,) m^3, inf on boundary nodes
    e_from: np.ndarray
    e_to: np.ndarray
    e_g: np.ndarray
    e_kind: np.ndarray                   # index into EDGE_KINDS
    e_leak: np.ndarray                   # chamber index for lip-leak edges, else -1
    labels: tuple = NODE_LABELS
    t: float = 0.0

    @property
    def inv_cap(self):
        """R T / V per node (zero on boundaries)."""
        with np.errstate(divide="ignore"):
            out = C.R_AIR * C.T_GAS / self.volume
        out[~np.isfinite(self.volume)] = 0.0
        return out

    @property
    def p_vac(self):
        return self.config.p_atm - self.pressure[:4]

    def edges_of(self, kind):
        return np.flatnonzero(self.e_kind == EDGE_KINDS.index(kind))

    def with_pressure(self, P, t=None):
        return dataclasses.replace(self, pressure=np.array(P, dtype=float),
                                   t=self.t if t is None else t)

    def kernel_args(self):
        return (self.e_from, self.e_to, self.e_g, self.e_leak, self.inv_cap, self.config.p_lin)

    def source_pressure(self, open_fraction):
        lvl = kernels.source_level(float(open_fraction), self.config.ejector_threshold)
        return self.config.p_atm - self.config.max_vacuum * lvl

    def edge_flows(self, leaks, P=None):
        """Signed mass flow (kg/s) along every edge, positive from -> to."""
        P = self.pressure if P is None else P
        leaks = np.asarray(leaks, dtype=float)
        g = np.where(self.e_leak >= 0, leaks[np.maximum(self.e_leak, 0)], self.e_g)
        return np.array([mass_flow(gi, P[a], P[b], self.config.p_lin)
                         for gi, a, b in zip(g, self.e_from, self.e_to)])

    def rates(self, leaks, P=None):
        """dP/dt per node for the given state."""
        P = self.pressure if P is None else np.asarray(P, dtype=float)
        return kernels.node_rates(np.array(P, dtype=float), np.asarray(leaks, dtype=float),
                                  *self.kernel_args())


def mass_flow(g, p_from, p_to, p_lin=0.0):
    """Orifice mass flow (kg/s) from ``p_from`` to ``p_to``.

    Below ``p_lin`` the law is continued linearly through zero, which keeps the
    explicit integrator stable near equilibrium; ``p_lin=0`` gives the bare
    square-root law.
    """
    dp = np.subtract(p_from, p_to, dtype=float)
    a = np.abs(dp)
    if p_lin <= 0:
        return g * np.sign(dp) * np.sqrt(a)
    lin = g * dp / math.sqrt(p_lin)
    return np.where(a >= p_lin, g * np.sign(dp) * np.sqrt(a), lin) * 1.0


def build_network(config: CupConfig | None = None, cross_override=None) -> CupNetwork:
    """Assemble the 7-node graph: 4 necks, 4 lip leaks, 4 wall crosstalks, 1 tube.

    ``cross_override`` maps (i, j) chamber pairs to a crosstalk coefficient; a
    pair that is not adjacent adds an extra crosstalk edge.
    """
    config = (config or CupConfig.default()).validate()
    vol = np.array([config.v_chamber] * 4 + [config.v_plenum, np.inf, np.inf])
    frm, to, g, kind, leak = [], [], [], [], []

    def add(a, b, gg, k, li=-1):
        frm.append(a); to.append(b); g.append(gg); kind.append(EDGE_KINDS.index(k)); leak.append(li)

    for i in range(4):
        add(i, PLENUM, config.g_neck, "neck")
    for i in range(4):
        add(AMBIENT, i, 0.0, "lip-leak", i)
    cross = {}
    for i in range(4):
        cross[(i, (i + 1) % 4)] = config.g_cross
    for (i, j), gg in (cross_override or {}).items():
        key = (i, j) if (i, j) in cross else ((j, i) if (j, i) in cross else (i, j))
        cross[key] = gg
    for (i, j), gg in cross.items():
        if gg < 0:
            raise ConfigError("crosstalk coefficient must be >= 0")
        add(i, j, gg, "wall-crosstalk")
    add(PLENUM, SOURCE, config.g_tube, "tube")

    P = np.full(7, config.p_atm)
    net = CupNetwork(config=config, pressure=P, volume=vol,
                     e_from=np.array(frm, dtype=np.int64), e_to=np.array(to, dtype=np.int64),
                     e_g=np.array(g, dtype=float), e_kind=np.array(kind, dtype=np.int64),
                     e_leak=np.array(leak, dtype=np.int64))
    _check_connected(net)
    return net


def _check_connected(net):
    # lip edges may be closed, so connectivity is judged on the permanent edges
    # plus the lip edges themselves (they exist even at zero opening)
    adj = {i: set() for i in range(7)}
    for a, b, gg, k in zip(net.e_from, net.e_to, net.e_g, net.e_kind):
        if gg > 0 or EDGE_KINDS[k] == "lip-leak":
            adj[a].add(b)
            adj[b].add(a)
    seen, stack = {SOURCE}, [SOURCE]
    while stack:
        n = stack.pop()
        for m in adj[n] - seen:
            seen.add(m)
            stack.append(m)
    if len(seen) != 7:
        missing = [NODE_LABELS[i] for i in range(7) if i not in seen]
        raise ConfigError(f"network is disconnected; unreachable: {missing}")


def _check_leaks(leaks):
    leaks = np.asarray(leaks, dtype=float)
    if leaks.shape[-1] != 4 or np.any(leaks < 0):
        raise ValueError("leaks must be 4 non-negative coefficients per step")
    return leaks


def run(net: CupNetwork, valve: ValveState, leaks, n_steps, dt=C.DT, record_idx=None,
        u=None, max_dp=5000.0):
    """Integrate ``n_steps`` RK4 steps. Returns (final net, final valve, records, open fractions).

    ``leaks`` is (4,) constant or (n_steps, 4). ``u`` overrides the valve
    command schedule (defaults to the valve's own PWM wave from ``net.t``).
    """
    leaks = _check_leaks(leaks)
    if leaks.ndim == 1:
        leaks = np.broadcast_to(leaks, (n_steps, 4))
    leaks = np.ascontiguousarray(leaks)
    if u is None:
        u = valve.command(net.t + dt * np.arange(n_steps))
    u = np.ascontiguousarray(u, dtype=float)
    rho = stability_number(net, leaks.max(axis=0), dt)
    if rho > RK4_LIMIT:
        raise IntegratorError(
            f"step too large for these conductances (|lambda| dt = {rho:.2f} > {RK4_LIMIT})")
    rec_idx = np.zeros(0, dtype=np.int64) if record_idx is None else np.asarray(record_idx, dtype=np.int64)
    P0 = net.pressure.copy()
    P0[AMBIENT] = net.config.p_atm
    P0[SOURCE] = net.source_pressure(valve.open_fraction)
    rec, rec_of, P, of, err = kernels.integrate(
        P0, float(valve.open_fraction), u, leaks, rec_idx, *net.kernel_args(),
        net.config.p_atm, net.config.max_vacuum, net.config.ejector_threshold, valve.t_on, valve.t_off, dt, max_dp)
    if err >= 0:
        raise IntegratorError(
            f"pressure change above {max_dp:.0f} Pa in one step at t={net.t + err * dt:.4f} s; "
            "step too large for these conductances")
    out = net.with_pressure(P, t=net.t + n_steps * dt)
    return out, dataclasses.replace(valve, open_fraction=of), rec, rec_of


RK4_LIMIT = 2.78   # real-axis stability bound of classical RK4


def stability_number(net: CupNetwork, leaks, dt=C.DT):
    """Spectral radius times ``dt`` of the network linearised in its laminar core."""
    leaks = np.asarray(leaks, dtype=float)
    g = np.where(net.e_leak >= 0, leaks[np.maximum(net.e_leak, 0)], net.e_g)
    g = g / math.sqrt(net.config.p_lin)
    J = np.zeros((5, 5))
    for a, b, gg in zip(net.e_from, net.e_to, g):
        for i, j in ((a, b), (b, a)):
            if i < 5:
                J[i, i] -= gg
                if j < 5:
                    J[i, j] += gg
    J *= net.inv_cap[:5, None]
    return float(np.max(np.abs(np.linalg.eigvals(J)))) * dt


def step(net: CupNetwork, valve: ValveState, leaks, dt=C.DT) -> CupNetwork:
    """One RK4 step with leaks and the source pressure held over the step."""
    leaks = _check_leaks(leaks)
    u = np.array([valve.command(net.t)], dtype=float)
    out, _, _, _ = run(net, valve, leaks.reshape(1, 4), 1, dt=dt, u=u)
    return out


def steady_state(net: CupNetwork, valve: ValveState, leaks, dt=C.DT, tol=0.1, t_max=10.0,
                 chunk=0.05):
    """Time-step until max |dP/dt| < ``tol`` Pa/s; returns (chamber pressures, net).

    The valve is held at its current open fraction (constant source).
    """
    leaks = _check_leaks(leaks).reshape(4)
    n_chunk = int(round(chunk / dt))
    u = np.full(n_chunk, valve.open_fraction)
    t = 0.0
    resid = np.inf
    cur = net
    while t < t_max - 1e-12:
        cur, valve, _, _ = run(cur, valve, leaks, n_chunk, dt=dt, u=u)
        t += chunk
        rates = cur.rates(leaks)
        resid = float(np.max(np.abs(rates[:5])))
        if resid < tol:
            balance = mass_imbalance(cur, leaks, valve.open_fraction)
            if abs(balance) > 1e-9:
                raise SteadyStateError(f"mass imbalance {balance:.3e} kg/s at steady state", resid)
            return cur.pressure[:4].copy(), cur
    raise SteadyStateError(f"no steady state after {t_max} s simulated; max |dP/dt| = {resid:.3g} Pa/s",
                           resid)


def mass_imbalance(net, leaks, open_fraction):
    """Net mass inflow (kg/s) from the boundaries into the internal nodes."""
    P = net.pressure.copy()
    P[SOURCE] = net.source_pressure(open_fraction)
    f = net.edge_flows(leaks, P)
    internal = np.arange(5)
    into = np.isin(net.e_to, internal) & ~np.isin(net.e_from, internal)
    out_of = np.isin(net.e_from, internal) & ~np.isin(net.e_to, internal)
    return float(f[into].sum() - f[out_of].sum())


def steady_state_algebraic(net: CupNetwork, leaks, open_fraction=1.0, x0=None):
    """Solve the flow balance directly (scipy root finder); returns all 5 internal pressures."""
    leaks = _check_leaks(leaks).reshape(4)
    P = net.pressure.copy()
    P[AMBIENT] = net.config.p_atm
    P[SOURCE] = net.source_pressure(open_fraction)
    args = net.kernel_args()
    scale = net.config.p_atm

    def resid(x):
        Q = P.copy()
        Q[:5] = x * scale
        return kernels.node_rates(Q, leaks, *args)[:5] / net.inv_cap[:5] * 1e5

    if x0 is None:
        x0 = np.full(5, (P[AMBIENT] + P[SOURCE]) * 0.5) / scale
    else:
        x0 = np.asarray(x0) / scale
    sol = optimize.root(resid, x0, method="hybr", options={"xtol": 1e-13})
    if not sol.success:
        sol = optimize.root(resid, x0, method="lm", options={"xtol": 1e-13})
    return sol.x * scale


def horizontal_routing(k, split):
    """Leak routing matrix for an under-lip (horizontal) leak at quadrant ``k``.

    Returns a (4,) weight vector over chambers: most of the inflow crosses the
    sealed face and lands in the diagonal chamber.
    """
    w = np.zeros(4)
    w[(k + 2) % 4] = 1.0 - split
    w[k] += split
    return w


def routing_matrix(eta, split):
    """(4, 4) matrix R so that chamber leaks = R @ quadrant openings.

    ``eta`` in [0, 1] blends vertical (identity) into horizontal routing.
    """
    H = np.zeros((4, 4))
    for k in range(4):
        H[:, k] = horizontal_routing(k, split)
    return (1.0 - eta) * np.eye(4) + eta * H
