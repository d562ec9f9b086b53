"""Hot loops of the lumped pneumatic model.

Each kernel exists twice: a scalar-loop version compiled with numba, and a
vectorised numpy version used when ``SMARTCUP_NUMBA=0``. Both produce the
same numbers to rounding; ``tests/test_backends.py`` holds them together.

Node layout (7 nodes): 0-3 chambers, 4 plenum, 5 ambient, 6 source.
Edge arrays: ``e_from``, ``e_to`` node ids, ``e_g`` flow coefficient,
``e_leak`` chamber index for lip-leak edges (else -1, coefficient then comes
from the per-step leak array).
"""
import math

import numpy as np

from .._accel import USE_NUMBA, njit

N_NODES = 7
N_INTERNAL = 5
AMBIENT = 5
SOURCE = 6

ERR_OK = -1


@njit
def _orifice(g, dp, p_lin):
    if dp >= p_lin:
        return g * math.sqrt(dp)
    if dp <= -p_lin:
        return -g * math.sqrt(-dp)
    return g * dp / math.sqrt(p_lin)


@njit
def source_level(of, threshold):
    """Fraction of full vacuum delivered by the ejector at valve opening ``of``."""
    if of <= threshold:
        return 0.0
    return (of - threshold) / (1.0 - threshold)


@njit
def _derivs_nb(P, leaks, e_from, e_to, e_g, e_leak, inv_cap, p_lin, out):
    for i in range(out.shape[0]):
        out[i] = 0.0
    for k in range(e_from.shape[0]):
        a = e_from[k]
        b = e_to[k]
        li = e_leak[k]
        g = leaks[li] if li >= 0 else e_g[k]
        m = _orifice(g, P[a] - P[b], p_lin)
        out[a] -= m
        out[b] += m
    for i in range(out.shape[0]):
        out[i] *= inv_cap[i]


@njit
def _integrate_nb(P0, of0, u, leaks, record_idx, e_from, e_to, e_g, e_leak,
                  inv_cap, p_lin, p_atm, max_vac, ej_th, t_on, t_off, dt, max_dp):
    n_steps = u.shape[0]
    n_rec = record_idx.shape[0]
    rec = np.empty((n_rec, P0.shape[0]))
    rec_of = np.empty(n_rec)
    P = P0.copy()
    Pt = np.empty_like(P)
    k1 = np.empty_like(P)
    k2 = np.empty_like(P)
    k3 = np.empty_like(P)
    k4 = np.empty_like(P)
    a_on = math.exp(-dt / t_on)
    a_off = math.exp(-dt / t_off)
    of = of0
    r = 0
    err = -1
    for n in range(n_steps):
        while r < n_rec and record_idx[r] == n:
            rec[r, :] = P
            rec_of[r] = of
            r += 1
        lk = leaks[n]
        P[AMBIENT] = p_atm
        P[SOURCE] = p_atm - max_vac * source_level(of, ej_th)
        _derivs_nb(P, lk, e_from, e_to, e_g, e_leak, inv_cap, p_lin, k1)
        for i in range(P.shape[0]):
            Pt[i] = P[i] + 0.5 * dt * k1[i]
        _derivs_nb(Pt, lk, e_from, e_to, e_g, e_leak, inv_cap, p_lin, k2)
        for i in range(P.shape[0]):
            Pt[i] = P[i] + 0.5 * dt * k2[i]
        _derivs_nb(Pt, lk, e_from, e_to, e_g, e_leak, inv_cap, p_lin, k3)
        for i in range(P.shape[0]):
            Pt[i] = P[i] + dt * k3[i]
        _derivs_nb(Pt, lk, e_from, e_to, e_g, e_leak, inv_cap, p_lin, k4)
        for i in range(P.shape[0]):
            d = dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if abs(d) > max_dp:
                err = n
            P[i] += d
        if err >= 0:
            break
        # valve lag: first order toward the commanded state, held over the step
        cmd = u[n]
        if cmd > of:
            of = cmd + (of - cmd) * a_on
        else:
            of = cmd + (of - cmd) * a_off
    while r < n_rec and record_idx[r] == n_steps:
        rec[r, :] = P
        rec_of[r] = of
        r += 1
    P[SOURCE] = p_atm - max_vac * source_level(of, ej_th)
    return rec, rec_of, P, of, err


def _derivs_np(P, leaks, e_from, e_to, e_g, e_leak, inv_cap, p_lin):
    g = np.where(e_leak >= 0, leaks[np.maximum(e_leak, 0)], e_g)
    dp = P[e_from] - P[e_to]
    a = np.abs(dp)
    m = np.where(a >= p_lin, g * np.sign(dp) * np.sqrt(a), g * dp / math.sqrt(p_lin))
    out = np.bincount(e_to, m, minlength=P.shape[0]) - np.bincount(e_from, m, minlength=P.shape[0])
    return out * inv_cap


def _integrate_np(P0, of0, u, leaks, record_idx, e_from, e_to, e_g, e_leak,
                  inv_cap, p_lin, p_atm, max_vac, ej_th, t_on, t_off, dt, max_dp):
    n_steps = u.shape[0]
    rec = np.empty((record_idx.shape[0], P0.shape[0]))
    rec_of = np.empty(record_idx.shape[0])
    P = P0.copy()
    a_on = math.exp(-dt / t_on)
    a_off = math.exp(-dt / t_off)
    of = float(of0)
    r = 0
    err = -1
    args = (e_from, e_to, e_g, e_leak, inv_cap, p_lin)
    for n in range(n_steps):
        while r < len(record_idx) and record_idx[r] == n:
            rec[r] = P
            rec_of[r] = of
            r += 1
        lk = leaks[n]
        P[AMBIENT] = p_atm
        P[SOURCE] = p_atm - max_vac * source_level(of, ej_th)
        k1 = _derivs_np(P, lk, *args)
        k2 = _derivs_np(P + 0.5 * dt * k1, lk, *args)
        k3 = _derivs_np(P + 0.5 * dt * k2, lk, *args)
        k4 = _derivs_np(P + dt * k3, lk, *args)
        d = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(np.abs(d) > max_dp):
            err = n
        P = P + d
        if err >= 0:
            break
        cmd = u[n]
        of = cmd + (of - cmd) * (a_on if cmd > of else a_off)
    while r < len(record_idx) and record_idx[r] == n_steps:
        rec[r] = P
        rec_of[r] = of
        r += 1
    P[SOURCE] = p_atm - max_vac * source_level(of, ej_th)
    return rec, rec_of, P, of, err


if USE_NUMBA:
    def node_rates(P, leaks, e_from, e_to, e_g, e_leak, inv_cap, p_lin):
        out = np.empty_like(P)
        _derivs_nb(P, leaks, e_from, e_to, e_g, e_leak, inv_cap, p_lin, out)
        return out

    integrate = _integrate_nb
else:
    node_rates = _derivs_np
    integrate = _integrate_np
