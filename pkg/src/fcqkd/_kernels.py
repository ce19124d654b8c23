"""Hot loops with a numba path and a pure-numpy path.

Kind codes shared with :mod:`fcqkd.protocol`: signals ``0=Narrow1``,
``1=Narrow2``, ``2=Broadband``; detectors ``0=Narrow1``, ``1=Narrow2``,
``2=Wideband``. ``eve_kind == -1`` means no resend reached the line.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from ._backend import njit

# Column layout of the uniform draws consumed per round.
U_ALICE, U_INTERCEPT, U_EVE_SURVIVE, U_GUESS, U_BOB, U_CLICK = range(6)
N_UNIFORM = 6
N_NORMAL = 2


# --------------------------------------------------------------- quadrature


@njit(cache=True)
def _trapezoid_moments_nb(w, t0, dt):
    n = w.shape[0]
    norm = 0.0
    first = 0.0
    for j in range(n):
        c = 0.5 if (j == 0 or j == n - 1) else 1.0
        norm += c * w[j]
        first += c * w[j] * (t0 + j * dt)
    if norm <= 0.0:
        return norm * dt, np.nan, np.nan
    mean = first / norm
    second = 0.0
    for j in range(n):
        c = 0.5 if (j == 0 or j == n - 1) else 1.0
        d = t0 + j * dt - mean
        second += c * w[j] * d * d
    return norm * dt, mean, second / norm


def _trapezoid_moments_np(w, t0, dt):
    c = np.ones_like(w)
    c[0] = c[-1] = 0.5
    cw = c * w
    norm = float(np.sum(cw))
    if norm <= 0.0:
        return norm * dt, np.nan, np.nan
    t = t0 + np.arange(w.shape[0]) * dt
    mean = float(np.sum(cw * t)) / norm
    d = t - mean
    return norm * dt, mean, float(np.sum(cw * d * d)) / norm


def trapezoid_moments(w, t0, dt, backend=None):
    """Return ``(integral, mean, variance)`` of a non-negative density on a uniform grid."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    if _backend.resolve(backend) == "numba":
        return _trapezoid_moments_nb(w, float(t0), float(dt))
    return _trapezoid_moments_np(w, float(t0), float(dt))


# ------------------------------------------------------------------- rounds


@njit(cache=True)
def _rounds_nb(
    u, z, t_a, cum0, cum1,
    eve_on, p_intercept, p_reach_eve,
    p_direct, delay_direct, width_direct,
    delay_to_eve, width_to_eve, eve_delay, delay_from_eve, width_from_eve, p_eve,
):
    n = u.shape[0]
    alice = np.empty(n, np.int8)
    bob = np.empty(n, np.int8)
    eve_kind = np.empty(n, np.int8)
    clicked = np.empty(n, np.bool_)
    t_b = np.empty(n, np.float64)
    for i in range(n):
        ua = u[i, 0]
        a = 0 if ua < cum0 else (1 if ua < cum1 else 2)
        b = int(u[i, 4] * 3.0)
        if b > 2:
            b = 2
        alice[i] = a
        bob[i] = b
        k = -1
        lost = False
        if eve_on and u[i, 1] < p_intercept:
            if u[i, 2] < p_reach_eve:
                if a < 2:
                    k = a
                else:
                    k = 0 if u[i, 3] < 0.5 else 1
            else:
                lost = True
        eve_kind[i] = k
        if lost:
            clicked[i] = False
            t_b[i] = np.nan
            continue
        if k >= 0:
            p = p_eve[k, b]
            tb = t_a[i] + delay_to_eve + width_to_eve[a] * z[i, 0]
            tb = tb + eve_delay[k] + delay_from_eve + width_from_eve[k] * z[i, 1]
        else:
            p = p_direct[a, b]
            tb = t_a[i] + delay_direct + width_direct[a] * z[i, 0]
        c = u[i, 5] < p
        clicked[i] = c
        t_b[i] = tb if c else np.nan
    return alice, bob, eve_kind, clicked, t_b


def _rounds_np(
    u, z, t_a, cum0, cum1,
    eve_on, p_intercept, p_reach_eve,
    p_direct, delay_direct, width_direct,
    delay_to_eve, width_to_eve, eve_delay, delay_from_eve, width_from_eve, p_eve,
):
    ua = u[:, U_ALICE]
    alice = np.where(ua < cum0, 0, np.where(ua < cum1, 1, 2)).astype(np.int8)
    bob = np.minimum((u[:, U_BOB] * 3.0).astype(np.int64), 2).astype(np.int8)
    if eve_on:
        attempt = u[:, U_INTERCEPT] < p_intercept
    else:
        attempt = np.zeros(u.shape[0], dtype=bool)
    reached = attempt & (u[:, U_EVE_SURVIVE] < p_reach_eve)
    lost = attempt & ~reached
    guess = np.where(u[:, U_GUESS] < 0.5, 0, 1)
    measured = np.where(alice < 2, alice, guess)
    eve_kind = np.where(reached, measured, -1).astype(np.int8)

    ai = alice.astype(np.int64)
    bi = bob.astype(np.int64)
    ki = np.maximum(eve_kind, 0).astype(np.int64)

    tb_direct = t_a + delay_direct + width_direct[ai] * z[:, 0]
    tb_eve = t_a + delay_to_eve + width_to_eve[ai] * z[:, 0]
    tb_eve = tb_eve + eve_delay[ki] + delay_from_eve + width_from_eve[ki] * z[:, 1]
    p = np.where(reached, p_eve[ki, bi], p_direct[ai, bi])
    clicked = (u[:, U_CLICK] < p) & ~lost
    t_b = np.where(reached, tb_eve, tb_direct)
    t_b = np.where(clicked, t_b, np.nan)
    return alice, bob, eve_kind, clicked, t_b


def simulate_rounds(u, z, t_a, *, backend=None, **params):
    """Resolve a batch of rounds from pre-drawn uniforms ``u`` and normals ``z``.

    ``params`` carries the precomputed per-kind click matrices, widths and
    delays (see :func:`fcqkd.protocol.round_tables`). Returns
    ``(alice, bob, eve_kind, clicked, t_b)``.
    """
    args = (
        np.ascontiguousarray(u, dtype=np.float64),
        np.ascontiguousarray(z, dtype=np.float64),
        np.ascontiguousarray(t_a, dtype=np.float64),
        float(params["cum0"]),
        float(params["cum1"]),
        bool(params["eve_on"]),
        float(params["p_intercept"]),
        float(params["p_reach_eve"]),
        np.ascontiguousarray(params["p_direct"], dtype=np.float64),
        float(params["delay_direct"]),
        np.ascontiguousarray(params["width_direct"], dtype=np.float64),
        float(params["delay_to_eve"]),
        np.ascontiguousarray(params["width_to_eve"], dtype=np.float64),
        np.ascontiguousarray(params["eve_delay"], dtype=np.float64),
        float(params["delay_from_eve"]),
        np.ascontiguousarray(params["width_from_eve"], dtype=np.float64),
        np.ascontiguousarray(params["p_eve"], dtype=np.float64),
    )
    if _backend.resolve(backend) == "numba":
        return _rounds_nb(*args)
    return _rounds_np(*args)
