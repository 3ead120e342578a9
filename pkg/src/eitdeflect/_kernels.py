"""Compiled inner loops for the ray tracer.

Fields are passed as ``(kind, params)`` pairs produced by
:meth:`eitdeflect.fields.SusceptibilityField.kernel_spec`. The integrated
system is r' = t, t' = g - (g.t) t with g = grad(chi)/2 and ' = d/ds.
"""

import math

import numpy as np
from numba import njit

STATUS_RUNNING = 0
STATUS_Z_EXIT = 1
STATUS_LATERAL = 2
STATUS_NONFINITE = 3


@njit(cache=True, nogil=True)
def _re_chi_full(chi0, Gamma, Delta, delta, rabi):
    D = rabi * rabi - 4.0 * Delta * delta
    return chi0 * Gamma * delta * D / (D * D + 4.0 * delta * delta * Gamma * Gamma)


@njit(cache=True, nogil=True)
def chi_value(kind, p, x, y, z):
    if kind == 0:
        return p[0] + p[1] * (x - p[4]) + p[2] * (y - p[5]) + p[3] * (z - p[6])
    if kind == 1:
        return p[0] * math.exp(2.0 * (x * x + y * y) / (p[1] * p[1]))
    if kind == 2:
        rabi = p[4] * math.exp(-(x * x + y * y) / (p[5] * p[5]))
        return _re_chi_full(p[0], p[1], p[2], p[3], rabi)
    return _re_chi_full(p[0], p[1], p[2], p[3] + p[4] * x, p[5])


@njit(cache=True, nogil=True)
def chi_gradient(kind, p, x, y, z):
    if kind == 0:
        return p[1], p[2], p[3]
    if kind == 1:
        s2 = p[1] * p[1]
        c = p[0] * math.exp(2.0 * (x * x + y * y) / s2)
        return 4.0 * x * c / s2, 4.0 * y * c / s2, 0.0
    h = p[6]
    gx = (chi_value(kind, p, x + h, y, z) - chi_value(kind, p, x - h, y, z)) / (2.0 * h)
    gy = (chi_value(kind, p, x, y + h, z) - chi_value(kind, p, x, y - h, z)) / (2.0 * h)
    gz = (chi_value(kind, p, x, y, z + h) - chi_value(kind, p, x, y, z - h)) / (2.0 * h)
    return gx, gy, gz


@njit(cache=True, nogil=True)
def _rhs(kind, p, frozen, g0, u):
    if frozen:
        gx, gy, gz = g0[0], g0[1], g0[2]
    else:
        gx, gy, gz = chi_gradient(kind, p, u[0], u[1], u[2])
        gx *= 0.5
        gy *= 0.5
        gz *= 0.5
    dot = gx * u[3] + gy * u[4] + gz * u[5]
    return (u[3], u[4], u[5], gx - dot * u[3], gy - dot * u[4], gz - dot * u[5])


@njit(cache=True, nogil=True)
def _axpy(u, k, a):
    return (u[0] + a * k[0], u[1] + a * k[1], u[2] + a * k[2],
            u[3] + a * k[3], u[4] + a * k[4], u[5] + a * k[5])


@njit(cache=True, nogil=True)
def rk4_step(kind, p, frozen, g0, u, h):
    k1 = _rhs(kind, p, frozen, g0, u)
    k2 = _rhs(kind, p, frozen, g0, _axpy(u, k1, 0.5 * h))
    k3 = _rhs(kind, p, frozen, g0, _axpy(u, k2, 0.5 * h))
    k4 = _rhs(kind, p, frozen, g0, _axpy(u, k3, h))
    w = h / 6.0
    return (u[0] + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            u[1] + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            u[2] + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            u[3] + w * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
            u[4] + w * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4]),
            u[5] + w * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5]))


@njit(cache=True, nogil=True)
def _normalized(u):
    n = math.sqrt(u[3] * u[3] + u[4] * u[4] + u[5] * u[5])
    return (u[0], u[1], u[2], u[3] / n, u[4] / n, u[5] / n), abs(n - 1.0)


@njit(cache=True, nogil=True)
def rk4_run(kind, p, frozen, g0, state, s0, h, length, hwx, hwy, nmax, out_s, out_u):
    """Advance ``state`` by up to ``nmax`` steps, writing each accepted sample.

    Returns ``(count, status, s, max_drift)``; ``state`` holds the last
    accepted state on return.
    """
    u = (state[0], state[1], state[2], state[3], state[4], state[5])
    s = s0
    drift = 0.0
    count = 0
    status = STATUS_RUNNING
    while count < nmax:
        un = rk4_step(kind, p, frozen, g0, u, h)
        hs = h
        if not (math.isfinite(un[0]) and math.isfinite(un[1]) and math.isfinite(un[2])
                and math.isfinite(un[3]) and math.isfinite(un[4]) and math.isfinite(un[5])):
            status = STATUS_NONFINITE
            break
        if un[2] >= length:
            # shorten the last step so the ray lands on z = length
            hs = h * (length - u[2]) / (un[2] - u[2])
            for _ in range(20):
                un = rk4_step(kind, p, frozen, g0, u, hs)
                err = un[2] - length
                if abs(err) <= 1e-12 * h:
                    break
                hs -= err / un[5]
            status = STATUS_Z_EXIT
        un, d = _normalized(un)
        if d > drift:
            drift = d
        u = un
        s += hs
        out_s[count] = s
        for i in range(6):
            out_u[count, i] = u[i]
        count += 1
        if status == STATUS_Z_EXIT:
            break
        if abs(u[0]) > hwx or abs(u[1]) > hwy or u[2] < 0.0:
            status = STATUS_LATERAL
            break
    for i in range(6):
        state[i] = u[i]
    return count, status, s, drift


def warmup():
    """Trigger compilation for every field kind."""
    g0 = np.zeros(3)
    out_s = np.empty(2)
    out_u = np.empty((2, 6))
    params = {
        0: np.array([0.0, 1e-3, 0.0, 0.0, 0.0, 0.0, 0.0]),
        1: np.array([1e-4, 1.0]),
        2: np.array([0.1, 1.0, 0.0, 0.1, 5.0, 1.0, 1e-4]),
        3: np.array([0.1, 1.0, 0.0, 0.0, 0.1, 5.0, 1e-4]),
    }
    for kind, p in params.items():
        state = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
        rk4_run(kind, p, False, g0, state, 0.0, 0.1, 1.0, 10.0, 10.0, 2, out_s, out_u)
