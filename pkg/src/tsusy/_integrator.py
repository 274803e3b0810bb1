"""Compiled Dormand-Prince 5(4) integrator for the mode-function systems.

scipy's ``solve_ivp`` spends ~10 us of Python overhead per right-hand-side
call, which is too slow for the thousands of oscillation periods in the
scaled scenarios.  This kernel runs the same embedded pair (tableau taken
from :class:`scipy.integrate._ivp.rk.RK45`) with its quartic dense output,
entirely under numba.  The right-hand sides are selected by an integer code
so that one compiled function serves every route.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp.rk import RK45

from .profiles import MassProfile, ProfileKind

SYS_COUPLED = 0
SYS_SECOND_ORDER = 1
SYS_RICCATI = 2
SYS_LINEAR = 3

STATUS_DONE = 0
STATUS_STOPPED = 1
STATUS_FAILED = -1

_C = np.ascontiguousarray(RK45.C, dtype=np.float64)
_A = np.ascontiguousarray(RK45.A, dtype=np.float64)
_B = np.ascontiguousarray(RK45.B, dtype=np.float64)
_E = np.ascontiguousarray(RK45.E, dtype=np.float64)
_P = np.ascontiguousarray(RK45.P, dtype=np.float64)

_PROFILE_CODE = {ProfileKind.CONSTANT: 0, ProfileKind.SINUSOIDAL: 1, ProfileKind.TABULATED: 2}


def profile_arrays(profile: MassProfile):
    """Flatten a profile into ``(code, m0, lam, breakpoints, coefficients)``."""
    if profile.kind is ProfileKind.TABULATED:
        spline = profile._spline
        return (2, 0.0, 0.0, np.ascontiguousarray(spline.x, dtype=np.float64),
                np.ascontiguousarray(spline.c, dtype=np.float64))
    return (_PROFILE_CODE[profile.kind], float(profile.m0), float(profile.lam),
            np.zeros(2), np.zeros((4, 1)))


@njit(cache=True)
def _spline_eval(t, xs, coef):
    n = xs.shape[0]
    if t <= xs[0]:
        t = xs[0]
    elif t >= xs[n - 1]:
        t = xs[n - 1]
    i = np.searchsorted(xs, t, side="right") - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    dx = t - xs[i]
    return ((coef[0, i] * dx + coef[1, i]) * dx + coef[2, i]) * dx + coef[3, i]


@njit(cache=True)
def _tab_rate(t, xs, coef):
    # mirrors MassProfile._tab_rate: step = local sample spacing
    n = xs.shape[0]
    lo, hi = xs[0], xs[n - 1]
    if t < lo:
        t = lo
    if t > hi:
        t = hi
    i = np.searchsorted(xs, t, side="right") - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    h = xs[i + 1] - xs[i]
    if t - 2 * h >= lo and t + 2 * h <= hi:
        return (-_spline_eval(t + 2 * h, xs, coef) + 8 * _spline_eval(t + h, xs, coef)
                - 8 * _spline_eval(t - h, xs, coef) + _spline_eval(t - 2 * h, xs, coef)) / (12 * h)
    if t + 2 * h <= hi:
        return (-3 * _spline_eval(t, xs, coef) + 4 * _spline_eval(t + h, xs, coef)
                - _spline_eval(t + 2 * h, xs, coef)) / (2 * h)
    if t - 2 * h >= lo:
        return (3 * _spline_eval(t, xs, coef) - 4 * _spline_eval(t - h, xs, coef)
                + _spline_eval(t - 2 * h, xs, coef)) / (2 * h)
    dx = t - xs[i]
    return (3 * coef[0, i] * dx + 2 * coef[1, i]) * dx + coef[2, i]


@njit(cache=True)
def mass_rate(t, pcode, m0, lam, xs, coef):
    if pcode == 0:
        return m0, 0.0
    if pcode == 1:
        return m0 * math.sin(lam * t), m0 * lam * math.cos(lam * t)
    return _spline_eval(t, xs, coef), _tab_rate(t, xs, coef)


@njit(cache=True)
def _rhs(system, t, y, out, physical, k, sign, pcode, m0, lam, xs, coef):
    m, rate = mass_rate(t, pcode, m0, lam, xs, coef)
    if system == SYS_COUPLED:
        a = m * y[0] + k * y[1]
        b = -m * y[1] + k * y[0]
        if physical:
            out[0] = -1j * a
            out[1] = -1j * b
        else:
            out[0] = a
            out[1] = b
    elif system == SYS_SECOND_ORDER:
        if physical:
            cp = -(k * k + m * m + 1j * rate)
            cm = -(k * k + m * m - 1j * rate)
        else:
            cp = k * k + rate + m * m + 0j
            cm = k * k - rate + m * m + 0j
        out[0] = y[1]
        out[1] = cp * y[0]
        out[2] = y[3]
        out[3] = cm * y[2]
    elif system == SYS_RICCATI:
        E = y[0]
        if physical:
            out[0] = -1j * (k * k + m * m - E * E) + sign * rate
            out[1] = -1j * E
        else:
            out[0] = (-sign * rate - m * m) + E * E - k * k
            out[1] = -E
    else:
        if physical:
            c = -(k * k + m * m + sign * 1j * rate)
        else:
            c = k * k + sign * rate + m * m + 0j
        out[0] = y[1]
        out[1] = c * y[0]


@njit(cache=True)
def _stop(system, y, threshold):
    if system == SYS_RICCATI:
        return abs(y[0]) > threshold
    if system == SYS_LINEAR:
        return abs(y[1]) < threshold * abs(y[0])
    return False


@njit(cache=True)
def _norm(err, y, y_new, rtol, atol):
    n = err.shape[0]
    acc = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        acc += (abs(err[i]) / sc) ** 2
    return math.sqrt(acc / n)


@njit(cache=True)
def integrate(system, t0, t1, y0, t_out, rtol, atol, physical, k, sign, threshold,
              pcode, m0, lam, xs, coef, C, A, B, E, P, max_steps):
    """Integrate from ``t0`` toward ``t1``; sample dense output at ``t_out``.

    Returns ``(y_out, n_filled, t_end, y_end, status, nfev, n_accepted)``.
    ``status`` is 0 on reaching ``t1``, 1 when the stop condition fired and
    -1 on step-size collapse or step budget exhaustion.
    """
    n = y0.shape[0]
    nout = t_out.shape[0]
    y_out = np.zeros((nout, n), dtype=np.complex128)
    K = np.zeros((7, n), dtype=np.complex128)
    y = y0.copy()
    y_new = np.zeros(n, dtype=np.complex128)
    stage = np.zeros(n, dtype=np.complex128)
    err = np.zeros(n, dtype=np.complex128)
    f = np.zeros(n, dtype=np.complex128)
    _rhs(system, t0, y, f, physical, k, sign, pcode, m0, lam, xs, coef)
    nfev = 1

    j = 0
    while j < nout and t_out[j] <= t0:
        y_out[j, :] = y
        j += 1

    # initial step (Hairer, Norsett & Wanner II.4)
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(f[i]) / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    for i in range(n):
        stage[i] = y[i] + h0 * f[i]
    _rhs(system, t0 + h0, stage, K[1], physical, k, sign, pcode, m0, lam, xs, coef)
    nfev += 1
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d2 += (abs(K[1, i] - f[i]) / sc) ** 2
    d2 = math.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h0, h1, t1 - t0)

    t = t0
    status = STATUS_DONE
    naccept = 0
    steps = 0
    while t < t1:
        steps += 1
        if steps > max_steps:
            status = STATUS_FAILED
            break
        if h < 1e-14 * max(abs(t), 1.0):
            status = STATUS_FAILED
            break
        last = False
        if t + h >= t1:
            h = t1 - t
            last = True
        for i in range(n):
            K[0, i] = f[i]
        for s in range(1, 6):
            for i in range(n):
                acc = 0j
                for r in range(s):
                    acc += A[s, r] * K[r, i]
                stage[i] = y[i] + h * acc
            _rhs(system, t + C[s] * h, stage, K[s], physical, k, sign, pcode, m0, lam, xs, coef)
        for i in range(n):
            acc = 0j
            for r in range(6):
                acc += B[r] * K[r, i]
            y_new[i] = y[i] + h * acc
        t_new = t1 if last else t + h
        _rhs(system, t_new, y_new, K[6], physical, k, sign, pcode, m0, lam, xs, coef)
        nfev += 6
        for i in range(n):
            acc = 0j
            for r in range(7):
                acc += E[r] * K[r, i]
            err[i] = h * acc
        en = _norm(err, y, y_new, rtol, atol)
        if en < 1.0:
            while j < nout and t_out[j] <= t_new:
                x = (t_out[j] - t) / h
                for i in range(n):
                    acc = 0j
                    xp = 1.0
                    for c in range(4):
                        xp *= x
                        q = 0j
                        for r in range(7):
                            q += K[r, i] * P[r, c]
                        acc += q * xp
                    y_out[j, i] = y[i] + h * acc
                j += 1
            t = t_new
            for i in range(n):
                y[i] = y_new[i]
                f[i] = K[6, i]
            naccept += 1
            if en == 0.0:
                factor = 10.0
            else:
                factor = min(10.0, 0.9 * en ** -0.2)
            h *= factor
            if _stop(system, y, threshold):
                status = STATUS_STOPPED
                break
        else:
            h *= max(0.2, 0.9 * en ** -0.2)
    return y_out, j, t, y, status, nfev, naccept


def run(system, t0, t1, y0, t_out, profile: MassProfile, *, physical, k, rtol, atol,
        sign=1, threshold=math.inf, max_steps=50_000_000):
    """Python-side wrapper around :func:`integrate`."""
    pcode, m0, lam, xs, coef = profile_arrays(profile)
    return integrate(system, float(t0), float(t1), np.asarray(y0, dtype=np.complex128),
                     np.ascontiguousarray(t_out, dtype=np.float64), float(rtol), float(atol),
                     bool(physical), float(k), float(sign), float(threshold),
                     pcode, m0, lam, xs, coef, _C, _A, _B, _E, _P, int(max_steps))
