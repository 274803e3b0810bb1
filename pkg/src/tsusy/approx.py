"""Closed-form limits for the log-derivative functions E_pm(t).

Massive limit (k << m)
    E_pm = +-m(t) in physical time, -+m(t) in the Wick domain.

Ultra-relativistic limit (m << k), physical time
    Writing ``E = k + eps`` and dropping ``eps**2`` from
    ``i E' = k**2 + m**2 +- i m' - E**2`` gives a linear equation whose
    solution is

        E_pm(t) = k + exp(2ikt) * [ (E0 - k) - i int_0^t (m**2 +- i m') exp(-2iks) ds ]

    :func:`limit_E_ur_quadrature` evaluates this by adaptive quadrature and
    :func:`limit_E_ur_sinusoidal` is its steady (homogeneous-free) solution for
    ``m = m0 sin(lam t)``.

The ``"display"`` form of the sinusoidal expression is the same solution
written for ``psi = exp(+i int E dt)``; it equals the physical form at
``-t`` (equivalently ``conj`` of the opposite branch).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .dynamics import Convention
from .errors import ConfigError, NumericalError, PoleError
from .profiles import MassProfile

__all__ = [
    "Regime",
    "LimitSolution",
    "APPLICABILITY_THRESHOLD",
    "limit_E_massive",
    "limit_E_ur_quadrature",
    "limit_E_ur_sinusoidal",
    "ur_sinusoidal_offset",
]

APPLICABILITY_THRESHOLD = 0.3
POLE_GUARD = 1e-6


class Regime(enum.Enum):
    MASSIVE = "massive"
    UR_QUADRATURE = "ur_quadrature"
    UR_SINUSOIDAL = "ur_sinusoidal"


@dataclass
class LimitSolution:
    times: np.ndarray
    E_plus: np.ndarray
    E_minus: np.ndarray
    regime: Regime
    validity: dict = field(default_factory=dict)
    initial_value: tuple | None = None

    @property
    def applicable(self) -> bool:
        """All recorded small parameters below :data:`APPLICABILITY_THRESHOLD`."""
        return all(v < APPLICABILITY_THRESHOLD for v in self.validity.values())


def _mass_scale(profile: MassProfile, times) -> float:
    return float(np.max(np.abs(profile.mass(np.asarray(times, dtype=float)))))


def limit_E_massive(profile: MassProfile, times, convention=Convention.PHYSICAL,
                    k: float | None = None) -> LimitSolution:
    """``E_pm = +-m`` (physical) or ``-+m`` (Wick).

    Exact when ``k = 0``.  Passing ``k`` records ``k/max(m)`` as the small
    parameter.
    """
    times = np.asarray(times, dtype=float)
    m = np.asarray(profile.mass(times), dtype=float) * np.ones_like(times)
    sign = 1.0 if Convention(convention) is Convention.PHYSICAL else -1.0
    validity = {}
    if k is not None:
        scale = _mass_scale(profile, times)
        validity["k_over_m0"] = k / scale if scale > 0 else math.inf
    return LimitSolution(times, (sign * m).astype(complex), (-sign * m).astype(complex),
                         Regime.MASSIVE, validity)


def _ur_validity(m0, lam, k):
    return {"m0_over_k": abs(m0) / k, "lambda_over_k": abs(lam) / k}


def _oscillatory_increments(func, grid, omega, tol):
    """``int_{grid[j-1]}^{grid[j]} func(s) exp(-i omega s) ds`` for each j >= 1.

    ``func`` returns complex values; cos/sin-weighted adaptive quadrature
    (QUADPACK QAWO) is applied to its real and imaginary parts.
    """
    out = np.zeros(len(grid), dtype=complex)
    for j in range(1, len(grid)):
        a, b = grid[j - 1], grid[j]
        if b == a:
            continue
        parts = []
        for part in (lambda s: func(s).real, lambda s: func(s).imag):
            c, ec = quad(part, a, b, weight="cos", wvar=omega, epsabs=tol, epsrel=tol, limit=200)
            s_, es = quad(part, a, b, weight="sin", wvar=omega, epsabs=tol, epsrel=tol, limit=200)
            if not (math.isfinite(c) and math.isfinite(s_)):
                raise NumericalError("oscillatory quadrature produced a non-finite value")
            parts.append(c - 1j * s_)
        out[j] = parts[0] + 1j * parts[1]
    return out


def limit_E_ur_quadrature(profile: MassProfile, k: float, times, E0=None,
                          tol: float = 1e-13) -> LimitSolution:
    """First-order ultra-relativistic ``E_pm`` by adaptive quadrature.

    The integral runs from ``times[0]``.  ``E0`` fixes the integration
    constant as the value at ``times[0]``; the default ``(k, k)`` is the bare
    lower limit, which leaves a free ``exp(2ikt)`` oscillation whenever the
    steady solution does not start at ``k`` (see :func:`ur_sinusoidal_offset`).
    """
    if not k > 0:
        raise ConfigError("ultra-relativistic limit needs k > 0")
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ConfigError("times must be non-decreasing")
    profile.check_domain(times)
    t0 = times[0]
    E0 = (k, k) if E0 is None else tuple(complex(e) for e in E0)
    # evaluate relative to t0 so the phase factor stays accurate for large t0
    results = []
    for sign, e0 in ((1, E0[0]), (-1, E0[1])):
        def forcing(s, sign=sign):
            m, rate = profile._mass(s), profile._rate(s)
            return m * m + sign * 1j * rate
        inc = _oscillatory_increments(lambda u: forcing(u + t0), times - t0, 2 * k, tol)
        integral = np.cumsum(inc)
        phase = np.exp(2j * k * (times - t0))
        results.append(k + phase * ((e0 - k) - 1j * integral))
    scale = _mass_scale(profile, times)
    validity = {"m0_over_k": scale / k}
    return LimitSolution(times, results[0], results[1], Regime.UR_QUADRATURE, validity,
                         initial_value=E0)


def _check_ur_poles(k, lam):
    if k <= 0:
        raise ConfigError("ultra-relativistic limit needs k > 0")
    if abs(2 * k - abs(lam)) <= POLE_GUARD * 2 * k:
        raise PoleError(f"lambda={lam} too close to 2k={2 * k}")
    if abs(k - abs(lam)) <= POLE_GUARD * k:
        raise PoleError(f"lambda={lam} too close to k={k}")


def limit_E_ur_sinusoidal(m0: float, lam: float, k: float, times,
                          form: str = "physical") -> LimitSolution:
    """Steady ultra-relativistic ``E_pm`` for ``m = m0 sin(lam t)``.

    ``form="physical"`` gives ``E = i psi'/psi`` for the positive-frequency
    mode (matches the coupled solver); ``form="display"`` gives the same
    solution written for ``psi = exp(+i int E dt)``, which differs by
    ``t -> -t``.
    """
    _check_ur_poles(k, lam)
    if form not in ("physical", "display"):
        raise ConfigError(f"unknown form {form!r}")
    times = np.asarray(times, dtype=float)
    t = -times if form == "physical" else times
    d1 = 4 * k * k - lam * lam
    d2 = 4 * (k * k - lam * lam)
    s1, c1 = np.sin(lam * t), np.cos(lam * t)
    s2, c2 = np.sin(2 * lam * t), np.cos(2 * lam * t)
    common = (k + m0 * m0 / (4 * k) - k * m0 * m0 / d2 * c2
              + 1j * m0 * m0 * lam / d2 * s2)
    odd = m0 * lam * lam / d1 * s1 + 1j * 2 * k * m0 * lam / d1 * c1
    return LimitSolution(times, common + odd, common - odd, Regime.UR_SINUSOIDAL,
                         _ur_validity(m0, lam, k))


def ur_sinusoidal_offset(m0: float, lam: float, k: float) -> tuple[complex, complex]:
    """``E_pm(0) - k`` of the steady sinusoidal solution.

    This is the amplitude of the free ``exp(2ikt)`` oscillation that the
    bare ``int_0^t`` quadrature (``E0 = k``) carries relative to the steady
    closed form.
    """
    sol = limit_E_ur_sinusoidal(m0, lam, k, np.array([0.0]))
    return complex(sol.E_plus[0] - k), complex(sol.E_minus[0] - k)
