"""Mode functions psi_pm(t) and log-derivatives E_pm(t) by three routes.

Route A (:func:`solve_coupled`) integrates the linear first-order pair and
is the reference.  Route B (:func:`solve_riccati`) integrates the nonlinear
Riccati equation for each ``E_pm`` separately, falling back to the linear
second-order form around zeros of ``psi``.  Route C
(:func:`solve_second_order`) integrates ``H_pm psi_pm = k**2 psi_pm``.

Conventions
-----------
Wick (imaginary time), the form in which the supersymmetric structure reads
``Q_pm psi_pm = k psi_mp`` with ``Q_pm = d/dt -+ m``::

    psi_pm' = +-m psi_pm + k psi_mp
    E = -psi'/psi,  E' - E**2 + k**2 = W_pm

Physical time, obtained by the inverse rotation::

    i psi_pm' = +-m psi_pm + k psi_mp
    E = i psi'/psi,  i E' = k**2 + m**2 +- i dm/dt - E**2
    psi_pm'' = -(k**2 + m**2 +- i dm/dt) psi_pm

With constant mass the Riccati fixed points are ``E**2 = k**2 + m**2`` and at
``k = 0`` the branches decouple into ``psi_pm = exp(-+ i int m dt)``.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from . import _integrator
from .errors import ConfigError, ExtremeHierarchyError, NumericalError, TsusyError
from .profiles import MassProfile, ProfileKind

__all__ = [
    "Convention",
    "ICMode",
    "Producer",
    "ScenarioParams",
    "ModeTrajectory",
    "initial_state",
    "log_derivatives",
    "solve_coupled",
    "solve_riccati",
    "solve_second_order",
    "consistency_report",
    "relative_sup_deviation",
]

log = logging.getLogger(__name__)

# phase budget beyond which direct integration is refused
MAX_PHASE = 2 * math.pi * 1e7
# Riccati -> linear switch at |E| > POLE_ENTER * scale, back below POLE_EXIT * scale
POLE_ENTER = 1e6
POLE_EXIT = 1e3
MIN_MODULUS = 1e-300
# rel_tol/abs_tol are global accuracy targets; the per-step tolerance handed to the
# Dormand-Prince kernel is tighter because local errors accumulate over many periods
LOCAL_TOL_FACTOR = 1e-4
LOCAL_RTOL_FLOOR = 2e-15


class Convention(enum.Enum):
    WICK = "wick"
    PHYSICAL = "physical"


class ICMode(enum.Enum):
    UNIT_PAIR = "unit_pair"
    PURE_BRANCH = "pure_branch"


class Producer(enum.Enum):
    COUPLED = "coupled"
    RICCATI = "riccati"
    SECOND_ORDER = "second_order"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class ScenarioParams:
    profile: MassProfile
    k: float
    t_span: tuple[float, float]
    convention: Convention = Convention.PHYSICAL
    ic_mode: ICMode = ICMode.UNIT_PAIR
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_samples: int = 2001

    def __post_init__(self):
        object.__setattr__(self, "convention", Convention(self.convention))
        object.__setattr__(self, "ic_mode", ICMode(self.ic_mode))
        object.__setattr__(self, "t_span", (float(self.t_span[0]), float(self.t_span[1])))
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ConfigError(f"k must be finite and >= 0, got {self.k}")
        if not 1e-13 <= self.rel_tol <= 1e-3:
            raise ConfigError(f"rel_tol {self.rel_tol} outside [1e-13, 1e-3]")
        if not self.abs_tol > 0:
            raise ConfigError("abs_tol must be positive")
        t0, t1 = self.t_span
        if not t1 > t0:
            raise ConfigError("t_span must be increasing (no backward integration)")
        if self.max_samples < 3:
            raise ConfigError("max_samples must be >= 3")
        self.profile.check_domain([t0, t1])

    @property
    def times(self) -> np.ndarray:
        return np.linspace(*self.t_span, self.max_samples)

    @property
    def mass_scale(self) -> float:
        p = self.profile
        if p.kind is ProfileKind.TABULATED:
            return max(abs(s[1]) for s in p.samples)
        return abs(p.m0)

    @property
    def energy_scale(self) -> float:
        return max(self.k, self.mass_scale)


@dataclass
class ModeTrajectory:
    times: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    E_plus: np.ndarray
    E_minus: np.ndarray
    producer: Producer
    params: ScenarioParams
    poles: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def norm_defect(self) -> float:
        """``sup | |psi_+|**2 + |psi_-|**2 - 2 |``."""
        return float(np.max(np.abs(np.abs(self.psi_plus) ** 2 + np.abs(self.psi_minus) ** 2 - 2)))


# -- helpers --------------------------------------------------------------

def _guard_hierarchy(params: ScenarioParams) -> None:
    t0, t1 = params.t_span
    phase = params.energy_scale * (t1 - t0)
    if params.convention is Convention.PHYSICAL and phase > MAX_PHASE:
        raise ExtremeHierarchyError(
            f"scenario spans ~{phase / (2 * math.pi):.3g} oscillation cycles; "
            "use the closed forms (tsusy.approx / probability_closed_form) instead")
    if params.convention is Convention.WICK and phase > 650:
        raise ExtremeHierarchyError(
            f"Wick growth exp({phase:.3g}) exceeds floating range; shorten t_span")


def initial_state(params: ScenarioParams) -> tuple[complex, complex]:
    """``(psi_plus(t0), psi_minus(t0))`` for the configured ``ic_mode``."""
    if params.ic_mode is ICMode.UNIT_PAIR:
        return 1.0 + 0j, 1.0 + 0j
    k = params.k
    m = params.profile.mass(params.t_span[0])
    E = math.sqrt(k * k + m * m)
    if params.convention is Convention.PHYSICAL:
        # (i d/dt - m) psi_+ = k psi_- on exp(-iEt)
        if k == 0:
            return 1.0 + 0j, 0j
        return 1.0 + 0j, complex((E - m) / k)
    # decaying Wick mode exp(-Et): (d/dt - m) psi_+ = k psi_-
    if k == 0:
        raise ConfigError("pure-branch Wick initial state needs k > 0")
    return 1.0 + 0j, complex(-(E + m) / k)


def _coupled_derivative(params: ScenarioParams, t, psi_plus, psi_minus):
    m = params.profile._mass(t)
    k = params.k
    dp = m * psi_plus + k * psi_minus
    dm = -m * psi_minus + k * psi_plus
    if params.convention is Convention.PHYSICAL:
        return -1j * dp, -1j * dm
    return dp, dm


def log_derivatives(convention: Convention, psi, dpsi):
    """``E = i psi'/psi`` (physical) or ``-psi'/psi`` (Wick); NaN where ``|psi| <= 1e-12``."""
    psi = np.asarray(psi, dtype=complex)
    dpsi = np.asarray(dpsi, dtype=complex)
    out = np.full(psi.shape, np.nan + 0j)
    ok = np.abs(psi) > 1e-12
    ratio = dpsi[ok] / psi[ok]
    out[ok] = 1j * ratio if Convention(convention) is Convention.PHYSICAL else -ratio
    return out


def _check_moduli(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(np.abs(a))):
            raise NumericalError("mode function overflowed")


def _integrate(system, params: ScenarioParams, t_start, y0, t_out, sign=1, threshold=math.inf):
    physical = params.convention is Convention.PHYSICAL
    y_out, filled, t_end, y_end, status, nfev, _ = _integrator.run(
        system, t_start, params.t_span[1], y0, t_out, params.profile, physical=physical,
        k=params.k, rtol=max(params.rel_tol * LOCAL_TOL_FACTOR, LOCAL_RTOL_FLOOR),
        atol=params.abs_tol * LOCAL_TOL_FACTOR, sign=sign, threshold=threshold)
    if status == _integrator.STATUS_FAILED:
        raise NumericalError(f"integrator failed near t={t_end:.6g} (step size collapse)")
    return y_out[:filled], t_end, y_end, status, nfev


# -- route A --------------------------------------------------------------

def solve_coupled(params: ScenarioParams, psi0=None) -> ModeTrajectory:
    """Integrate the coupled first-order pair (the reference route)."""
    _guard_hierarchy(params)
    psi0 = initial_state(params) if psi0 is None else tuple(complex(v) for v in psi0)
    times = params.times
    y, *_, nfev = _integrate(_integrator.SYS_COUPLED, params, times[0], psi0, times)
    psi_p, psi_m = y[:, 0], y[:, 1]
    _check_moduli(psi_p, psi_m)
    if np.min(np.maximum(np.abs(psi_p), np.abs(psi_m))) < MIN_MODULUS:
        raise NumericalError("mode functions underflowed below 1e-300")
    d_p, d_m = _coupled_derivative(params, times, psi_p, psi_m)
    return ModeTrajectory(
        times, psi_p, psi_m,
        log_derivatives(params.convention, psi_p, d_p),
        log_derivatives(params.convention, psi_m, d_m),
        Producer.COUPLED, params, stats={"nfev": nfev})


# -- route C --------------------------------------------------------------

def _initial_derivatives(params: ScenarioParams, psi0):
    d = _coupled_derivative(params, params.t_span[0], psi0[0], psi0[1])
    return complex(d[0]), complex(d[1])


def solve_second_order(params: ScenarioParams, ic=None) -> ModeTrajectory:
    """Integrate ``psi_pm'' = c_pm(t) psi_pm`` for both branches.

    Physical: ``c_pm = -(k**2 + m**2 +- i dm/dt)``; Wick: ``c_pm = k**2 - W_pm``.
    ``ic`` is ``((psi_plus0, dpsi_plus0), (psi_minus0, dpsi_minus0))``; by
    default both values and slopes are lifted from the coupled system's
    initial state.
    """
    _guard_hierarchy(params)
    if ic is None:
        psi0 = initial_state(params)
        dpsi0 = _initial_derivatives(params, psi0)
        ic = ((psi0[0], dpsi0[0]), (psi0[1], dpsi0[1]))
    y0 = np.array([ic[0][0], ic[0][1], ic[1][0], ic[1][1]], dtype=complex)
    times = params.times
    y, *_, nfev = _integrate(_integrator.SYS_SECOND_ORDER, params, times[0], y0, times)
    _check_moduli(y)
    return ModeTrajectory(
        times, y[:, 0], y[:, 2],
        log_derivatives(params.convention, y[:, 0], y[:, 1]),
        log_derivatives(params.convention, y[:, 2], y[:, 3]),
        Producer.SECOND_ORDER, params, stats={"nfev": nfev})


# -- route B --------------------------------------------------------------

def _riccati_branch(params: ScenarioParams, sign: int, E0: complex, psi0: complex):
    """One Riccati branch with pole switching.

    The state is ``(E, log psi)``.  When ``|E|`` passes ``POLE_ENTER * scale``
    the branch continues on the linear pair ``(psi, psi')`` (normalized to
    ``psi = 1`` at the switch) until ``|psi'/psi|`` drops below
    ``POLE_EXIT * scale``.  Returns ``(psi, E, poles, nfev)`` on
    ``params.times``.
    """
    physical = params.convention is Convention.PHYSICAL
    scale = params.energy_scale or 1.0
    enter, leave = POLE_ENTER * scale, POLE_EXIT * scale
    times = params.times
    t1 = params.t_span[1]
    if not np.isfinite(E0):
        raise ConfigError("E0 must be finite")
    if abs(E0) >= enter:
        raise ConfigError(f"E0={E0} starts at a pole (|E0| >= {enter:g})")
    if psi0 == 0:
        raise ConfigError("psi0 must be nonzero on the Riccati route")

    psi_out = np.full(times.shape, np.nan + 0j)
    E_out = np.full(times.shape, np.nan + 0j)
    poles, nfev = [], 0
    t, E, L = times[0], complex(E0), complex(np.log(complex(psi0)))
    first = True
    while True:
        mask = (times >= t) if first else (times > t)
        idx = np.flatnonzero(mask)
        y, t_end, y_end, status, n = _integrate(
            _integrator.SYS_RICCATI, params, t, np.array([E, L]), times[idx],
            sign=sign, threshold=enter)
        nfev += n
        first = False
        filled = idx[:len(y)]
        E_out[filled], psi_out[filled] = y[:, 0], np.exp(y[:, 1])
        if status != _integrator.STATUS_STOPPED or t_end >= t1:
            break
        E, L = complex(y_end[0]), complex(y_end[1])
        slope = -1j * E if physical else -E
        idx = np.flatnonzero(times > t_end)
        y, t_back, y_end, status, n = _integrate(
            _integrator.SYS_LINEAR, params, t_end, np.array([1.0 + 0j, slope]), times[idx],
            sign=sign, threshold=leave)
        nfev += n
        filled = idx[:len(y)]
        psi_out[filled] = np.exp(L) * y[:, 0]
        E_out[filled] = log_derivatives(params.convention, y[:, 0], y[:, 1])
        poles.append((float(t_end), float(t_back)))
        log.debug("Riccati branch %+d: linear segment [%g, %g]", sign, t_end, t_back)
        if status != _integrator.STATUS_STOPPED or t_back >= t1:
            break
        u, du = complex(y_end[0]), complex(y_end[1])
        L = L + np.log(u)
        E = 1j * du / u if physical else -du / u
        t = t_back
    _check_moduli(psi_out, E_out[np.isfinite(E_out)])
    return psi_out, E_out, poles, nfev


def solve_riccati(params: ScenarioParams, E0, psi0=(1.0, 1.0)) -> ModeTrajectory:
    """Integrate the Riccati equations for ``E_plus`` and ``E_minus``.

    Each branch is independent; ``psi`` is recovered alongside as
    ``psi0 * exp(-i int E)`` (physical) or ``psi0 * exp(-int E)`` (Wick).
    Intervals integrated in the linear representation (around zeros of
    ``psi``) are listed in ``poles`` as ``(sign, t_enter, t_leave)``.
    """
    _guard_hierarchy(params)
    E0 = tuple(complex(e) for e in E0)
    out, poles, nfev = {}, [], 0
    for sign, e0, p0 in ((+1, E0[0], psi0[0]), (-1, E0[1], psi0[1])):
        psi, E, branch_poles, n = _riccati_branch(params, sign, e0, complex(p0))
        out[sign] = (psi, E)
        poles += [(sign, a, b) for a, b in branch_poles]
        nfev += n
    return ModeTrajectory(params.times, out[1][0], out[-1][0], out[1][1], out[-1][1],
                          Producer.RICCATI, params, poles=poles, stats={"nfev": nfev})


# -- cross-validation -----------------------------------------------------

def relative_sup_deviation(a, b) -> float:
    """``max|a - b| / max|a|`` ignoring NaN samples."""
    a, b = np.asarray(a), np.asarray(b)
    ok = np.isfinite(a) & np.isfinite(b)
    if not np.any(ok):
        return math.nan
    denom = np.max(np.abs(a[ok]))
    diff = np.max(np.abs(a[ok] - b[ok]))
    return float(diff / denom) if denom > 0 else float(diff)


def consistency_report(params: ScenarioParams) -> dict:
    """Run all three routes with matched initial data and compare them.

    Deviations are relative sup-norms against route A.  Route failures are
    recorded under ``errors`` instead of being raised.  ``passed`` checks
    every deviation against ``100 * rel_tol``.
    """
    start = time.perf_counter()
    trajectories, errors = {}, {}
    try:
        trajectories["coupled"] = solve_coupled(params)
    except TsusyError as exc:
        errors["coupled"] = f"{type(exc).__name__}: {exc}"
    psi0 = initial_state(params) if "coupled" not in errors else None
    if psi0 is not None:
        a = trajectories["coupled"]
        E0 = (a.E_plus[0], a.E_minus[0])
        for name, fn in (("riccati", lambda: solve_riccati(params, E0, psi0)),
                         ("second_order", lambda: solve_second_order(params))):
            try:
                trajectories[name] = fn()
            except TsusyError as exc:
                errors[name] = f"{type(exc).__name__}: {exc}"

    deviations = {}
    names = list(trajectories)
    for i, n1 in enumerate(names):
        for n2 in names[i + 1:]:
            t1, t2 = trajectories[n1], trajectories[n2]
            for q in ("psi_plus", "psi_minus", "E_plus", "E_minus"):
                deviations[f"{n1}/{n2}:{q}"] = relative_sup_deviation(getattr(t1, q), getattr(t2, q))
    limit = 100 * params.rel_tol
    poles = trajectories["riccati"].poles if "riccati" in trajectories else []
    return {
        "deviations": deviations,
        "max_deviation": max(deviations.values(), default=math.nan),
        "tolerance": limit,
        "passed": not errors and len(trajectories) == 3
                  and all(v <= limit for v in deviations.values()),
        "poles": poles,
        "errors": errors,
        "norm_defect": trajectories["coupled"].norm_defect() if "coupled" in trajectories else math.nan,
        "runtime_s": time.perf_counter() - start,
        "trajectories": trajectories,
    }
