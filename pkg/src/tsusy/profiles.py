"""Time-dependent mass profiles and the quantities derived from them.

A :class:`MassProfile` describes ``m(t)`` in natural units (energies in eV,
times in 1/eV).  From it we get the superpotential pair

    W_plus  = -dm/dt - m**2
    W_minus = +dm/dt - m**2

and the refraction-index analogue ``n = (k**2 - W)**(-1/2)`` of the bosonic
second-order form.
"""

from __future__ import annotations

import csv
import enum
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError, PoleError

__all__ = [
    "ProfileKind",
    "MassProfile",
    "SuperpotentialPair",
    "RefractionIndices",
    "evaluate_profile",
    "superpotentials",
    "refraction_indices",
    "parse_profile_spec",
]

# relative slack on domain endpoints so that linspace grids ending at pi/lambda pass
_DOMAIN_SLACK = 1e-12


class ProfileKind(enum.Enum):
    CONSTANT = "constant"
    SINUSOIDAL = "sinusoidal"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class MassProfile:
    """Declarative mass profile ``m(t)``.

    Use the constructors :meth:`constant`, :meth:`sinusoidal`,
    :meth:`tabulated` or :meth:`from_csv` rather than the raw initializer.

    Attributes
    ----------
    kind : ProfileKind
    m0 : float
        Constant mass, or the amplitude of the sinusoidal profile (eV).
    lam : float
        Angular frequency of the sinusoidal profile (eV); unused otherwise.
    samples : tuple of (t, m) pairs
        Only for tabulated profiles.
    """

    kind: ProfileKind
    m0: float = 0.0
    lam: float = 0.0
    samples: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not math.isfinite(self.m0) or not math.isfinite(self.lam):
            raise ConfigError("profile parameters must be finite")
        if self.kind is ProfileKind.SINUSOIDAL:
            if self.lam <= 0:
                raise ConfigError(f"sinusoidal profile needs lambda > 0, got {self.lam}")
            if self.m0 < 0:
                raise ConfigError(f"sinusoidal amplitude must be >= 0, got {self.m0}")
        elif self.kind is ProfileKind.TABULATED:
            if len(self.samples) < 4:
                raise ConfigError("tabulated profile needs at least 4 samples")
            t = np.array([s[0] for s in self.samples], dtype=float)
            m = np.array([s[1] for s in self.samples], dtype=float)
            if not np.all(np.isfinite(t)) or not np.all(np.isfinite(m)):
                raise ConfigError("tabulated samples must be finite")
            if np.any(np.diff(t) <= 0):
                raise ConfigError("tabulated sample times must be strictly increasing")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, m: float) -> MassProfile:
        return cls(ProfileKind.CONSTANT, m0=float(m))

    @classmethod
    def sinusoidal(cls, m0: float, lam: float) -> MassProfile:
        """``m(t) = m0 sin(lam t)`` restricted to ``0 <= t <= pi/lam``."""
        return cls(ProfileKind.SINUSOIDAL, m0=float(m0), lam=float(lam))

    @classmethod
    def tabulated(cls, times, masses) -> MassProfile:
        times = np.asarray(times, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if times.shape != masses.shape or times.ndim != 1:
            raise ConfigError("tabulated times and masses must be 1-D and equal length")
        return cls(ProfileKind.TABULATED,
                   samples=tuple(zip(times.tolist(), masses.tolist())))

    @classmethod
    def from_csv(cls, path) -> MassProfile:
        """Read a two-column ``t,m`` CSV (header row optional)."""
        path = Path(path)
        try:
            with path.open(newline="") as fh:
                rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        except OSError as exc:
            raise ConfigError(f"cannot read tabulated profile {path}: {exc}") from exc
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        try:
            times = [float(r[0]) for r in rows]
            masses = [float(r[1]) for r in rows]
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"malformed tabulated profile {path}: {exc}") from exc
        return cls.tabulated(times, masses)

    # -- domain -----------------------------------------------------------

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind is ProfileKind.SINUSOIDAL:
            return 0.0, math.pi / self.lam
        if self.kind is ProfileKind.TABULATED:
            return self.samples[0][0], self.samples[-1][0]
        return -math.inf, math.inf

    def check_domain(self, t) -> None:
        lo, hi = self.domain
        if not (math.isfinite(lo) or math.isfinite(hi)):
            return
        t = np.asarray(t, dtype=float)
        slack = _DOMAIN_SLACK * max(abs(lo), abs(hi), hi - lo)
        if np.any(t < lo - slack) or np.any(t > hi + slack) or np.any(np.isnan(t)):
            bad = t[(t < lo - slack) | (t > hi + slack) | np.isnan(t)].ravel()[0]
            raise DomainError(
                f"t={bad!r} outside {self.kind.value} profile domain [{lo}, {hi}]")

    # -- evaluation -------------------------------------------------------

    @cached_property
    def _spline(self) -> CubicSpline:
        t, m = np.array(self.samples).T
        return CubicSpline(t, m)

    @cached_property
    def _sample_times(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    def mass(self, t):
        """``m(t)`` for scalar or array ``t`` (domain checked)."""
        self.check_domain(t)
        return self._mass(t)

    def _mass(self, t):
        if self.kind is ProfileKind.CONSTANT:
            return self.m0 + 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else self.m0
        if self.kind is ProfileKind.SINUSOIDAL:
            return self.m0 * np.sin(self.lam * np.asarray(t, dtype=float)) if np.ndim(t) \
                else self.m0 * math.sin(self.lam * t)
        lo, hi = self.domain
        val = self._spline(np.clip(t, lo, hi))
        return val if np.ndim(t) else float(val)

    def rate(self, t):
        """``dm/dt`` for scalar or array ``t`` (domain checked)."""
        self.check_domain(t)
        return self._rate(t)

    def _rate(self, t):
        if self.kind is ProfileKind.CONSTANT:
            return 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else 0.0
        if self.kind is ProfileKind.SINUSOIDAL:
            return self.m0 * self.lam * np.cos(self.lam * np.asarray(t, dtype=float)) \
                if np.ndim(t) else self.m0 * self.lam * math.cos(self.lam * t)
        if np.ndim(t):
            return np.array([self._tab_rate(float(s)) for s in np.ravel(t)]).reshape(np.shape(t))
        return self._tab_rate(float(t))

    def _tab_rate(self, t: float) -> float:
        # finite difference of the interpolant with step = local sample spacing,
        # 4th order throughout: central in the interior, 5-point one-sided at the edges
        ts = self._sample_times
        lo, hi = ts[0], ts[-1]
        t = min(max(t, lo), hi)
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        h = ts[i + 1] - ts[i]
        f = self._spline
        if t - 2 * h >= lo and t + 2 * h <= hi:
            return float((-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h))
        side = 1.0 if t + 4 * h <= hi else -1.0 if t - 4 * h >= lo else 0.0
        if side:
            v = f(t + side * h * np.arange(5))
            return float(side * (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h))
        return float(f(t, 1))

    def mass_integral(self, t0, t):
        """``int_{t0}^{t} m(s) ds``, vectorized over ``t``."""
        self.check_domain(t0)
        self.check_domain(t)
        t = np.asarray(t, dtype=float)
        if self.kind is ProfileKind.CONSTANT:
            out = self.m0 * (t - t0)
        elif self.kind is ProfileKind.SINUSOIDAL:
            out = self.m0 * (math.cos(self.lam * t0) - np.cos(self.lam * t)) / self.lam
        else:
            anti = self._spline.antiderivative()
            out = anti(t) - anti(t0)
        return out if out.ndim else float(out)

    def spec(self) -> str:
        """Round-trippable text form understood by :func:`parse_profile_spec`."""
        if self.kind is ProfileKind.CONSTANT:
            return f"constant({self.m0!r})"
        if self.kind is ProfileKind.SINUSOIDAL:
            return f"sinusoidal({self.m0!r}, {self.lam!r})"
        return f"tabulated(<{len(self.samples)} samples>)"


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


class SuperpotentialPair(NamedTuple):
    w_plus: float
    w_minus: float
    evaluated_at: float


class RefractionIndices(NamedTuple):
    n_plus: complex
    n_minus: complex
    relation_residual: float


def evaluate_profile(profile: MassProfile, t):
    """Return ``(m(t), dm/dt)``."""
    profile.check_domain(t)
    return profile._mass(t), profile._rate(t)


def superpotentials(profile: MassProfile, t) -> SuperpotentialPair:
    m, rate = evaluate_profile(profile, t)
    m2 = m * m
    return SuperpotentialPair(-rate - m2, rate - m2, t)


def refraction_indices(profile: MassProfile, k: float, t: float) -> RefractionIndices:
    """Refraction indices ``n_pm = (k**2 - W_pm)**(-1/2)`` on the principal branch.

    The residual of ``1/n_plus**2 - 1/n_minus**2 = 2 dm/dt`` is reported
    alongside.
    """
    _, rate = evaluate_profile(profile, t)
    w = superpotentials(profile, t)
    inv_sq = []
    for wv in (w.w_plus, w.w_minus):
        d = k * k - wv
        if d == 0:
            raise PoleError(f"k**2 - W = 0 at t={t}: refraction index has a pole")
        inv_sq.append(complex(d))
    n_plus, n_minus = (1.0 / np.sqrt(d) for d in inv_sq)
    residual = abs(1.0 / n_plus**2 - 1.0 / n_minus**2 - 2.0 * rate)
    return RefractionIndices(complex(n_plus), complex(n_minus), float(residual))


_SPEC_RE = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def parse_profile_spec(text: str, base_dir=None) -> MassProfile:
    """Parse ``constant(m)``, ``sinusoidal(m0, lambda)`` or ``tabulated(path)``.

    Relative tabulated paths are resolved against ``base_dir`` when given.
    """
    match = _SPEC_RE.match(text)
    if not match:
        raise ConfigError(f"unparseable profile spec {text!r}")
    name, args = match.group(1).lower(), [a.strip() for a in match.group(2).split(",")]
    if name in ("constant", "sinusoidal"):
        try:
            values = [float(a) for a in args]
        except ValueError as exc:
            raise ConfigError(f"bad numeric argument in profile spec {text!r}") from exc
        if name == "constant" and len(values) == 1:
            return MassProfile.constant(values[0])
        if name == "sinusoidal" and len(values) == 2:
            return MassProfile.sinusoidal(*values)
    if name == "tabulated" and len(args) == 1 and args[0]:
        path = Path(args[0].strip("'\""))
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return MassProfile.from_csv(path)
    raise ConfigError(f"unknown profile spec {text!r}")
