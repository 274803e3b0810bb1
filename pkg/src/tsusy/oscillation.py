"""Two-state mixing and transition probabilities.

With ``E = i psi'/psi`` the mode functions are
``psi_pm(t) = psi_pm(t0) exp(-i int E_pm)``, and the transition probability
between the mixed states is

    P = sin(2 theta)**2 * exp(alpha) * (sinh(beta)**2 + sin(rho)**2)

    alpha = int (Im E_minus + Im E_plus)
    beta  = 1/2 int (Im E_minus - Im E_plus)
    rho   = 1/2 int (Re E_minus - Re E_plus)

which is ``|Amp|**2`` for the amplitude computed by
:func:`transition_amplitude`.  ``exp(alpha) = |psi_plus psi_minus|`` (for unit
initial values) so the sign of the exponent is tied to the ``E = i psi'/psi``
convention; with ``psi = exp(+i int E)`` it flips.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import ConfigError, DomainError, PoleError
from .profiles import MassProfile, ProfileKind

__all__ = [
    "Source",
    "ClosedFormMode",
    "MixingConfig",
    "BlockRotation",
    "OscillationResult",
    "mix_states",
    "transition_amplitude",
    "amplitude_from_trajectory",
    "probability_from_E",
    "probability_from_trajectory",
    "probability_closed_form",
    "assemble_probability",
    "refine_peak",
]

# "<<" in the reduced-formula regime is read as a ratio below this
REGIME_RATIO = 0.1
POLE_GUARD = 1e-6


class Source(enum.Enum):
    FROM_E = "FromE"
    CLOSED_FORM_MASSIVE = "ClosedFormMassive"
    CLOSED_FORM_UR_FULL = "ClosedFormURFull"
    CLOSED_FORM_UR_REDUCED = "ClosedFormURReduced"


class ClosedFormMode(enum.Enum):
    MASSIVE = "Massive"
    UR_FULL = "URFull"
    UR_REDUCED = "URReduced"


_MODE_SOURCE = {
    ClosedFormMode.MASSIVE: Source.CLOSED_FORM_MASSIVE,
    ClosedFormMode.UR_FULL: Source.CLOSED_FORM_UR_FULL,
    ClosedFormMode.UR_REDUCED: Source.CLOSED_FORM_UR_REDUCED,
}


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 <= theta <= math.pi / 2):
        raise DomainError(f"mixing angle {theta} outside [0, pi/2]")
    return theta


@dataclass(frozen=True)
class MixingConfig:
    theta: float

    def __post_init__(self):
        _check_theta(self.theta)

    @property
    def sin2_2theta(self) -> float:
        return math.sin(2 * self.theta) ** 2

    @classmethod
    def from_sin2_2theta(cls, value: float) -> MixingConfig:
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"sin^2(2 theta) = {value} outside [0, 1]")
        return cls(0.5 * math.asin(math.sqrt(value)))


@dataclass(frozen=True)
class BlockRotation:
    """Rotation ``[[c, s], [-s, c]]`` acting on (psi_1, psi_2) bi-spinor blocks."""

    theta: float

    @property
    def blocks(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, s], [-s, c]])

    def matrix(self, spinor_dim: int = 2) -> np.ndarray:
        """Full matrix with each block scaled by the ``spinor_dim`` identity."""
        return np.kron(self.blocks, np.eye(spinor_dim))

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.blocks))

    def apply(self, first, second):
        R = self.blocks
        first, second = np.asarray(first), np.asarray(second)
        return R[0, 0] * first + R[0, 1] * second, R[1, 0] * first + R[1, 1] * second


def mix_states(theta: float) -> BlockRotation:
    return BlockRotation(_check_theta(theta))


def transition_amplitude(theta: float, psi_plus, psi_minus) -> np.ndarray:
    """``sin(2 theta) [psi_plus*(t0) psi_plus(t) - psi_minus*(t0) psi_minus(t)] / 2``."""
    theta = _check_theta(theta)
    psi_plus = np.asarray(psi_plus, dtype=complex)
    psi_minus = np.asarray(psi_minus, dtype=complex)
    if psi_plus.shape != psi_minus.shape or psi_plus.ndim != 1:
        raise ConfigError("psi_plus and psi_minus must be aligned 1-D sequences")
    if psi_plus.size == 0:
        raise ConfigError("empty sequences")
    if psi_plus[0] == 0 or psi_minus[0] == 0:
        raise ConfigError("psi must be non-zero at t0")
    return 0.5 * math.sin(2 * theta) * (np.conj(psi_plus[0]) * psi_plus
                                        - np.conj(psi_minus[0]) * psi_minus)


def amplitude_from_trajectory(theta: float, trajectory) -> np.ndarray:
    """Amplitude after renormalizing each branch to ``psi(t0) = 1``."""
    psi_plus = np.asarray(trajectory.psi_plus, dtype=complex)
    psi_minus = np.asarray(trajectory.psi_minus, dtype=complex)
    if psi_plus[0] == 0 or psi_minus[0] == 0:
        raise ConfigError("psi must be non-zero at t0")
    return transition_amplitude(theta, psi_plus / psi_plus[0], psi_minus / psi_minus[0])


@dataclass
class OscillationResult:
    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    rho: np.ndarray
    probability: np.ndarray
    source: Source
    theta: float
    exceeds_unity: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def peak(self) -> tuple[float, float]:
        """``(max P, time of the first crest)``.

        The first sample within ``PEAK_REL_TOL`` of the maximum is taken (equal
        crests differ only by solver noise) and refined by a parabola through
        its neighbours.
        """
        return refine_peak(self.times, self.probability)


PEAK_REL_TOL = 1e-6


def _parabola_vertex(times, values, i):
    x = times[i - 1:i + 2]
    a, b, c = np.polyfit(x - x[1], values[i - 1:i + 2], 2)
    if a >= 0:
        return float(values[i]), float(times[i])
    dx = -b / (2 * a)
    if abs(dx) > max(x[2] - x[1], x[1] - x[0]):
        return float(values[i]), float(times[i])
    return float(c - b * b / (4 * a)), float(x[1] + dx)


def refine_peak(times, values) -> tuple[float, float]:
    """``(max, location)`` of the first crest within ``PEAK_REL_TOL`` of the highest.

    Every interior local maximum is refined by a parabola through its
    neighbours before the crests are compared.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    interior = np.flatnonzero((values[1:-1] >= values[:-2]) & (values[1:-1] > values[2:])) + 1
    crests = [_parabola_vertex(times, values, i) for i in interior]
    for i in (0, values.size - 1):
        crests.append((float(values[i]), float(times[i])))
    top = max(c[0] for c in crests)
    close = [c for c in crests if c[0] >= top - PEAK_REL_TOL * abs(top)]
    return min(close, key=lambda c: c[1])


def assemble_probability(sin2_2theta, alpha, beta, rho) -> np.ndarray:
    return sin2_2theta * np.exp(alpha) * (np.sinh(beta) ** 2 + np.sin(rho) ** 2)


def _finish(times, alpha, beta, rho, P, source, theta, metadata=None) -> OscillationResult:
    exceeds = bool(np.any(P > 1.0))
    return OscillationResult(times, alpha, beta, rho, P, source, theta, exceeds,
                             metadata or {})


def probability_from_E(theta: float, E_plus, E_minus, times) -> OscillationResult:
    """General probability from sampled ``E_pm``.

    The cumulative integrals use composite Simpson on the given samples.
    ``P > 1`` is reported as computed and flagged with ``exceeds_unity``.
    """
    theta = _check_theta(theta)
    E_plus = np.asarray(E_plus, dtype=complex)
    E_minus = np.asarray(E_minus, dtype=complex)
    times = np.asarray(times, dtype=float)
    if not (E_plus.shape == E_minus.shape == times.shape) or times.ndim != 1:
        raise ConfigError("E_plus, E_minus and times must be aligned 1-D sequences")
    if times.size < 3:
        raise ConfigError("need at least 3 samples")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("times must be strictly increasing")
    if not (np.all(np.isfinite(E_plus)) and np.all(np.isfinite(E_minus))):
        raise ConfigError("E samples must be finite")

    integrands = np.stack([E_minus.imag + E_plus.imag, E_minus.imag - E_plus.imag,
                           E_minus.real - E_plus.real])
    alpha, beta, rho = cumulative_simpson(integrands, x=times, initial=0.0) * [[1.0], [0.5], [0.5]]
    P = assemble_probability(math.sin(2 * theta) ** 2, alpha, beta, rho)
    return _finish(times, alpha, beta, rho, P, Source.FROM_E, theta)


def probability_from_trajectory(theta: float, trajectory) -> OscillationResult:
    return probability_from_E(theta, trajectory.E_plus, trajectory.E_minus, trajectory.times)


def _ur_parameters(profile, m0, lam, k):
    if profile is not None:
        if profile.kind is not ProfileKind.SINUSOIDAL:
            raise ConfigError("ultra-relativistic closed forms need a sinusoidal profile")
        m0, lam = profile.m0, profile.lam
    if m0 is None or lam is None or k is None:
        raise ConfigError("ultra-relativistic closed forms need m0, lambda and k")
    if not k > 0:
        raise ConfigError("k must be positive")
    return float(m0), float(lam), float(k)


def probability_closed_form(mode, theta: float, times, *, profile: MassProfile | None = None,
                            m0: float | None = None, lam: float | None = None,
                            k: float | None = None) -> OscillationResult:
    """Closed-form probabilities.

    ``Massive``
        ``sin2(2 theta) sin2(int_{t0}^t m)``; needs ``profile``.
    ``URFull``
        the full sinusoidal-mass expression in ``m0, lam, k`` (time origin at
        the start of the profile, ``t = 0``).
    ``URReduced``
        ``sin2(2 theta) (m0/2k)**2 sin2(lam t)``; the regime ratios
        ``lam/m0`` and ``m0/k`` go into ``metadata``.
    """
    mode = ClosedFormMode(mode)
    theta = _check_theta(theta)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigError("times must be a non-empty 1-D sequence")
    s2 = math.sin(2 * theta) ** 2
    zeros = np.zeros_like(times)
    source = _MODE_SOURCE[mode]

    if mode is ClosedFormMode.MASSIVE:
        if profile is None:
            raise ConfigError("massive closed form needs a profile")
        rho = -np.asarray(profile.mass_integral(times[0], times), dtype=float)
        P = s2 * np.sin(rho) ** 2
        return _finish(times, zeros, zeros.copy(), rho, P, source, theta)

    m0, lam, k = _ur_parameters(profile, m0, lam, k)
    if mode is ClosedFormMode.UR_FULL:
        if abs(4 * k * k - lam * lam) <= POLE_GUARD * 4 * k * k:
            raise PoleError(f"lambda={lam} too close to 2k={2 * k}")
        if abs(k * k - lam * lam) <= POLE_GUARD * k * k:
            raise PoleError(f"lambda={lam} too close to k={k}")
        d1 = 4 * k * k - lam * lam
        alpha = m0 * m0 / (4 * (lam * lam - k * k)) * (np.cos(2 * lam * times) - 1)
        beta = 2 * k * m0 / d1 * np.sin(lam * times)
        rho = m0 * lam / d1 * (np.cos(lam * times) - 1)
        P = assemble_probability(s2, alpha, beta, rho)
        return _finish(times, alpha, beta, rho, P, source, theta)

    beta = m0 / (2 * k) * np.sin(lam * times)
    P = s2 * beta ** 2
    ratios = {"lambda_over_m0": lam / m0 if m0 else math.inf, "m0_over_k": m0 / k}
    meta = dict(ratios, regime_ok=all(v < REGIME_RATIO for v in ratios.values()))
    return _finish(times, zeros, beta, zeros.copy(), P, source, theta, meta)
