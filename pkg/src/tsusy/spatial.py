"""Spatial spinor ansatz and its reduction condition.

The ansatz ``chi_pm = e_pm exp(-k1 x1 -+ i k2 x2) f(x3)`` should satisfy

    chi_pm^dagger sigma^j d_j chi_mp = -k chi_pm^dagger chi_pm,   k = k1 + k2

so that the spatial part of the Dirac system collapses to the constant ``k``.
:func:`ansatz_residual` evaluates both sides on a box and reports the
normalized sup-norm of their difference.  With the standard Pauli matrices
the left side works out to ``(k2 - k1) exp(-2 k1 x1 +- 2i k2 x2) |f|**2``, so
the identity is exact for ``k2 = 0`` and fails otherwise; the residual is
measured, not assumed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NumericalError

__all__ = [
    "PAULI",
    "E_PLUS",
    "E_MINUS",
    "FKind",
    "ZProfile",
    "Box",
    "SpatialAnsatz",
    "AnsatzResidual",
    "fd4",
    "ansatz_residual",
    "basis_action_residuals",
]

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
E_PLUS = np.array([1, 0], dtype=complex)
E_MINUS = np.array([0, 1], dtype=complex)

MIN_COUNT = 16


class FKind(enum.Enum):
    CONSTANT = "constant"
    GAUSSIAN = "gaussian"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class ZProfile:
    """``f(x3)``: constant, ``exp(-(x3 - center)**2 / (2 width**2))`` or tabulated."""

    kind: FKind = FKind.CONSTANT
    value: float = 1.0
    width: float = 1.0
    center: float = 0.0
    samples: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind is FKind.GAUSSIAN and not self.width > 0:
            raise ConfigError("gaussian width must be positive")
        if self.kind is FKind.TABULATED:
            if len(self.samples) < 4:
                raise ConfigError("tabulated f needs at least 4 samples")
            z = np.array([s[0] for s in self.samples])
            if np.any(np.diff(z) <= 0):
                raise ConfigError("tabulated f abscissae must be strictly increasing")

    @classmethod
    def constant(cls, value: float = 1.0) -> ZProfile:
        return cls(FKind.CONSTANT, value=float(value))

    @classmethod
    def gaussian(cls, width: float, center: float = 0.0, value: float = 1.0) -> ZProfile:
        return cls(FKind.GAUSSIAN, value=float(value), width=float(width), center=float(center))

    @classmethod
    def tabulated(cls, z, f) -> ZProfile:
        return cls(FKind.TABULATED, samples=tuple(zip(np.asarray(z, float).tolist(),
                                                      np.asarray(f, float).tolist())))

    @cached_property
    def _spline(self) -> CubicSpline:
        z, f = np.array(self.samples).T
        return CubicSpline(z, f)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind is FKind.CONSTANT:
            return self.value * np.ones_like(z)
        if self.kind is FKind.GAUSSIAN:
            return self.value * np.exp(-0.5 * ((z - self.center) / self.width) ** 2)
        lo, hi = self.samples[0][0], self.samples[-1][0]
        if np.any(z < lo) or np.any(z > hi):
            raise ConfigError("region leaves the tabulated f range")
        return self._spline(z)

    def scaled(self, c: float) -> ZProfile:
        if self.kind is FKind.TABULATED:
            return ZProfile.tabulated([s[0] for s in self.samples],
                                      [c * s[1] for s in self.samples])
        return ZProfile(self.kind, self.value * c, self.width, self.center)


@dataclass(frozen=True)
class Box:
    lower: tuple[float, float, float] = (0.0, 0.0, 0.0)
    upper: tuple[float, float, float] = (1.0, 1.0, 1.0)
    counts: tuple[int, int, int] = (32, 32, 32)

    def __post_init__(self):
        if len(self.lower) != 3 or len(self.upper) != 3 or len(self.counts) != 3:
            raise ConfigError("box needs three axes")
        if any(not hi > lo for lo, hi in zip(self.lower, self.upper)):
            raise ConfigError("degenerate region: every axis needs upper > lower")
        if any(n < MIN_COUNT for n in self.counts):
            raise ConfigError(f"sample counts must be >= {MIN_COUNT} per axis")

    def axes(self):
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, self.counts)]

    def refined(self, factor: int) -> Box:
        return Box(self.lower, self.upper, tuple((n - 1) * factor + 1 for n in self.counts))


@dataclass(frozen=True)
class SpatialAnsatz:
    k1: float
    k2: float = 0.0
    f: ZProfile = field(default_factory=ZProfile)
    region: Box = field(default_factory=Box)

    @property
    def k(self) -> float:
        return self.k1 + self.k2


class AnsatzResidual(NamedTuple):
    residual_plus: float
    residual_minus: float


def fd4(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order first derivative along ``axis`` (one-sided 5-point stencils at the ends)."""
    v = np.moveaxis(values, axis, 0)
    n = v.shape[0]
    if n < 5:
        raise ConfigError("fd4 needs at least 5 points along the axis")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / 12
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / 12
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / 12
    d[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / 12
    d[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / 12
    return np.moveaxis(d / h, 0, axis)


def _chi(ansatz: SpatialAnsatz, sign: int, X, Y, fz):
    scalar = np.exp(-ansatz.k1 * X - sign * 1j * ansatz.k2 * Y) * fz
    basis = E_PLUS if sign > 0 else E_MINUS
    return scalar[..., None] * basis


def ansatz_residual(ansatz: SpatialAnsatz, method: str = "analytic") -> AnsatzResidual:
    """Normalized sup-norm of ``chi_pm^dag sigma^j d_j chi_mp + k chi_pm^dag chi_pm``.

    ``method="analytic"`` differentiates the exponential factors exactly and
    uses :func:`fd4` only for a tabulated ``f``; ``method="fd"`` applies
    :func:`fd4` on every axis (used to measure convergence).
    """
    if method not in ("analytic", "fd"):
        raise ConfigError(f"unknown method {method!r}")
    x, y, z = ansatz.region.axes()
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    fz = ansatz.f(Z)
    if not np.all(np.isfinite(fz)):
        raise ConfigError("f is not bounded on the region")
    hs = [a[1] - a[0] for a in (x, y, z)]
    out = []
    for sign in (1, -1):
        chi = _chi(ansatz, sign, X, Y, fz)
        partner = _chi(ansatz, -sign, X, Y, fz)
        if method == "fd":
            grads = [fd4(partner, h, axis) for axis, h in enumerate(hs)]
        else:
            # partner carries exp(-k1 x +- i k2 y): d_x -> -k1, d_y -> +-i k2
            df = fd4(fz, hs[2], 2) if ansatz.f.kind is FKind.TABULATED \
                else _df_analytic(ansatz.f, Z)
            scalar = partner[..., 0] + partner[..., 1]
            basis = E_MINUS if sign > 0 else E_PLUS
            grads = [-ansatz.k1 * partner,
                     sign * 1j * ansatz.k2 * partner,
                     (scalar / np.where(fz == 0, 1, fz) * df)[..., None] * basis]
        lhs = sum(np.einsum("...a,ab,...b->...", chi.conj(), s, g) for s, g in zip(PAULI, grads))
        density = np.einsum("...a,...a->...", chi.conj(), chi).real
        scale = np.max(density)
        if not scale > 0:
            raise NumericalError("f underflows everywhere on the region")
        out.append(float(np.max(np.abs(lhs + ansatz.k * density)) / scale))
    return AnsatzResidual(*out)


def _df_analytic(f: ZProfile, Z):
    if f.kind is FKind.CONSTANT:
        return np.zeros_like(Z)
    return -(Z - f.center) / f.width ** 2 * f(Z)


def basis_action_residuals() -> dict:
    """Max deviations of the Pauli action on ``e_pm`` from the standard relations.

    ``sigma1 e_mp = e_pm``, ``sigma2 e_mp = -+i e_pm``, ``sigma3 e_pm = +-e_pm``,
    plus orthonormality of the basis.
    """
    s1, s2, s3 = PAULI
    checks = {
        "sigma1": max(np.max(np.abs(s1 @ E_MINUS - E_PLUS)), np.max(np.abs(s1 @ E_PLUS - E_MINUS))),
        "sigma2": max(np.max(np.abs(s2 @ E_MINUS + 1j * E_PLUS)),
                      np.max(np.abs(s2 @ E_PLUS - 1j * E_MINUS))),
        "sigma3": max(np.max(np.abs(s3 @ E_PLUS - E_PLUS)), np.max(np.abs(s3 @ E_MINUS + E_MINUS))),
        "orthonormal": max(abs(E_PLUS.conj() @ E_PLUS - 1), abs(E_MINUS.conj() @ E_MINUS - 1),
                           abs(E_PLUS.conj() @ E_MINUS)),
    }
    return {key: float(v) for key, v in checks.items()}
