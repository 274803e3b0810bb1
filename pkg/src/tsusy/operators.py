"""Discretized supercharges and partner Hamiltonians on a uniform time grid.

The supercharges ``Q_pm = d/dt -+ m(t)`` become banded matrices
``D -+ diag(m)`` where ``D`` is a first-difference matrix.  The partner
Hamiltonians are only ever formed as products ``H_pm = Q_mp @ Q_pm``, so the
super-algebra identities hold by block arithmetic and the discretization
error shows up only in ``H_pm - (D2 + diag(W_pm))``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .profiles import MassProfile, superpotentials

__all__ = [
    "Scheme",
    "Direction",
    "TimeGrid",
    "GridOperator",
    "AlgebraResiduals",
    "difference_matrix",
    "build_charge_operators",
    "partner_hamiltonians",
    "second_difference",
    "algebra_residuals",
    "hamiltonian_defect",
    "observed_order",
    "intertwine_partner",
]

# rows at each end touched by one-sided stencils once two first differences are multiplied
BOUNDARY_ROWS = 2


class Scheme(enum.Enum):
    FORWARD = "forward"
    CENTRAL = "central"


class Direction(enum.Enum):
    PLUS_TO_MINUS = "plus_to_minus"
    MINUS_TO_PLUS = "minus_to_plus"


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ConfigError("grid needs t_end > t_start")
        if self.n_points < 3:
            raise ConfigError("grid needs at least 3 points")

    @property
    def h(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)

    @property
    def interior(self) -> slice:
        return slice(BOUNDARY_ROWS, self.n_points - BOUNDARY_ROWS)


@dataclass(frozen=True)
class GridOperator:
    matrix: sp.csr_matrix
    scheme: Scheme
    label: str
    grid: TimeGrid
    boundary: str = "truncated"

    def __matmul__(self, other):
        if isinstance(other, GridOperator):
            return self.matrix @ other.matrix
        return self.matrix @ other

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def bandwidth(self) -> int:
        coo = self.matrix.tocoo()
        if coo.nnz == 0:
            return 0
        return int(np.max(np.abs(coo.row - coo.col)))


def difference_matrix(grid: TimeGrid, scheme: Scheme = Scheme.FORWARD) -> sp.csr_matrix:
    """First-difference matrix with one-sided rows at the truncated edges."""
    n, h = grid.n_points, grid.h
    D = sp.lil_matrix((n, n))
    if scheme is Scheme.FORWARD:
        for i in range(n - 1):
            D[i, i], D[i, i + 1] = -1.0 / h, 1.0 / h
        D[n - 1, n - 2], D[n - 1, n - 1] = -1.0 / h, 1.0 / h
    else:
        for i in range(1, n - 1):
            D[i, i - 1], D[i, i + 1] = -0.5 / h, 0.5 / h
        D[0, 0], D[0, 1] = -1.0 / h, 1.0 / h
        D[n - 1, n - 2], D[n - 1, n - 1] = -1.0 / h, 1.0 / h
    return D.tocsr()


def build_charge_operators(grid: TimeGrid, profile: MassProfile,
                           scheme: Scheme = Scheme.FORWARD):
    """Return ``(Q_plus, Q_minus)`` with ``Q_pm = D -+ diag(m)``."""
    scheme = Scheme(scheme)
    m = np.asarray(profile.mass(grid.times), dtype=float)
    D = difference_matrix(grid, scheme)
    M = sp.diags(m, format="csr")
    return (GridOperator((D - M).tocsr(), scheme, "Q_plus", grid),
            GridOperator((D + M).tocsr(), scheme, "Q_minus", grid))


def partner_hamiltonians(q_plus: GridOperator, q_minus: GridOperator):
    """``(H_plus, H_minus) = (Q_minus Q_plus, Q_plus Q_minus)``."""
    _check_pair(q_plus, q_minus)
    return (GridOperator((q_minus.matrix @ q_plus.matrix).tocsr(), q_plus.scheme, "H_plus", q_plus.grid),
            GridOperator((q_plus.matrix @ q_minus.matrix).tocsr(), q_plus.scheme, "H_minus", q_plus.grid))


def second_difference(grid: TimeGrid, scheme: Scheme = Scheme.FORWARD) -> GridOperator:
    """D2 as the square of the first-difference matrix (the m = 0 Hamiltonian)."""
    D = difference_matrix(grid, Scheme(scheme))
    return GridOperator((D @ D).tocsr(), Scheme(scheme), "D2", grid)


def _check_pair(a: GridOperator, b: GridOperator) -> None:
    if a.matrix.shape != b.matrix.shape or a.grid != b.grid:
        raise ConfigError("operators live on different grids")


def _maxabs(A) -> float:
    A = sp.csr_matrix(A)
    return float(abs(A).max()) if A.nnz else 0.0


class AlgebraResiduals(NamedTuple):
    anticommutator_residual: float
    commutator_residual: float
    nilpotency_residual: float
    h_norm: float
    q_norm: float


def algebra_residuals(q_plus: GridOperator, q_minus: GridOperator) -> AlgebraResiduals:
    """Max-norm residuals of ``H = {Q, Q+}``, ``[H, Q] = 0``, ``{Q, Q} = 0``.

    Built from the 2x2 block super-matrices ``H = diag(H_plus, H_minus)``,
    ``Q`` (lower-left block ``Q_plus``) and ``Q+`` (upper-right ``Q_minus``).
    The commutator and nilpotency entries report the worse of the ``Q`` and
    ``Q+`` versions.
    """
    _check_pair(q_plus, q_minus)
    h_plus, h_minus = partner_hamiltonians(q_plus, q_minus)
    H = sp.block_diag((h_plus.matrix, h_minus.matrix), format="csr")
    Z = sp.csr_matrix(q_plus.matrix.shape)
    Q = sp.bmat([[Z, Z], [q_plus.matrix, Z]], format="csr")
    Qd = sp.bmat([[Z, q_minus.matrix], [Z, Z]], format="csr")
    anti = _maxabs(Q @ Qd + Qd @ Q - H)
    comm = max(_maxabs(H @ Q - Q @ H), _maxabs(H @ Qd - Qd @ H))
    nil = max(_maxabs(Q @ Q), _maxabs(Qd @ Qd))
    return AlgebraResiduals(anti, comm, nil, _maxabs(H), max(_maxabs(Q), _maxabs(Qd)))


def hamiltonian_defect(grid: TimeGrid, profile: MassProfile, v, scheme=Scheme.FORWARD,
                       branch: str = "plus") -> float:
    """``max |(H_pm - (D2 + diag(W_pm))) v|`` over interior rows."""
    scheme = Scheme(scheme)
    q_plus, q_minus = build_charge_operators(grid, profile, scheme)
    h_plus, h_minus = partner_hamiltonians(q_plus, q_minus)
    w = superpotentials(profile, grid.times)
    H, W = (h_plus, w.w_plus) if branch == "plus" else (h_minus, w.w_minus)
    v = np.asarray(v)
    r = H.matrix @ v - (second_difference(grid, scheme).matrix @ v + W * v)
    return float(np.max(np.abs(r[grid.interior])))


def observed_order(hs, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)


def intertwine_partner(grid: TimeGrid, profile: MassProfile, psi, k: float,
                       direction=Direction.PLUS_TO_MINUS, scheme=Scheme.FORWARD):
    """Map an ``H_pm`` eigenfunction to its ``H_mp`` partner via ``Q_pm psi / k``.

    Returns ``(partner, eigen_residual)`` where the residual is
    ``max|H_mp phi - k**2 phi| / max|phi|`` over interior rows.  The partner's
    own edge rows come from one-sided stencils, and ``H`` reaches two rows
    further in, so twice the usual boundary band is excluded.
    """
    if k == 0:
        raise ConfigError("intertwining needs k != 0")
    psi = np.asarray(psi)
    if psi.shape != (grid.n_points,):
        raise ConfigError(f"psi has shape {psi.shape}, grid has {grid.n_points} points")
    direction = Direction(direction)
    if not np.any(psi):
        return np.zeros_like(psi), 0.0
    q_plus, q_minus = build_charge_operators(grid, profile, scheme)
    h_plus, h_minus = partner_hamiltonians(q_plus, q_minus)
    if direction is Direction.PLUS_TO_MINUS:
        partner, H = (q_plus.matrix @ psi) / k, h_minus
    else:
        partner, H = (q_minus.matrix @ psi) / k, h_plus
    inner = slice(2 * BOUNDARY_ROWS, grid.n_points - 2 * BOUNDARY_ROWS)
    if inner.start >= inner.stop:
        raise ConfigError("grid too small for the partner residual")
    scale = np.max(np.abs(partner[inner]))
    if scale == 0:
        return partner, 0.0
    r = H.matrix @ partner - k * k * partner
    return partner, float(np.max(np.abs(r[inner])) / scale)


def eigen_residual(grid: TimeGrid, H: GridOperator, psi, k: float) -> float:
    """``max|H psi - k**2 psi| / max|psi|`` over interior rows."""
    psi = np.asarray(psi)
    inner = grid.interior
    return float(np.max(np.abs((H.matrix @ psi - k * k * psi)[inner])) / np.max(np.abs(psi[inner])))
