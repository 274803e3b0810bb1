import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsusy.dynamics import Convention, ScenarioParams, solve_coupled
from tsusy.errors import ConfigError
from tsusy.operators import (Direction, Scheme, TimeGrid, algebra_residuals,
                             build_charge_operators, eigen_residual, hamiltonian_defect,
                             intertwine_partner, observed_order, partner_hamiltonians)
from tsusy.profiles import MassProfile


def test_difference_matrix_small_grid():
    grid = TimeGrid(0, 1, 3)
    q_plus, q_minus = build_charge_operators(grid, MassProfile.constant(0))
    expected = np.array([[-2, 2, 0], [0, -2, 2], [0, -2, 2]], dtype=float)
    assert np.array_equal(q_plus.toarray(), expected)
    assert np.array_equal(q_minus.toarray(), expected)


def test_charges_with_unit_mass():
    grid = TimeGrid(0, 1, 3)
    D = build_charge_operators(grid, MassProfile.constant(0))[0].toarray()
    q_plus, q_minus = build_charge_operators(grid, MassProfile.constant(1))
    assert np.array_equal(q_plus.toarray(), D - np.eye(3))
    assert np.array_equal(q_minus.toarray(), D + np.eye(3))


def test_operators_are_banded():
    grid = TimeGrid(0, 1, 50)
    for scheme in Scheme:
        q_plus, q_minus = build_charge_operators(grid, MassProfile.sinusoidal(1, 1), scheme)
        h_plus, _ = partner_hamiltonians(q_plus, q_minus)
        assert q_plus.bandwidth <= 2 and h_plus.bandwidth <= 4


def test_grid_validation():
    with pytest.raises(ConfigError):
        TimeGrid(1, 0, 10)
    with pytest.raises(ConfigError):
        TimeGrid(0, 1, 2)


def _profiles(rng, count):
    out = []
    for _ in range(count):
        if rng.random() < 0.5:
            out.append(MassProfile.sinusoidal(rng.uniform(0.1, 3), rng.uniform(0.1, 1)))
        else:
            t = np.linspace(0, 3, 25)
            out.append(MassProfile.tabulated(t, rng.uniform(0.5, 2) * np.cos(rng.uniform(0.5, 2) * t)))
    return out


@pytest.mark.parametrize("scheme", list(Scheme))
def test_algebra_residuals_at_roundoff(rng, scheme):
    grid = TimeGrid(0, 3, 400)
    for prof in _profiles(rng, 5):
        res = algebra_residuals(*build_charge_operators(grid, prof, scheme))
        assert res.anticommutator_residual <= 1e-12 * res.h_norm
        assert res.commutator_residual <= 1e-12 * res.h_norm * res.q_norm
        assert res.nilpotency_residual == 0.0


def test_hamiltonian_defect_converges():
    prof = MassProfile.sinusoidal(1.0, 0.5)
    hs, errs = [], []
    for n in (101, 201, 401, 801):
        grid = TimeGrid(0, 2, n)
        hs.append(grid.h)
        errs.append(hamiltonian_defect(grid, prof, np.sin(grid.times)))
    assert observed_order(hs, errs) >= 1.0 - 0.05
    assert errs[-1] < errs[0]


def test_observed_order_of_synthetic_data():
    hs = np.array([0.1, 0.05, 0.025])
    assert observed_order(hs, 3 * hs ** 2) == pytest.approx(2.0)


def test_intertwine_zero_function():
    grid = TimeGrid(0, 1, 20)
    partner, res = intertwine_partner(grid, MassProfile.constant(1), np.zeros(20), 2.0)
    assert not np.any(partner) and res == 0.0


def test_intertwine_wick_constant_mass():
    k, m = 4.0, 3.0
    E = math.hypot(k, m)
    residuals = []
    for n in (200, 400, 800):
        grid = TimeGrid(0, 1, n)
        psi = np.exp(-E * grid.times)
        partner, res = intertwine_partner(grid, MassProfile.constant(m), psi, k, scheme=Scheme.CENTRAL)
        inner = grid.interior
        expected = -(E + m) / k * psi
        assert np.max(np.abs(partner - expected)[inner]) < 200 * grid.h
        residuals.append(res)
    assert residuals[2] < residuals[1] < residuals[0]


def test_intertwine_preserves_eigen_residual_scale():
    # Wick trajectories solve H_plus psi_plus = k^2 psi_plus
    prof = MassProfile.sinusoidal(1.0, 1.0)
    k = 1.0
    params = ScenarioParams(prof, k, (0, math.pi), Convention.WICK, max_samples=400, rel_tol=1e-11)
    traj = solve_coupled(params)
    grid = TimeGrid(0, math.pi, 400)
    psi = traj.psi_plus.real
    q_plus, q_minus = build_charge_operators(grid, prof)
    h_plus, _ = partner_hamiltonians(q_plus, q_minus)
    before = eigen_residual(grid, h_plus, psi, k)
    _, after = intertwine_partner(grid, prof, psi, k, Direction.PLUS_TO_MINUS)
    assert before < 0.1
    assert max(before, after) / min(before, after) <= 10


def test_intertwine_shape_mismatch():
    with pytest.raises(ConfigError):
        intertwine_partner(TimeGrid(0, 1, 10), MassProfile.constant(1), np.ones(5), 1.0)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(8, 120), m0=st.floats(0, 5), lam=st.floats(0.1, 2))
def test_nilpotency_exact(n, m0, lam):
    grid = TimeGrid(0, math.pi / lam, n)
    res = algebra_residuals(*build_charge_operators(grid, MassProfile.sinusoidal(m0, lam)))
    assert res.nilpotency_residual == 0.0
