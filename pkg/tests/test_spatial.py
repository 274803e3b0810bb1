import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsusy.errors import ConfigError, NumericalError
from tsusy.operators import observed_order
from tsusy.spatial import (E_MINUS, E_PLUS, PAULI, Box, SpatialAnsatz, ZProfile, ansatz_residual,
                           basis_action_residuals, fd4)


def test_pauli_action_on_basis():
    checks = basis_action_residuals()
    assert all(v == 0 for v in checks.values())
    s1, s2, s3 = PAULI
    assert np.array_equal(s2 @ E_MINUS, -1j * E_PLUS)
    assert np.array_equal(s3 @ E_MINUS, -E_MINUS)


def test_identity_holds_for_k2_zero():
    res = ansatz_residual(SpatialAnsatz(1.0))
    assert max(res) <= 1e-8


def test_gaussian_f_derivative_is_annihilated():
    res = ansatz_residual(SpatialAnsatz(2.0, 0.0, ZProfile.gaussian(1.0)))
    assert max(res) <= 1e-6


def test_tabulated_f():
    z = np.linspace(-1, 2, 40)
    res = ansatz_residual(SpatialAnsatz(1.0, 0.0, ZProfile.tabulated(z, 1 + z ** 2)))
    assert max(res) <= 1e-8


def test_k2_nonzero_residual_is_measured():
    # LHS carries (k2 - k1) exp(+-2i k2 x2) while RHS is -(k1 + k2): the mismatch is 2 here
    res = ansatz_residual(SpatialAnsatz(1.0, 1.0))
    assert res.residual_plus == pytest.approx(2.0, rel=1e-12)
    assert res.residual_minus == pytest.approx(2.0, rel=1e-12)


def test_fd_converges_fourth_order():
    base = Box(counts=(16, 16, 16))
    hs, errs = [], []
    for factor in (1, 2, 4):
        box = base.refined(factor)
        hs.append(1 / (box.counts[0] - 1))
        errs.append(max(ansatz_residual(SpatialAnsatz(1.0, region=box), method="fd")))
    assert observed_order(hs, errs) == pytest.approx(4.0, abs=0.3)


def test_fd4_on_polynomial_is_exact():
    x = np.linspace(0, 1, 17)
    y = x ** 4 - 2 * x ** 3
    assert np.allclose(fd4(y, x[1] - x[0], 0), 4 * x ** 3 - 6 * x ** 2, atol=1e-11)


@settings(max_examples=10, deadline=None)
@given(c=st.floats(0.1, 10), k1=st.floats(0.2, 3), k2=st.floats(0, 2))
def test_residual_invariant_under_f_scaling(c, k1, k2):
    box = Box(counts=(16, 16, 16))
    f = ZProfile.gaussian(0.7, 0.3)
    a = ansatz_residual(SpatialAnsatz(k1, k2, f, box))
    b = ansatz_residual(SpatialAnsatz(k1, k2, f.scaled(c), box))
    assert np.allclose(a, b, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("box", [
    lambda: Box((0, 0, 0), (0, 1, 1)),
    lambda: Box(counts=(8, 16, 16)),
    lambda: Box((0, 0), (1, 1), (16, 16)),
])
def test_region_validation(box):
    with pytest.raises(ConfigError):
        box()


def test_underflow_everywhere():
    box = Box((0, 0, 0), (1, 1, 1), (16, 16, 16))
    with pytest.raises(NumericalError):
        ansatz_residual(SpatialAnsatz(1.0, f=ZProfile.constant(0.0), region=box))


def test_unknown_method():
    with pytest.raises(ConfigError):
        ansatz_residual(SpatialAnsatz(1.0), method="spectral")
