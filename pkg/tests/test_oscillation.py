import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from tsusy.approx import limit_E_ur_sinusoidal
from tsusy.dynamics import ScenarioParams, solve_coupled
from tsusy.errors import ConfigError, DomainError, PoleError
from tsusy.oscillation import (MixingConfig, Source, amplitude_from_trajectory, mix_states,
                               probability_closed_form, probability_from_E,
                               probability_from_trajectory, refine_peak, transition_amplitude)
from tsusy.profiles import MassProfile


@pytest.mark.parametrize("theta", [0.0, math.pi / 8, math.pi / 4, 1.2, math.pi / 2])
def test_mixing_rotation(theta):
    rot = mix_states(theta)
    M = rot.matrix()
    assert M.shape == (4, 4)
    assert np.allclose(M.T @ M, np.eye(4), atol=1e-15)
    assert rot.determinant == pytest.approx(1.0, abs=1e-15)


def test_mixing_identity_and_blocks():
    assert np.array_equal(mix_states(0).matrix(), np.eye(4))
    M = mix_states(math.pi / 4).matrix()
    assert np.allclose(M[:2, 2:], np.eye(2) / math.sqrt(2))
    assert np.allclose(M[2:, :2], -np.eye(2) / math.sqrt(2))


@pytest.mark.parametrize("theta", [-0.1, math.pi / 2 + 1e-9, float("nan")])
def test_mixing_angle_range(theta):
    with pytest.raises(DomainError):
        mix_states(theta)


def test_sin2_2theta_constructor():
    assert MixingConfig.from_sin2_2theta(1.0).theta == pytest.approx(math.pi / 4)
    assert MixingConfig.from_sin2_2theta(0.25).sin2_2theta == pytest.approx(0.25)


def test_amplitude_trivial_cases():
    psi = np.exp(-1j * np.linspace(0, 3, 10))
    assert np.all(transition_amplitude(math.pi / 4, psi, psi) == 0)
    assert transition_amplitude(math.pi / 4, np.ones(3), np.array([1, 2, 3]))[0] == 0


def test_amplitude_validation():
    with pytest.raises(ConfigError):
        transition_amplitude(0.3, np.ones(3), np.ones(4))
    with pytest.raises(ConfigError):
        transition_amplitude(0.3, np.array([0, 1, 2]), np.ones(3))


def test_amplitude_two_level():
    traj = solve_coupled(ScenarioParams(MassProfile.constant(3), 4.0, (0, 2)))
    amp = amplitude_from_trajectory(math.pi / 4, traj)
    assert np.max(np.abs(np.abs(amp) ** 2 - 9 / 25 * np.sin(5 * traj.times) ** 2)) < 1e-8


def test_amplitude_renormalizes_initial_values():
    traj = solve_coupled(ScenarioParams(MassProfile.constant(3), 4.0, (0, 2)), psi0=(2.0, 2.0))
    amp = amplitude_from_trajectory(math.pi / 4, traj)
    assert np.max(np.abs(np.abs(amp) ** 2 - 9 / 25 * np.sin(5 * traj.times) ** 2)) < 1e-8


def test_probability_equals_amplitude_squared():
    params = ScenarioParams(MassProfile.sinusoidal(1.0, 0.5), 2.0, (0, math.pi / 0.5), max_samples=4001)
    traj = solve_coupled(params)
    res = probability_from_trajectory(0.4, traj)
    amp = amplitude_from_trajectory(0.4, traj)
    assert np.max(np.abs(res.probability - np.abs(amp) ** 2)) < 1e-8
    # exp(alpha) = |psi_plus psi_minus| for unit initial values
    assert np.max(np.abs(np.exp(res.alpha) - np.abs(traj.psi_plus * traj.psi_minus))) < 1e-8


def test_probability_zero_when_branches_equal():
    t = np.linspace(0, 5, 51)
    E = 3 + np.sin(t)
    res = probability_from_E(math.pi / 4, E, E, t)
    assert np.all(res.probability == 0)
    assert res.source is Source.FROM_E


def test_probability_massive_form():
    t = np.linspace(0, 4, 2001)
    m = 1.3
    res = probability_from_E(math.pi / 4, -m * np.ones_like(t), m * np.ones_like(t), t)
    assert np.max(np.abs(res.probability - np.sin(m * t) ** 2)) < 1e-12


def _oracle(theta, fp, fm, t):
    """Same formula, each cumulative integral by adaptive quadrature."""
    out = []
    for tj in t:
        alpha = quad(lambda s: (fm(s) + fp(s)).imag, t[0], tj, epsabs=1e-14, epsrel=1e-12)[0]
        beta = 0.5 * quad(lambda s: (fm(s) - fp(s)).imag, t[0], tj, epsabs=1e-14, epsrel=1e-12)[0]
        rho = 0.5 * quad(lambda s: (fm(s) - fp(s)).real, t[0], tj, epsabs=1e-14, epsrel=1e-12)[0]
        out.append(math.sin(2 * theta) ** 2 * math.exp(alpha) * (math.sinh(beta) ** 2 + math.sin(rho) ** 2))
    return np.array(out)


def test_probability_against_quadrature_oracle():
    k = 2.0
    t = np.linspace(0, 10, 2001)
    fp = lambda s: k + 0.01j * np.cos(s)  # noqa: E731
    fm = lambda s: k - 0.01j * np.cos(s)  # noqa: E731
    res = probability_from_E(math.pi / 4, fp(t), fm(t), t)
    sub = slice(None, None, 50)
    assert np.max(np.abs(res.probability[sub] - _oracle(math.pi / 4, fp, fm, t[sub]))) < 1e-10


def test_probability_against_oracle_generic():
    t = np.linspace(0.5, 6, 1501)
    fp = lambda s: 1.0 + 0.3 * np.sin(s) + 0.05j * np.cos(2 * s)  # noqa: E731
    fm = lambda s: 0.2 - 0.4 * np.cos(s) + 0.02j * np.sin(s)  # noqa: E731
    res = probability_from_E(0.5, fp(t), fm(t), t)
    sub = slice(None, None, 100)
    assert np.max(np.abs(res.probability[sub] - _oracle(0.5, fp, fm, t[sub]))) < 1e-10


def test_probability_exceeding_one_is_flagged():
    t = np.linspace(0, 3, 31)
    res = probability_from_E(math.pi / 4, 5j * np.ones_like(t), 5j * np.ones_like(t), t)
    assert res.exceeds_unity or np.all(res.probability <= 1)
    res = probability_from_E(math.pi / 4, -2j * np.ones_like(t), 2j * np.ones_like(t), t)
    assert res.exceeds_unity and np.max(res.probability) > 1


def test_probability_validation():
    t = np.linspace(0, 1, 2)
    with pytest.raises(ConfigError):
        probability_from_E(0.3, np.ones(2), np.ones(2), t)
    with pytest.raises(ConfigError):
        probability_from_E(0.3, np.ones(3), np.ones(4), np.linspace(0, 1, 3))
    with pytest.raises(ConfigError):
        probability_from_E(0.3, np.array([1, np.nan, 1]), np.ones(3), np.linspace(0, 1, 3))


def test_closed_form_massive():
    res = probability_closed_form("Massive", math.pi / 6, np.array([0, math.pi / 4]),
                                  profile=MassProfile.constant(2))
    assert res.probability[1] == pytest.approx(0.75, rel=1e-15)
    assert res.probability[0] == 0


def test_closed_form_reduced():
    lam = 1.0
    res = probability_closed_form("URReduced", math.pi / 4, np.array([0, math.pi / 2 / lam]),
                                  m0=0.1, lam=lam, k=10)
    assert res.probability[1] == pytest.approx(2.5e-5, rel=1e-15)
    assert res.metadata["regime_ok"] is False  # lambda is not << m0 here


def test_closed_form_full_matches_pipeline():
    m0, k, lam = 0.01, 10.0, 1e-3
    t = np.linspace(0, math.pi / lam, 2001)
    sol = limit_E_ur_sinusoidal(m0, lam, k, t)
    pipe = probability_from_E(math.pi / 4, sol.E_plus, sol.E_minus, t)
    full = probability_closed_form("URFull", math.pi / 4, t, m0=m0, lam=lam, k=k)
    assert np.max(np.abs(pipe.probability - full.probability)) <= 0.01 * np.max(full.probability)


def test_reduced_within_full_bound():
    m0, k, lam = 0.1, 10.0, 1e-4
    t = np.linspace(0, math.pi / lam, 501)
    full = probability_closed_form("URFull", math.pi / 4, t, m0=m0, lam=lam, k=k)
    red = probability_closed_form("URReduced", math.pi / 4, t, m0=m0, lam=lam, k=k)
    assert red.metadata["regime_ok"]
    assert np.all(red.probability <= 1.1 * full.probability + 1e-300)


def test_closed_form_pole_guards():
    with pytest.raises(PoleError):
        probability_closed_form("URFull", 0.3, [0, 1], m0=0.1, lam=20.0, k=10)
    with pytest.raises(PoleError):
        probability_closed_form("URFull", 0.3, [0, 1], m0=0.1, lam=10.0, k=10)
    with pytest.raises(ConfigError):
        probability_closed_form("URFull", 0.3, [0, 1], m0=0.1, lam=1.0)


def test_refine_peak():
    t = np.linspace(0, 1, 101)
    p, tp = refine_peak(t, np.sin(5 * t) ** 2)
    assert tp == pytest.approx(math.pi / 10, abs=1e-4)
    assert p == pytest.approx(1.0, abs=1e-5)


real_series = arrays(np.float64, 24, elements=st.floats(-5, 5))


@settings(max_examples=200, deadline=None)
@given(ep=real_series, em=real_series, theta=st.floats(0, math.pi / 2))
def test_real_inputs_properties(ep, em, theta):
    t = np.linspace(0, 3, 24)
    res = probability_from_E(theta, ep, em, t)
    s2 = math.sin(2 * theta) ** 2
    assert np.all(res.alpha == 0) and np.all(res.beta == 0)
    assert np.all(res.probability >= 0) and np.all(res.probability <= s2 + 1e-15)
    assert res.probability[0] == 0
    flipped = probability_from_E(theta, -em, -ep, t)
    assert np.allclose(flipped.probability, res.probability, rtol=0, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(ep=arrays(np.complex128, 16, elements=st.complex_numbers(max_magnitude=3, allow_nan=False,
                                                                 allow_infinity=False)),
       em=arrays(np.complex128, 16, elements=st.complex_numbers(max_magnitude=3, allow_nan=False,
                                                                 allow_infinity=False)))
def test_theta_scaling(ep, em):
    t = np.linspace(0, 1, 16)
    base = probability_from_E(math.pi / 4, ep, em, t).probability
    for theta in (math.pi / 8, math.pi / 6):
        scaled = probability_from_E(theta, ep, em, t).probability / math.sin(2 * theta) ** 2
        assert np.allclose(scaled, base, rtol=1e-12, atol=1e-300)
    assert probability_from_E(0.0, ep, em, t).probability.max() == 0
