import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photodissim.core import (
    DissipationParams,
    HamiltonianParams,
    PolarizerAngles,
    combos,
    state_L,
    validate_cp,
    vectorize,
)
from photodissim.errors import ProbabilityOutOfRange, ResonantDenominator, UnsupportedRegime
from photodissim.generators import adiabatic_frame_generator, basis_change
from photodissim.observables import (
    ProbabilityModel,
    perturbative_terms,
    prob_adiabatic_general,
    prob_adiabatic_mu0,
    prob_dissipative,
    prob_from_trajectory,
    prob_overdamped,
    prob_perturbative,
)
from photodissim.solvers import EvolutionSpec, Trajectory, evolve

from oracles import integrate

L0 = vectorize(state_L())


def trajectory_probability(h, d, theta, times, solver="exact_dissipative"):
    traj = evolve(EvolutionSpec(h, d, t_final=float(times[-1]), samples=len(times), solver=solver))
    return prob_from_trajectory(traj, PolarizerAngles(theta)).values


def adiabatic_oracle_probability(h, d, theta, times):
    """Integrate the adiabatic-frame equation with scipy and read P_theta in the lab basis."""
    cb = combos(d)
    y0 = basis_change(h, 0.0) @ L0
    ys = integrate(lambda t: adiabatic_frame_generator(cb, h, t), y0, times)
    lab = np.array([basis_change(h, t).conj().T @ y for t, y in zip(times, ys)])
    traj = Trajectory(times, lab)
    return prob_from_trajectory(traj, PolarizerAngles(theta)).values


# -- dissipation-free forms -----------------------------------------------------

def test_mu0_examples():
    q = math.pi / 4
    assert prob_adiabatic_mu0(1.0, 0.0, q, q) == pytest.approx(1.0)
    assert prob_adiabatic_mu0(1.0, 0.0, q, 3 * q) == pytest.approx(0.0, abs=1e-15)
    assert prob_adiabatic_mu0(1.0, 0.3, 0.2, 0.0) == pytest.approx(0.5)


@settings(max_examples=50)
@given(st.floats(0.1, 3), st.floats(-0.3, 0.3), st.floats(0, math.pi), st.floats(0, 20))
def test_general_form_reduces_to_mu0(nu, lam, theta, t):
    h = HamiltonianParams(nu=nu, lam=lam)
    assert prob_adiabatic_general(h, theta, t) == pytest.approx(prob_adiabatic_mu0(nu, lam, theta, t), abs=1e-12)


@pytest.mark.filterwarnings("ignore::photodissim.errors.AdiabaticityWarning")
def test_general_form_matches_unitary_trajectory():
    rng = np.random.default_rng(0)
    times = np.linspace(0, 30, 61)
    for _ in range(10):
        h = HamiltonianParams(mu=rng.normal(), nu=rng.normal(), lam=0.05 * rng.normal())
        theta = rng.uniform(0, math.pi)
        got = prob_adiabatic_general(h, theta, times)
        ref = trajectory_probability(h, DissipationParams(), theta, times, solver="adiabatic_unitary")
        assert np.abs(got - ref).max() < 1e-10


@given(st.floats(0.1, 3), st.floats(-0.3, 0.3), st.floats(0, math.pi), st.floats(0, 50))
def test_complementary_analyzers_sum_to_one(omega, lam, theta, t):
    p1 = prob_dissipative(omega, 0.05, lam, theta, t)
    p2 = prob_dissipative(omega, 0.05, lam, theta + math.pi / 2, t)
    assert p1 + p2 == pytest.approx(1.0, abs=1e-12)


def test_probabilities_stay_in_unit_interval():
    rng = np.random.default_rng(1)
    n = 100_000
    omega = rng.uniform(0.1, 3, n)
    alpha = rng.uniform(0, 1.99, n) * omega
    lam = rng.uniform(-0.5, 0.5, n)
    theta = rng.uniform(0, math.pi, n)
    t = rng.uniform(0, 100, n)
    vals = np.array([prob_dissipative(*args) for args in zip(omega, alpha, lam, theta, t)])
    assert vals.min() >= -1e-12 and vals.max() <= 1 + 1e-12
    over = np.array([prob_overdamped(w, 2.01 * w + a, l, th, x)
                     for w, a, l, th, x in zip(omega[:5000], alpha[:5000], lam[:5000], theta[:5000], t[:5000])])
    assert over.min() >= -1e-12 and over.max() <= 1 + 1e-12


# -- damped forms ------------------------------------------------------------------

def test_dissipative_form_matches_exact_trajectory():
    times = np.linspace(0, 5, 51)
    h = HamiltonianParams(nu=1.0, lam=0.01)
    got = prob_dissipative(1.0, 0.1, 0.01, 0.3, times)
    ref = trajectory_probability(h, DissipationParams.weak_coupling(0.1), 0.3, times)
    assert np.abs(got - ref).max() < 1e-10


def test_dissipative_form_reduces_to_mu0():
    t = np.linspace(0, 20, 41)
    assert np.allclose(prob_dissipative(1.2, 0.0, 0.05, 0.4, t), prob_adiabatic_mu0(1.2, 0.05, 0.4, t), atol=1e-14)


def test_overdamped_form_matches_exact_trajectory():
    times = np.linspace(0, 2, 41)
    h = HamiltonianParams(nu=1.0, lam=0.01)
    got = prob_overdamped(1.0, 3.0, 0.01, 0.5, times)
    ref = trajectory_probability(h, DissipationParams.weak_coupling(3.0), 0.5, times)
    assert np.abs(got - ref).max() < 1e-10


def test_overdamped_special_cases():
    t = np.linspace(0, 5, 11)
    assert np.allclose(prob_overdamped(1.0, 3.0, 0.0, 0.0, t), 0.5)
    assert np.all(np.isfinite(prob_overdamped(1.0, 3.0, 0.0, 0.3, np.array([1e4]))))


def test_regime_boundaries():
    with pytest.raises(UnsupportedRegime):
        prob_dissipative(1.0, 2.0, 0.0, 0.0, 1.0)
    with pytest.raises(UnsupportedRegime):
        prob_dissipative(1.0, -0.1, 0.0, 0.0, 1.0)
    with pytest.raises(UnsupportedRegime):
        prob_overdamped(1.0, 2.0, 0.0, 0.0, 1.0)


# -- first-order form ------------------------------------------------------------

# a fixed completely positive parameter set with every coefficient nonzero
GENERAL = DissipationParams(0.8, 0.1, 0.2, 1.0, 0.1, 0.5)


def general_dissipation(eps):
    return GENERAL.scaled(eps)


def test_perturbative_initial_value_and_unitary_limit():
    h = HamiltonianParams(nu=1.0, lam=0.02)
    cb = combos(general_dissipation(1e-3))
    assert prob_perturbative(h, cb, 0.4, 0.0) == pytest.approx(0.5, abs=1e-15)
    t = np.linspace(0, 30, 31)
    zero = combos(DissipationParams())
    assert np.allclose(prob_perturbative(h, zero, 0.4, t), prob_adiabatic_mu0(1.0, 0.02, 0.4, t), atol=1e-14)


def perturbative_error(eps, printed):
    h = HamiltonianParams(nu=1.0, lam=0.02)
    d = general_dissipation(eps)
    times = np.linspace(0, 20, 81)
    got = prob_perturbative(h, combos(d), 0.3, times, printed=printed)
    return np.abs(got - adiabatic_oracle_probability(h, d, 0.3, times)).max()


def test_perturbative_error_is_second_order():
    e1, e2 = perturbative_error(4e-3, False), perturbative_error(2e-3, False)
    assert 3.5 < e1 / e2 < 4.5


def test_printed_perturbative_form_has_first_order_error():
    e1, e2 = perturbative_error(4e-3, True), perturbative_error(2e-3, True)
    assert 1.7 < e1 / e2 < 2.3
    assert e2 > 10 * perturbative_error(2e-3, False)


def test_perturbative_requires_mu_zero():
    with pytest.raises(UnsupportedRegime):
        prob_perturbative(HamiltonianParams(mu=0.1, nu=1.0), combos(general_dissipation(1e-3)), 0.0, 1.0)


def test_resonant_denominator():
    cb = combos(general_dissipation(1e-3))
    with pytest.raises(ResonantDenominator):
        perturbative_terms(1.0, 2.0, cb, 1.0)
    with pytest.raises(ResonantDenominator):
        perturbative_terms(1.0, 1.0, cb, 1.0)


def test_perturbative_terms_continuous_at_zero_modulation():
    cb = combos(general_dissipation(1e-2))
    t = np.linspace(0, 10, 21)
    at0 = np.array(perturbative_terms(1.0, 0.0, cb, t))
    near = np.array(perturbative_terms(1.0, 1e-8, cb, t))
    assert np.all(np.isfinite(at0))
    assert np.abs(at0 - near).max() < 1e-6


# -- trajectory route and model object --------------------------------------------

def test_mixed_state_gives_one_half():
    times = np.array([0.0, 1.0])
    traj = Trajectory(times, np.tile([0.5, 0.5, 0, 0], (2, 1)).astype(complex))
    for ang in (PolarizerAngles(0.3), PolarizerAngles(1.1, 0.7)):
        assert np.allclose(prob_from_trajectory(traj, ang).values, 0.5)


def test_complementary_trajectory_probabilities():
    h = HamiltonianParams(mu=0.2, nu=0.9, lam=0.03)
    traj = evolve(EvolutionSpec(h, general_dissipation(0.05), t_final=20.0, samples=101))
    p1 = prob_from_trajectory(traj, PolarizerAngles(0.4, 0.2)).values
    p2 = prob_from_trajectory(traj, PolarizerAngles(0.4 + math.pi / 2, 0.2)).values
    assert np.allclose(p1 + p2, 1.0, atol=1e-12)


def test_out_of_range_probability_is_reported():
    # trace one and hermitian, but with a negative eigenvalue
    traj = Trajectory(np.array([0.0]), np.array([[0.5, 0.5, 1.0, 1.0]], dtype=complex))
    with pytest.raises(ProbabilityOutOfRange):
        prob_from_trajectory(traj, PolarizerAngles(0.0))


def test_general_dissipation_is_cp():
    assert validate_cp(GENERAL).ok


def test_model_selection():
    h = HamiltonianParams(nu=1.0, lam=0.01)
    assert ProbabilityModel.for_params(h, DissipationParams(), 0).kind == "adiabatic_mu0"
    assert ProbabilityModel.for_params(HamiltonianParams(mu=0.1, nu=1), DissipationParams(), 0).kind \
        == "adiabatic_general"
    assert ProbabilityModel.for_params(h, DissipationParams.weak_coupling(0.1), 0).kind == "dissipative"
    assert ProbabilityModel.for_params(h, DissipationParams.weak_coupling(3.0), 0).kind == "overdamped"
    assert ProbabilityModel.for_params(h, general_dissipation(1e-3), 0).kind == "perturbative"
    with pytest.raises(ValueError):
        ProbabilityModel("bogus", h)


def test_model_series():
    h = HamiltonianParams(nu=1.0, lam=0.01)
    m = ProbabilityModel.for_params(h, DissipationParams.weak_coupling(0.1), 0.3)
    s = m.series(np.linspace(0, 5, 11))
    assert np.allclose(s.values, prob_dissipative(1.0, 0.1, 0.01, 0.3, s.times))
    assert s.meta["kind"] == "dissipative"
