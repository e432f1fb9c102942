import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photodissim.core import (
    DensityMatrix,
    DissipationCombos,
    DissipationParams,
    HamiltonianParams,
    IntensitySeries,
    Observable,
    PolarizerAngles,
    combos,
    devectorize,
    expectation,
    kossakowski_matrix,
    linear_state,
    min_eigenvalue,
    params_from_kossakowski,
    projector,
    purity,
    state_L,
    state_R,
    stokes_state,
    symmetrize,
    validate_cp,
    vectorize,
)
from photodissim.errors import NonPhysicalState, NonRealExpectation

from oracles import kossakowski

small = st.floats(-1, 1, allow_nan=False)
angle = st.floats(0, 2 * math.pi)


def random_state(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = g @ g.conj().T
    return m / np.trace(m).real


# -- DensityMatrix -----------------------------------------------------------

def test_named_states():
    assert np.allclose(state_L().entries, np.diag([0, 1]))
    assert np.allclose(state_R().entries, np.diag([1, 0]))
    assert purity(state_L()) == pytest.approx(1.0)


def test_density_matrix_rejects_bad_input():
    with pytest.raises(NonPhysicalState):
        DensityMatrix(np.diag([0.7, 0.7]))
    with pytest.raises(NonPhysicalState):
        DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(NonPhysicalState):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(NonPhysicalState):
        DensityMatrix(np.eye(3) / 3)


def test_density_matrix_is_read_only():
    rho = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 1.0


def test_eigenvalues_against_numpy():
    rng = np.random.default_rng(1)
    m = random_state(rng)
    assert np.allclose(DensityMatrix(m).eigenvalues, np.linalg.eigvalsh(m))


@given(st.floats(0, 1), small, small)
def test_vectorize_roundtrip(p, re, im):
    off = complex(re, im) * math.sqrt(p * (1 - p))
    m = np.array([[p, off], [np.conj(off), 1 - p]])
    if abs(off) ** 2 > p * (1 - p):
        return
    rho = DensityMatrix(m)
    v = vectorize(rho)
    assert v[3] == pytest.approx(np.conj(v[2]))
    assert devectorize(v) == rho


def test_devectorize_checks_trace_and_hermiticity():
    with pytest.raises(NonPhysicalState):
        devectorize([0.6, 0.6, 0, 0])
    with pytest.raises(NonPhysicalState):
        devectorize([0.5, 0.5, 0.1, 0.3])


def test_symmetrize_restores_pairing():
    v = np.array([[0.5, 0.5, 0.1 + 0.2j, 0.1 - 0.1j]])
    s = symmetrize(v)
    assert s[0, 3] == pytest.approx(np.conj(s[0, 2]))
    assert s[0, 2] == pytest.approx(0.1 + 0.15j)


def test_min_eigenvalue_batch():
    rng = np.random.default_rng(2)
    states = [random_state(rng) for _ in range(5)]
    got = min_eigenvalue(np.array([vectorize(m) for m in states]))
    assert np.allclose(got, [np.linalg.eigvalsh(m)[0] for m in states])


# -- parameters ---------------------------------------------------------------

def test_hamiltonian_params_omega():
    p = HamiltonianParams(omega0=1, mu=3, nu=4, lam=0.5)
    assert p.omega == 5.0
    assert p.adiabaticity == pytest.approx(0.1)


@given(*(st.floats(-2, 2, allow_nan=False) for _ in range(6)))
def test_combos_roundtrip(a, b, c, alpha, beta, gamma):
    p = DissipationParams(a, b, c, alpha, beta, gamma)
    cb = combos(p)
    assert cb.A == pytest.approx(alpha + a)
    assert cb.B == pytest.approx(alpha - a + 2j * b)
    assert cb.C == pytest.approx(c + 1j * beta)
    assert cb.D == pytest.approx(gamma)
    back = DissipationCombos.from_abcd(cb.A, cb.B, cb.C, cb.D).to_params()
    assert np.allclose(back.as_tuple(), p.as_tuple(), atol=1e-12)


def test_weak_coupling_family():
    p = DissipationParams.weak_coupling(0.05)
    assert p.as_tuple() == (0.05, 0, 0, 0.05, 0, 0)
    assert validate_cp(p).ok


# -- complete positivity ------------------------------------------------------

def test_cp_example_passes_all_ten():
    report = validate_cp(DissipationParams(1, 0, 0, 1, 0, 1))
    assert report.ok
    assert len(report.conditions) == 10


def test_cp_example_violates_2s():
    report = validate_cp(DissipationParams(1, 0, 0, 2, 0, 0))
    assert not report.ok
    assert not report["2S>=0"].passed
    assert report["2S>=0"].residual == pytest.approx(-1.0)
    assert report["2R>=0"].passed and report["2T>=0"].passed


cp_params = st.tuples(*(st.floats(-1, 1, allow_nan=False) for _ in range(6)))


@settings(max_examples=400)
@given(cp_params)
def test_cp_conditions_equal_kossakowski_psd(vals):
    """The ten inequalities hold exactly when the Kossakowski matrix is PSD."""
    p = DissipationParams(*vals)
    k = kossakowski(*vals)
    eig_min = np.linalg.eigvalsh(k)[0]
    ok = validate_cp(p).ok
    if eig_min > 1e-9:
        assert ok
    elif eig_min < -1e-9:
        assert not ok


@given(cp_params, st.floats(1e-3, 1e3))
def test_cp_verdict_is_scale_invariant(vals, s):
    p = DissipationParams(*vals)
    assert validate_cp(p).ok == validate_cp(p.scaled(s)).ok


def test_kossakowski_roundtrip():
    rng = np.random.default_rng(3)
    g = rng.normal(size=(3, 3))
    k = g @ g.T
    p = params_from_kossakowski(k)
    assert np.allclose(kossakowski_matrix(p), k)
    assert np.allclose(kossakowski(*p.as_tuple()), k)
    assert validate_cp(p).ok


# -- observables --------------------------------------------------------------

@given(angle, angle)
def test_projector_is_rank_one_projector(theta, phi):
    o = projector(PolarizerAngles(theta, phi)).entries
    assert np.allclose(o @ o, o, atol=1e-12)
    assert np.trace(o).real == pytest.approx(1.0)


@given(angle, angle)
def test_complementary_projectors_sum_to_identity(theta, phi):
    o1 = projector(PolarizerAngles(theta, phi)).entries
    o2 = projector(PolarizerAngles(theta + math.pi / 2, phi)).entries
    assert np.allclose(o1 + o2, np.eye(2), atol=1e-12)


def test_projector_onto_circular_states():
    # phi = pi/2, theta = pi/4 selects |R>
    o = projector(PolarizerAngles(math.pi / 4, math.pi / 2))
    assert expectation(o, state_R()) == pytest.approx(1.0)
    assert expectation(o, state_L()) == pytest.approx(0.0, abs=1e-15)


def test_expectation_matches_trace():
    rng = np.random.default_rng(4)
    for _ in range(20):
        m = random_state(rng)
        o = projector(PolarizerAngles(*rng.uniform(0, 3, 2)))
        assert expectation(o, vectorize(m)) == pytest.approx(np.trace(o.entries @ m).real, abs=1e-14)


def test_expectation_on_stack():
    rng = np.random.default_rng(5)
    ms = [random_state(rng) for _ in range(4)]
    o = projector(PolarizerAngles(0.3))
    vals = expectation(o, np.array([vectorize(m) for m in ms]))
    assert np.allclose(vals, [np.trace(o.entries @ m).real for m in ms])


def test_expectation_rejects_nonhermitian_state():
    with pytest.raises(NonRealExpectation):
        expectation(projector(PolarizerAngles(0.0)), [0.5, 0.5, 0.5j, 0.5j])


def test_observable_must_be_hermitian():
    with pytest.raises(ValueError):
        Observable(np.array([[0, 1], [0, 0]]))
    assert expectation(Observable.identity(), state_L()) == 1.0


def test_linear_state_gives_certain_outcome():
    for th in (0.0, 0.4, 1.3):
        assert expectation(projector(PolarizerAngles(th)), linear_state(th)) == pytest.approx(1.0)
        assert expectation(projector(PolarizerAngles(th + math.pi / 2)), linear_state(th)) == pytest.approx(0.0, abs=1e-14)


def test_stokes_states():
    def same(x, y):
        return np.allclose(x.entries, y.entries, atol=1e-15)

    assert same(stokes_state(0, 0, 1), state_R())
    assert same(stokes_state(0, 0, -1), state_L())
    assert same(stokes_state(1, 0, 0), linear_state(0.0))
    assert same(stokes_state(0, 1, 0), linear_state(math.pi / 4))
    assert purity(stokes_state(0, 0, 0)) == pytest.approx(0.5)
    with pytest.raises(NonPhysicalState):
        stokes_state(1, 1, 0)


# -- IntensitySeries ----------------------------------------------------------

def test_series_uniformity_and_noise():
    t = np.linspace(0, 1, 11)
    s = IntensitySeries(t, np.full(11, 0.5))
    assert s.is_uniform()
    assert s.step == pytest.approx(0.1)
    assert not IntensitySeries(t ** 2, np.zeros(11)).is_uniform()
    a = s.with_noise(0.1, np.random.default_rng(7))
    b = s.with_noise(0.1, np.random.default_rng(7))
    assert np.array_equal(a.values, b.values)
    assert a.meta["noise_sigma"] == 0.1
