"""Time evolution of polarization states.

Four propagation routes are provided:

* ``numerical``: fixed-step RK4 of the master equation, either in the lab
  frame or in the instantaneous eigenbasis with the adiabatic generator;
* ``adiabatic_unitary``: closed-form adiabatic propagation without dissipation;
* ``exact_dissipative``: closed-form map for mu = 0 and the gamma = 0 family
  (a = alpha, all else zero);
* ``perturbative``: first-order Dyson expansion in the dissipator.

The 2x2 helpers at the bottom give the exact unitary propagator of the
modulated Hamiltonian and the instantaneous eigenbasis, used as oracles.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    DensityMatrix,
    DissipationParams,
    HamiltonianParams,
    combos,
    min_eigenvalue,
    state_L,
    symmetrize,
    validate_cp,
    vectorize,
)
from .errors import (
    CPViolationWarning,
    DegenerateHamiltonian,
    DissipationNotZero,
    NonPhysicalState,
    RegimeWarning,
    SingularGauge,
    StepTooLarge,
    UnsupportedRegime,
)
from .generators import (
    _dissipator_arrays,
    _hamiltonian_superop_arrays,
    adiabatic_frame_generator,
    basis_change,
    berry_phase,
    check_adiabatic,
    dissipator_superop,
    hamiltonian_superop,
    transformed_dissipator_superop,
)

log = logging.getLogger(__name__)

SOLVERS = ("numerical", "adiabatic_unitary", "exact_dissipative", "perturbative")
FRAMES = ("lab", "adiabatic")

DEFAULT_STEP_FACTOR = 0.01
MAX_STEP_FACTOR = 0.05
TRACE_DRIFT_LIMIT = 1e-8
PERTURBATIVE_THRESHOLD = 0.1
_OMEGA0_EPS = 1e-12


def characteristic_rate(h: HamiltonianParams, d: DissipationParams | None = None) -> float:
    """Largest frequency the integrator has to resolve."""
    rate = max(h.omega, abs(h.lam))
    if d is not None:
        rate = max(rate, d.magnitude)
    return rate if rate > 0 else 1.0


def default_dt(h: HamiltonianParams, d: DissipationParams | None = None) -> float:
    return DEFAULT_STEP_FACTOR / characteristic_rate(h, d)


def _as_state_vector(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return vectorize(x)
    v = np.array(x, dtype=complex)
    if v.shape == (2, 2):
        return vectorize(v)
    if v.shape != (4,):
        raise NonPhysicalState(f"initial state must be a 4-vector or 2x2 matrix, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class EvolutionSpec:
    hamiltonian: HamiltonianParams
    dissipation: DissipationParams = field(default_factory=DissipationParams)
    initial: np.ndarray = field(default_factory=lambda: vectorize(state_L()))
    t_final: float = 0.0
    dt: float | None = None
    solver: str = "numerical"
    samples: int | None = None
    frame: str = "lab"

    def __post_init__(self):
        if not (self.t_final >= 0 and math.isfinite(self.t_final)):
            raise ValueError(f"t_final must be finite and >= 0, got {self.t_final}")
        if self.dt is not None and not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}; expected one of {FRAMES}")
        if self.samples is not None and self.samples < 1:
            raise ValueError("samples must be >= 1")
        v = _as_state_vector(self.initial)
        v.setflags(write=False)
        object.__setattr__(self, "initial", v)

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else default_dt(self.hamiltonian, self.dissipation)

    def times(self) -> np.ndarray:
        if self.t_final == 0:
            return np.zeros(1)
        if self.samples is not None:
            return np.linspace(0.0, self.t_final, max(self.samples, 2))
        n = max(1, math.ceil(self.t_final / self.step - 1e-9))
        return np.linspace(0.0, self.t_final, n + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=complex)
        if t.ndim != 1 or s.shape != (len(t), 4):
            raise ValueError("states must have shape (len(times), 4)")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if len(t) and self._trace_dev(s) > 1e-6:
            raise NonPhysicalState("trajectory leaves the unit-trace subspace")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    @staticmethod
    def _trace_dev(s):
        return float(np.abs(s[:, 0] + s[:, 1] - 1.0).max())

    def __len__(self):
        return len(self.times)

    def trace_deviation(self) -> float:
        return self._trace_dev(self.states)

    def hermiticity_deviation(self) -> float:
        s = self.states
        return float(max(np.abs(s[:, 3] - np.conj(s[:, 2])).max(),
                         np.abs(s[:, 0].imag).max(), np.abs(s[:, 1].imag).max()))

    def min_eigenvalue(self) -> float:
        return float(min_eigenvalue(self.states).min())

    def purity(self) -> np.ndarray:
        s = self.states
        return (np.abs(s[:, 0]) ** 2 + np.abs(s[:, 1]) ** 2 + 2 * np.abs(s[:, 2]) ** 2).real

    def density_matrix(self, k: int) -> np.ndarray:
        r = self.states[k]
        return np.array([[r[0], r[2]], [r[3], r[1]]])


# -- RK4 ---------------------------------------------------------------------

def _matvec(g, y):
    return np.einsum("...ij,...j->...i", g, y)


def _rk4(generator: Callable[[float], np.ndarray], y0: np.ndarray, times: np.ndarray,
         dt_max: float) -> tuple[np.ndarray, dict]:
    """Classical RK4 for y' = G(t) y, sampled at ``times``.

    ``y0`` may carry leading batch dimensions; ``generator`` must broadcast
    against them.  The running state is re-symmetrized at every stored
    point, after the hermiticity drift is recorded.
    """
    y = np.array(y0, dtype=complex)
    tr0 = y[..., 0] + y[..., 1]
    out = np.empty((len(times),) + y.shape, dtype=complex)
    out[0] = y
    herm_drift = 0.0
    trace_drift = 0.0
    steps = 0
    for k in range(1, len(times)):
        t = times[k - 1]
        span = times[k] - t
        n = max(1, math.ceil(span / dt_max - 1e-9))
        h = span / n
        for _ in range(n):
            g0 = generator(t)
            gm = generator(t + 0.5 * h)
            g1 = generator(t + h)
            k1 = _matvec(g0, y)
            k2 = _matvec(gm, y + 0.5 * h * k1)
            k3 = _matvec(gm, y + 0.5 * h * k2)
            k4 = _matvec(g1, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        steps += n
        drift = float(np.abs(y[..., 0] + y[..., 1] - tr0).max())
        trace_drift = max(trace_drift, drift)
        if drift > TRACE_DRIFT_LIMIT:
            raise StepTooLarge(f"trace drift {drift:.3g} at t={times[k]:.6g}; reduce dt")
        herm_drift = max(herm_drift, float(np.abs(y[..., 3] - np.conj(y[..., 2])).max()))
        y = symmetrize(y)
        out[k] = y
    return out, {"max_trace_drift": trace_drift, "max_hermiticity_drift": herm_drift, "rk4_steps": steps}


def _check_step(spec: EvolutionSpec) -> float:
    dt = spec.step
    limit = MAX_STEP_FACTOR / characteristic_rate(spec.hamiltonian, spec.dissipation)
    if dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"dt = {dt:.3g} exceeds the stability limit {limit:.3g}")
    return dt


def _warn_cp(d: DissipationParams, stacklevel=3):
    report = validate_cp(d)
    if not report.ok:
        warnings.warn(f"non-CP dissipation: {report.summary()}", CPViolationWarning, stacklevel=stacklevel)


def evolve_numerical(spec: EvolutionSpec) -> Trajectory:
    """Integrate the master equation with classical RK4.

    ``spec.frame == "lab"`` integrates d|rho>/dt = [H(t) + L]|rho> directly.
    ``spec.frame == "adiabatic"`` integrates the eigenbasis-frame equation with
    the diagonal effective Hamiltonian (non-adiabatic couplings dropped) and
    the rotated dissipator, then maps back with U(t)^+.
    """
    h, d = spec.hamiltonian, spec.dissipation
    dt = _check_step(spec)
    _warn_cp(d)
    times = spec.times()
    cb = combos(d)
    if spec.frame == "lab":
        L = dissipator_superop(cb)
        states, diag = _rk4(lambda t: hamiltonian_superop(h, t) + L, spec.initial, times, dt)
    else:
        check_adiabatic(h)
        y0 = basis_change(h, 0.0) @ spec.initial
        rot, diag = _rk4(lambda t: adiabatic_frame_generator(cb, h, t), y0, times, dt)
        states = _matvec(np.conj(np.swapaxes(basis_change(h, times), -1, -2)), rot)
        states = symmetrize(states)
    diag.update(solver="numerical", frame=spec.frame, dt=dt)
    log.debug("rk4 %s frame: %d steps, trace drift %.2e", spec.frame, diag["rk4_steps"], diag["max_trace_drift"])
    return Trajectory(times, states, diag)


def evolve_numerical_batch(specs: Sequence[EvolutionSpec]) -> list[Trajectory]:
    """Lab-frame RK4 for many specs at once.

    All specs must share ``t_final`` and ``samples``; the smallest step of
    the batch is used for every member.
    """
    if not specs:
        return []
    t_final, samples = specs[0].t_final, specs[0].samples
    if any(s.t_final != t_final or s.samples != samples or s.frame != "lab" for s in specs):
        raise ValueError("batched specs must share t_final, samples and the lab frame")
    dt = min(_check_step(s) for s in specs)
    for s in specs:
        _warn_cp(s.dissipation)
    times = specs[0].times()
    mu = np.array([s.hamiltonian.mu for s in specs])
    nu = np.array([s.hamiltonian.nu for s in specs])
    lam = np.array([s.hamiltonian.lam for s in specs])
    cbs = [combos(s.dissipation) for s in specs]
    L = _dissipator_arrays([c.A for c in cbs], [c.B for c in cbs], [c.C for c in cbs], [c.D for c in cbs])
    y0 = np.stack([s.initial for s in specs])
    states, diag = _rk4(lambda t: _hamiltonian_superop_arrays(mu, nu, lam, t) + L, y0, times, dt)
    diag.update(solver="numerical", frame="lab", dt=dt)
    return [Trajectory(times, states[:, i], dict(diag)) for i in range(len(specs))]


# -- closed-form adiabatic routes ---------------------------------------------

def _back_to_lab(h: HamiltonianParams, times: np.ndarray, rotated: np.ndarray) -> np.ndarray:
    udag = np.conj(np.swapaxes(basis_change(h, times), -1, -2))
    return symmetrize(_matvec(udag, rotated))


def evolve_adiabatic_unitary(spec: EvolutionSpec) -> Trajectory:
    """Dissipation-free adiabatic propagation U(t)^+ exp(H_eff t) U(0)."""
    h = spec.hamiltonian
    if not spec.dissipation.is_zero():
        raise DissipationNotZero()
    if h.omega == 0:
        raise DegenerateHamiltonian()
    check_adiabatic(h)
    times = spec.times()
    f = 2 * (h.omega + berry_phase(h))
    y0 = basis_change(h, 0.0) @ spec.initial
    rot = np.empty((len(times), 4), dtype=complex)
    rot[:, 0] = y0[0]
    rot[:, 1] = y0[1]
    rot[:, 2] = np.exp(-1j * f * times) * y0[2]
    rot[:, 3] = np.exp(1j * f * times) * y0[3]
    return Trajectory(times, _back_to_lab(h, times, rot), {"solver": "adiabatic_unitary"})


def damped_frequency(omega: float, alpha: float) -> float:
    """Oscillation frequency sqrt(omega^2 - alpha^2/4) of the damped birefringence."""
    disc = omega * omega - 0.25 * alpha * alpha
    if disc < 0:
        raise UnsupportedRegime(f"alpha = {alpha} > 2 omega = {2 * omega}: overdamped, no real frequency")
    return math.sqrt(disc)


def _damped_trig(omega: float, alpha: float, t: np.ndarray):
    """e^{-alpha t} cos(2 Omega t) and e^{-alpha t} sin(2 Omega t)/Omega, continued past alpha = 2 omega."""
    disc = omega * omega - 0.25 * alpha * alpha
    if disc > 0:
        w = math.sqrt(disc)
        damp = np.exp(-alpha * t)
        return damp * np.cos(2 * w * t), damp * np.sin(2 * w * t) / w
    if disc < 0:
        w = math.sqrt(-disc)
        up = np.exp((2 * w - alpha) * t)
        down = np.exp(-(2 * w + alpha) * t)
        return 0.5 * (up + down), 0.5 * (up - down) / w
    damp = np.exp(-alpha * t)
    return damp, 2 * t * damp


def exact_dissipative_map(omega: float, alpha: float, lam: float, t) -> np.ndarray:
    """Eigenbasis-frame propagator M(t) for mu = 0 and the gamma = 0 family.

    M(t) = e^{-alpha t} blockdiag(exp(alpha t sigma1), Xi(t)) with
    Xi = e^{-i lam t sigma3}[cos 2Wt - i (omega/W) sin 2Wt sigma3 + (alpha/2W) sin 2Wt sigma1],
    W = sqrt(omega^2 - alpha^2/4), continued analytically to W -> 0 and
    imaginary W.
    """
    t = np.asarray(t, dtype=float)
    cd, sd = _damped_trig(omega, alpha, t)
    e2 = np.exp(-2 * alpha * t)
    ph = np.exp(-1j * lam * t)
    m = np.zeros(t.shape + (4, 4), dtype=complex)
    m[..., 0, 0] = m[..., 1, 1] = 0.5 * (1 + e2)
    m[..., 0, 1] = m[..., 1, 0] = 0.5 * (1 - e2)
    m[..., 2, 2] = ph * (cd - 1j * omega * sd)
    m[..., 2, 3] = ph * 0.5 * alpha * sd
    m[..., 3, 2] = np.conj(ph) * 0.5 * alpha * sd
    m[..., 3, 3] = np.conj(ph) * (cd + 1j * omega * sd)
    return m


def _check_weak_coupling_family(h: HamiltonianParams, d: DissipationParams, rtol=1e-12):
    scale = max(h.omega, d.magnitude, abs(h.lam), 1e-300)
    if abs(h.mu) > rtol * scale:
        raise UnsupportedRegime("exact dissipative solution requires mu = 0")
    if h.omega == 0:
        raise DegenerateHamiltonian()
    others = max(abs(d.b), abs(d.c), abs(d.beta), abs(d.gamma))
    if others > rtol * scale or abs(d.a - d.alpha) > rtol * scale or d.alpha < 0:
        raise UnsupportedRegime(
            "exact dissipative solution requires a = alpha >= 0 and b = c = beta = gamma = 0"
        )


def evolve_exact_dissipative(spec: EvolutionSpec) -> Trajectory:
    """Closed-form dissipative evolution for mu = 0, a = alpha, others zero."""
    h, d = spec.hamiltonian, spec.dissipation
    _check_weak_coupling_family(h, d)
    check_adiabatic(h)
    times = spec.times()
    y0 = basis_change(h, 0.0) @ spec.initial
    rot = _matvec(exact_dissipative_map(h.omega, d.alpha, h.lam, times), y0)
    regime = "underdamped" if d.alpha < 2 * h.omega else ("critical" if d.alpha == 2 * h.omega else "overdamped")
    return Trajectory(times, _back_to_lab(h, times, rot), {"solver": "exact_dissipative", "regime": regime})


def _simpson_cumulative(f: np.ndarray, h: float, m: int) -> np.ndarray:
    """Cumulative composite Simpson integral at every m-th node (m even)."""
    n_blocks = (f.shape[0] - 1) // m
    w = np.ones(m + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    blocks = f[: n_blocks * m + 1]
    idx = np.arange(n_blocks)[:, None] * m + np.arange(m + 1)[None, :]
    per_block = (h / 3.0) * np.einsum("k,bk...->b...", w, blocks[idx])
    out = np.zeros((n_blocks + 1,) + f.shape[1:], dtype=f.dtype)
    out[1:] = np.cumsum(per_block, axis=0)
    return out


def evolve_perturbative(spec: EvolutionSpec) -> Trajectory:
    """First-order Dyson propagation in the instantaneous eigenbasis.

    M(t) = e^{H_eff t} [1 + int_0^t e^{-H_eff s} L~(s) e^{H_eff s} ds], the
    integral by composite Simpson on the output grid refined so that the
    sub-step never exceeds dt/4.
    """
    h, d = spec.hamiltonian, spec.dissipation
    if h.omega == 0:
        raise DegenerateHamiltonian()
    check_adiabatic(h)
    if d.magnitude / h.omega > PERTURBATIVE_THRESHOLD:
        warnings.warn(
            f"dissipation/omega = {d.magnitude / h.omega:.3g} is not small; first-order expansion unreliable",
            RegimeWarning, stacklevel=2,
        )
    times = spec.times()
    cb = combos(d)
    f = 2 * (h.omega + berry_phase(h))
    hdiag = np.array([0, 0, -1j * f, 1j * f])
    y0 = basis_change(h, 0.0) @ spec.initial
    if len(times) == 1:
        return Trajectory(times, symmetrize(spec.initial[None, :]), {"solver": "perturbative"})
    span = times[1] - times[0]
    m = 4 * max(1, math.ceil(span / spec.step - 1e-9))
    fine = np.linspace(0.0, times[-1], (len(times) - 1) * m + 1)
    lt = transformed_dissipator_superop(cb, h, fine)
    right = np.exp(np.outer(fine, hdiag)) * y0
    integrand = np.exp(-np.outer(fine, hdiag)) * _matvec(lt, right)
    first = _simpson_cumulative(integrand, fine[1] - fine[0], m)
    rot = np.exp(np.outer(times, hdiag)) * (y0[None, :] + first)
    return Trajectory(times, _back_to_lab(h, times, rot), {"solver": "perturbative", "quadrature_nodes": len(fine)})


def evolve(spec: EvolutionSpec) -> Trajectory:
    return {
        "numerical": evolve_numerical,
        "adiabatic_unitary": evolve_adiabatic_unitary,
        "exact_dissipative": evolve_exact_dissipative,
        "perturbative": evolve_perturbative,
    }[spec.solver](spec)


# -- 2x2 oracles ------------------------------------------------------------

_S0 = np.eye(2, dtype=complex)
_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)


def exact_unitary_propagator(p: HamiltonianParams, t: float) -> np.ndarray:
    """Closed-form U(t) for the modulated Hamiltonian, U(0) = 1.

    The global phase exp(-i omega0 t) is omitted; it cancels in U rho U^+.
    """
    w0 = math.hypot(p.mu - 0.5 * p.lam, p.nu)
    sc = t if w0 < _OMEGA0_EPS else math.sin(w0 * t) / w0
    inner = math.cos(w0 * t) * _S0 - 0.5j * (2 * p.mu - p.lam) * sc * _S3 - 1j * p.nu * sc * _S1
    frame = np.diag([np.exp(-0.5j * p.lam * t), np.exp(0.5j * p.lam * t)])
    return frame @ inner


def instantaneous_basis_2x2(p: HamiltonianParams, t: float) -> np.ndarray:
    """Unitary T(t) whose columns are the eigenvectors of H(t) for omega0 +/- omega."""
    w = p.omega
    if w == 0:
        raise DegenerateHamiltonian()
    if p.mu + w <= 1e-12 * w:
        raise SingularGauge()
    e = np.exp(1j * p.lam * t)
    return np.array([[p.mu + w, -p.nu * np.conj(e)], [p.nu * e, p.mu + w]]) / math.sqrt(2 * w * (p.mu + w))


def eigenframe_propagator(p: HamiltonianParams, t: float) -> np.ndarray:
    """U~(t) = T(t)^+ U(t) T(0): exact evolution seen in the instantaneous eigenbasis."""
    return instantaneous_basis_2x2(p, t).conj().T @ exact_unitary_propagator(p, t) @ instantaneous_basis_2x2(p, 0.0)


def adiabatic_diagonality_check(p: HamiltonianParams, t: float) -> float:
    """Largest off-diagonal magnitude of the eigenframe propagator."""
    u = eigenframe_propagator(p, t)
    return float(max(abs(u[0, 1]), abs(u[1, 0])))
