"""Polarization states, dissipation parameters and observables.

States live in the circular basis (|R>, |L>).  A density matrix

    rho = [[rho1, rho3],
           [rho4, rho2]],   rho4 = conj(rho3)

is stored as the 4-vector (rho1, rho2, rho3, rho4).  Units are natural
(hbar = 1): every parameter is an angular frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import NonPhysicalState, NonRealExpectation

# hermiticity / trace tolerance for states built in-process
CONSTRUCTION_TOL = 1e-12
# tolerance for states supplied from outside (configs, integrator output)
EXTERNAL_TOL = 1e-6
# smallest eigenvalue accepted as "positive"
PSD_TOL = 1e-10
# imaginary part of an expectation value that is silently dropped
IMAG_DISCARD_TOL = 1e-10
IMAG_ERROR_TOL = 1e-8


@dataclass(frozen=True)
class DensityMatrix:
    """A 2x2 polarization density matrix, validated on construction."""

    entries: np.ndarray
    tol: float = field(default=CONSTRUCTION_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (2, 2):
            raise NonPhysicalState(f"density matrix must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NonPhysicalState("density matrix has non-finite entries")
        herm = np.abs(m - m.conj().T).max()
        if herm > self.tol:
            raise NonPhysicalState(f"not hermitian (deviation {herm:.3g})")
        tr = m[0, 0].real + m[1, 1].real
        if abs(tr - 1.0) > self.tol:
            raise NonPhysicalState(f"trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -PSD_TOL:
            raise NonPhysicalState("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_components(cls, rho1, rho2, rho3=0.0):
        return cls(np.array([[rho1, rho3], [np.conj(rho3), rho2]], dtype=complex))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash(self.entries.tobytes())


def vectorize(rho) -> np.ndarray:
    """Return (rho1, rho2, rho3, rho4) for a density matrix."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return np.array([m[0, 0], m[1, 1], m[0, 1], m[1, 0]], dtype=complex)


def devectorize(v) -> DensityMatrix:
    """Inverse of :func:`vectorize`.

    Accepts integrator output with small drift: trace and hermiticity are
    checked at ``EXTERNAL_TOL`` and the off-diagonal pair is then
    re-symmetrized.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (4,):
        raise NonPhysicalState(f"state vector must have 4 components, got shape {v.shape}")
    r1, r2, r3, r4 = v
    if abs(r1 + r2 - 1.0) > EXTERNAL_TOL:
        raise NonPhysicalState(f"trace rho1 + rho2 = {r1 + r2} differs from 1")
    if abs(r4 - np.conj(r3)) > EXTERNAL_TOL or abs(r1.imag) > EXTERNAL_TOL or abs(r2.imag) > EXTERNAL_TOL:
        raise NonPhysicalState("state vector violates the hermiticity pairing rho4 = conj(rho3)")
    r3 = 0.5 * (r3 + np.conj(r4))
    m = np.array([[r1.real, r3], [np.conj(r3), r2.real]], dtype=complex)
    return DensityMatrix(m, tol=EXTERNAL_TOL)


def symmetrize(states: np.ndarray) -> np.ndarray:
    """Project state vectors (..., 4) onto the hermitian subspace."""
    out = np.array(states, dtype=complex)
    r3 = 0.5 * (out[..., 2] + np.conj(out[..., 3]))
    out[..., 0] = out[..., 0].real
    out[..., 1] = out[..., 1].real
    out[..., 2] = r3
    out[..., 3] = np.conj(r3)
    return out


def min_eigenvalue(states: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of each state in a (..., 4) array of vectors."""
    s = np.asarray(states)
    r1, r2 = s[..., 0].real, s[..., 1].real
    off = 0.5 * np.abs(s[..., 2] + np.conj(s[..., 3]))
    return 0.5 * (r1 + r2) - np.sqrt(0.25 * (r1 - r2) ** 2 + off ** 2)


# -- parameters --------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianParams:
    """Birefringence Hamiltonian parameters.

    ``omega0`` is the mean photon energy, ``mu`` and ``nu`` set the level
    splitting and ``lam`` is the modulation frequency of the medium.
    """

    omega0: float = 0.0
    mu: float = 0.0
    nu: float = 0.0
    lam: float = 0.0

    @property
    def omega(self) -> float:
        return math.hypot(self.mu, self.nu)

    @property
    def adiabaticity(self) -> float:
        """Ratio |lambda| / omega (infinite for a degenerate Hamiltonian)."""
        w = self.omega
        return abs(self.lam) / w if w > 0 else math.inf


@dataclass(frozen=True)
class DissipationParams:
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return (self.a, self.b, self.c, self.alpha, self.beta, self.gamma)

    @property
    def magnitude(self) -> float:
        return max(abs(x) for x in self.as_tuple())

    def is_zero(self) -> bool:
        return self.magnitude == 0.0

    def scaled(self, s: float) -> "DissipationParams":
        return DissipationParams(*(s * x for x in self.as_tuple()))

    @classmethod
    def weak_coupling(cls, alpha: float) -> "DissipationParams":
        """The gamma = 0 family allowed by complete positivity: a = alpha only."""
        return cls(a=alpha, alpha=alpha)


def _phase(z: complex) -> float:
    return 0.0 if z == 0 else math.atan2(z.imag, z.real)


@dataclass(frozen=True)
class DissipationCombos:
    """The dissipator entries A, B, C, D plus derived phases and CP intermediates."""

    A: float
    B: complex
    C: complex
    D: float
    phiB: float
    phiC: float
    R: float
    S: float
    T: float

    @classmethod
    def from_abcd(cls, A, B, C, D) -> "DissipationCombos":
        """Build combos from matrix entries, recovering the six parameters."""
        A = float(np.real(A))
        D = float(np.real(D))
        B = complex(B)
        C = complex(C)
        alpha = 0.5 * (A + B.real)
        a = 0.5 * (A - B.real)
        gamma = D
        return cls(
            A=A, B=B, C=C, D=D,
            phiB=_phase(B), phiC=_phase(C),
            R=0.5 * (alpha + gamma - a),
            S=0.5 * (a + gamma - alpha),
            T=0.5 * (a + alpha - gamma),
        )

    def to_params(self) -> DissipationParams:
        return DissipationParams(
            a=0.5 * (self.A - self.B.real),
            b=0.5 * self.B.imag,
            c=self.C.real,
            alpha=0.5 * (self.A + self.B.real),
            beta=self.C.imag,
            gamma=self.D,
        )


def combos(p: DissipationParams) -> DissipationCombos:
    return DissipationCombos(
        A=p.alpha + p.a,
        B=complex(p.alpha - p.a, 2.0 * p.b),
        C=complex(p.c, p.beta),
        D=p.gamma,
        phiB=_phase(complex(p.alpha - p.a, 2.0 * p.b)),
        phiC=_phase(complex(p.c, p.beta)),
        R=0.5 * (p.alpha + p.gamma - p.a),
        S=0.5 * (p.a + p.gamma - p.alpha),
        T=0.5 * (p.a + p.alpha - p.gamma),
    )


# -- complete positivity -----------------------------------------------------

@dataclass(frozen=True)
class CPCondition:
    name: str
    residual: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    conditions: tuple[CPCondition, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def violations(self) -> list[CPCondition]:
        return [c for c in self.conditions if not c.passed]

    def __getitem__(self, name: str) -> CPCondition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        if self.ok:
            return "all complete-positivity conditions satisfied"
        return "; ".join(f"{c.name} < 0 (residual {c.residual:.6g})" for c in self.violations)


def validate_cp(p: DissipationParams, rtol: float = 1e-12) -> ValidationReport:
    """Check the ten complete-positivity inequalities.

    Each residual must be >= 0.  The slack ``rtol * scale**degree`` is
    homogeneous in the parameters, so rescaling all of them never changes a
    verdict.
    """
    a, b, c, alpha, beta, gamma = p.as_tuple()
    cb = combos(p)
    R, S, T = cb.R, cb.S, cb.T
    checks = [
        ("a>=0", a, 1),
        ("alpha>=0", alpha, 1),
        ("gamma>=0", gamma, 1),
        ("2R>=0", 2 * R, 1),
        ("2S>=0", 2 * S, 1),
        ("2T>=0", 2 * T, 1),
        ("RS-b^2>=0", R * S - b * b, 2),
        ("RT-c^2>=0", R * T - c * c, 2),
        ("ST-beta^2>=0", S * T - beta * beta, 2),
        ("RST-2bc*beta-R*beta^2-S*c^2-T*b^2>=0",
         R * S * T - 2 * b * c * beta - R * beta ** 2 - S * c ** 2 - T * b ** 2, 3),
    ]
    scale = p.magnitude
    conds = tuple(
        CPCondition(name, float(res), bool(res >= -rtol * scale ** deg))
        for name, res, deg in checks
    )
    return ValidationReport(conds)


def kossakowski_matrix(p: DissipationParams) -> np.ndarray:
    """Real symmetric 3x3 Kossakowski matrix of the dissipator.

    Complete positivity is equivalent to this matrix being positive
    semidefinite; its principal minors are the inequalities checked by
    :func:`validate_cp`.
    """
    cb = combos(p)
    return np.array([
        [cb.R, -p.b, -p.c],
        [-p.b, cb.S, -p.beta],
        [-p.c, -p.beta, cb.T],
    ])


def params_from_kossakowski(K) -> DissipationParams:
    """Inverse of :func:`kossakowski_matrix` for a real symmetric matrix."""
    K = np.asarray(K, dtype=float)
    R, S, T = K[0, 0], K[1, 1], K[2, 2]
    return DissipationParams(
        a=S + T, b=-K[0, 1], c=-K[0, 2], alpha=R + T, beta=-K[1, 2], gamma=R + S,
    )


# -- observables -------------------------------------------------------------

@dataclass(frozen=True)
class PolarizerAngles:
    theta: float
    phi: float = 0.0


@dataclass(frozen=True, eq=False)
class Observable:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"observable must be 2x2, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > CONSTRUCTION_TOL:
            raise ValueError("observable must be hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def components(self) -> np.ndarray:
        """(O1, O2, O3, O4) in the same layout as a density matrix."""
        return vectorize(self.entries)

    @classmethod
    def identity(cls) -> "Observable":
        return cls(np.eye(2))


def projector(angles: PolarizerAngles) -> Observable:
    """Projector onto the fully polarized state with angles (theta, phi)."""
    th, ph = angles.theta, angles.phi
    s2, c2 = math.sin(2 * th), math.cos(2 * th)
    return Observable(0.5 * np.array([
        [1 + math.sin(ph) * s2, c2 - 1j * math.cos(ph) * s2],
        [c2 + 1j * math.cos(ph) * s2, 1 - math.sin(ph) * s2],
    ]))


def expectation(obs: Observable, state):
    """Tr(O rho) for one state vector or a stack of shape (n, 4).

    Note the cross pairing O3*rho4 + O4*rho3.
    """
    if isinstance(state, DensityMatrix):
        state = vectorize(state)
    s = np.asarray(state, dtype=complex)
    o1, o2, o3, o4 = obs.components
    val = o1 * s[..., 0] + o2 * s[..., 1] + o3 * s[..., 3] + o4 * s[..., 2]
    imag = np.max(np.abs(np.imag(val))) if np.size(val) else 0.0
    if imag > IMAG_ERROR_TOL:
        raise NonRealExpectation(f"expectation value has imaginary part {imag:.3g}")
    re = np.real(val)
    return float(re) if np.ndim(re) == 0 else re


def purity(rho) -> float:
    """Tr(rho^2); 1 for pure states, 1/2 for the depolarized state."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.real(np.trace(m @ m)))


# -- named states ------------------------------------------------------------

def state_R() -> DensityMatrix:
    return DensityMatrix(np.diag([1.0, 0.0]))


def state_L() -> DensityMatrix:
    return DensityMatrix(np.diag([0.0, 1.0]))


def linear_state(theta: float) -> DensityMatrix:
    """Linearly polarized pure state along ``theta``."""
    return DensityMatrix(projector(PolarizerAngles(theta, 0.0)).entries)


def stokes_state(s1: float, s2: float, s3: float) -> DensityMatrix:
    """State with normalized Stokes vector (s1, s2, s3), s3 = +1 for |R>.

    s1 = +1 is linear polarization at theta = 0 and s2 = +1 at theta = pi/4.
    """
    if s1 * s1 + s2 * s2 + s3 * s3 > 1.0 + CONSTRUCTION_TOL:
        raise NonPhysicalState("Stokes vector longer than 1")
    return DensityMatrix(0.5 * np.array([[1 + s3, s1 - 1j * s2], [s1 + 1j * s2, 1 - s3]]))


# -- sampled curves ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IntensitySeries:
    """A sampled transition-probability curve on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.times)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        if len(self.times) < 3:
            return True
        d = np.diff(self.times)
        return bool(np.abs(d - d[0]).max() <= rtol * max(abs(d[0]), abs(self.times[-1])))

    def with_noise(self, sigma: float, rng: np.random.Generator) -> "IntensitySeries":
        """Add Gaussian noise (values are not clipped)."""
        noisy = self.values + rng.normal(0.0, sigma, size=self.values.shape)
        return IntensitySeries(self.times, noisy, {**self.meta, "noise_sigma": sigma})
