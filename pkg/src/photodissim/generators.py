"""Generators of the polarization dynamics as 4x4 superoperators.

All superoperators act on the state vector (rho1, rho2, rho3, rho4).  The
private ``_..._arrays`` builders broadcast over parameter arrays so that the
integrator can advance many trajectories at once.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import DissipationCombos, HamiltonianParams
from .errors import AdiabaticityWarning, DegenerateHamiltonian

# lambda / omega above which the adiabatic treatment is flagged
ADIABATIC_THRESHOLD = 0.1


def hamiltonian_matrix(p: HamiltonianParams, t: float) -> np.ndarray:
    """The 2x2 Hamiltonian H(t) in the circular basis."""
    off = p.nu * np.exp(-1j * p.lam * t)
    return np.array([[p.omega0 + p.mu, off], [np.conj(off), p.omega0 - p.mu]])


def _hamiltonian_superop_arrays(mu, nu, lam, t) -> np.ndarray:
    mu, nu, lam, t = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (mu, nu, lam, t)))
    e = nu * np.exp(1j * lam * t)
    ec = np.conj(e)
    out = np.zeros(mu.shape + (4, 4), dtype=complex)
    out[..., 0, 2] = e
    out[..., 0, 3] = -ec
    out[..., 1, 2] = -e
    out[..., 1, 3] = ec
    out[..., 2, 0] = ec
    out[..., 2, 1] = -ec
    out[..., 2, 2] = -2 * mu
    out[..., 3, 0] = -e
    out[..., 3, 1] = e
    out[..., 3, 3] = 2 * mu
    return 1j * out


def hamiltonian_superop(p: HamiltonianParams, t) -> np.ndarray:
    """Superoperator of rho -> -i[H(t), rho]; ``t`` may be an array."""
    return _hamiltonian_superop_arrays(p.mu, p.nu, p.lam, t)


def _dissipator_arrays(A, B, C, D) -> np.ndarray:
    A, B, C, D = np.broadcast_arrays(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex),
                                     np.asarray(C, dtype=complex), np.asarray(D, dtype=complex))
    Cc, Bc = np.conj(C), np.conj(B)
    out = np.empty(A.shape + (4, 4), dtype=complex)
    out[..., 0, :] = np.stack([-D, D, -C, -Cc], axis=-1)
    out[..., 1, :] = np.stack([D, -D, C, Cc], axis=-1)
    out[..., 2, :] = np.stack([-Cc, Cc, -A, B], axis=-1)
    out[..., 3, :] = np.stack([-C, C, Bc, -A], axis=-1)
    return out


def dissipator_superop(cb: DissipationCombos) -> np.ndarray:
    return _dissipator_arrays(cb.A, cb.B, cb.C, cb.D)


def read_combos(matrix: np.ndarray) -> DissipationCombos:
    """Read (A, B, C, D) back off a dissipator-shaped matrix."""
    m = np.asarray(matrix)
    return DissipationCombos.from_abcd(A=-m[2, 2].real, B=m[2, 3], C=-m[0, 2], D=-m[0, 0].real)


def _require_splitting(p: HamiltonianParams) -> float:
    w = p.omega
    if w == 0.0:
        raise DegenerateHamiltonian()
    return w


def basis_change(p: HamiltonianParams, t) -> np.ndarray:
    """Unitary 4x4 map to the instantaneous eigenbasis of H(t)."""
    w = _require_splitting(p)
    mu, nu = p.mu, p.nu
    t = np.asarray(t, dtype=float)
    e = np.exp(1j * p.lam * t)
    ec = np.conj(e)
    out = np.empty(t.shape + (4, 4), dtype=complex)
    out[..., 0, :] = np.stack(np.broadcast_arrays(w + mu, w - mu, nu * e, nu * ec), axis=-1)
    out[..., 1, :] = np.stack(np.broadcast_arrays(w - mu, w + mu, -nu * e, -nu * ec), axis=-1)
    out[..., 2, :] = np.stack(np.broadcast_arrays(-nu * ec, nu * ec, w + mu, -(w - mu) * ec ** 2), axis=-1)
    out[..., 3, :] = np.stack(np.broadcast_arrays(-nu * e, nu * e, -(w - mu) * e ** 2, w + mu), axis=-1)
    return out / (2 * w)


def _transformed_abcd(cb: DissipationCombos, p: HamiltonianParams, t):
    w = _require_splitting(p)
    mu, nu, lam = p.mu, p.nu, p.lam
    t = np.asarray(t, dtype=float)
    Be = cb.B * np.exp(2j * lam * t)
    Ce = cb.C * np.exp(-1j * lam * t)
    k = nu * nu / (2 * w * w)
    m = 2 * mu * nu / (w * w)
    common = 2 * cb.D - cb.A + Be.real
    At = cb.A + k * common - m * Ce.real
    Dt = cb.D - k * common + m * Ce.real
    Bt = np.exp(-2j * lam * t) * (
        (1 - k) * Be.real + 1j * (mu / w) * Be.imag + m * Ce.real
        - 2j * (nu / w) * Ce.imag - k * (2 * cb.D - cb.A)
    )
    Ct = np.exp(1j * lam * t) * (
        (1 - 2 * nu * nu / (w * w)) * Ce.real + 1j * (mu / w) * Ce.imag
        - (mu * nu / (2 * w * w)) * common + 1j * (nu / (2 * w)) * Be.imag
    )
    return At, Bt, Ct, Dt


def transformed_dissipator(cb: DissipationCombos, p: HamiltonianParams, t: float) -> DissipationCombos:
    """Dissipator entries in the instantaneous eigenbasis at time ``t``.

    Closed-form linear combinations of (A, B, C, D); equal to reading off
    U(t) L U(t)^+.
    """
    At, Bt, Ct, Dt = _transformed_abcd(cb, p, float(t))
    return DissipationCombos.from_abcd(At, Bt, Ct, Dt)


def transformed_dissipator_superop(cb: DissipationCombos, p: HamiltonianParams, t) -> np.ndarray:
    """4x4 matrix of the rotated dissipator; broadcasts over ``t``."""
    return _dissipator_arrays(*_transformed_abcd(cb, p, t))


def berry_phase(p: HamiltonianParams) -> float:
    """Geometric frequency shift lambda_B = (lambda/2)(1 - mu/omega)."""
    w = _require_splitting(p)
    return 0.5 * p.lam * (1.0 - p.mu / w)


@dataclass(frozen=True)
class EffectiveHamiltonianDiag:
    berry_shift: float
    entries: tuple[complex, complex, complex, complex]

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(np.array(self.entries, dtype=complex))

    @property
    def frequency(self) -> float:
        """Shifted splitting omega + lambda_B."""
        return self.entries[3].imag / 2


def check_adiabatic(p: HamiltonianParams, stacklevel: int = 3) -> None:
    if p.adiabaticity > ADIABATIC_THRESHOLD:
        warnings.warn(
            f"lambda/omega = {p.adiabaticity:.3g} exceeds the adiabatic threshold {ADIABATIC_THRESHOLD}",
            AdiabaticityWarning, stacklevel=stacklevel,
        )


def effective_hamiltonian_adiabatic(p: HamiltonianParams) -> EffectiveHamiltonianDiag:
    """Diagonal generator in the instantaneous eigenbasis, off-diagonal terms dropped."""
    _require_splitting(p)
    check_adiabatic(p)
    lb = berry_phase(p)
    f = 2 * (p.omega + lb)
    return EffectiveHamiltonianDiag(berry_shift=lb, entries=(0j, 0j, -1j * f, 1j * f))


def adiabatic_frame_generator(cb: DissipationCombos, p: HamiltonianParams, t) -> np.ndarray:
    """Generator of the eigenbasis-frame equation: diagonal H_eff plus rotated dissipator."""
    _require_splitting(p)
    f = 2 * (p.omega + berry_phase(p))
    g = transformed_dissipator_superop(cb, p, t)
    g[..., 2, 2] += -1j * f
    g[..., 3, 3] += 1j * f
    return g

