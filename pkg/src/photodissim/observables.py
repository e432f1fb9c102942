"""Transition probabilities P_theta(t) for an initially left-polarized photon.

The closed forms assume the analyzer is linear (phi = 0) and the initial
state is |L> = diag(0, 1).  ``prob_from_trajectory`` is the generic route
and accepts any analyzer.  All closed forms broadcast over ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DissipationCombos,
    DissipationParams,
    HamiltonianParams,
    IntensitySeries,
    PolarizerAngles,
    combos,
    expectation,
    projector,
)
from .errors import DegenerateHamiltonian, ProbabilityOutOfRange, ResonantDenominator, UnsupportedRegime
from .generators import berry_phase

PROBABILITY_SLACK = 1e-6
RESONANCE_TOL = 1e-9


def prob_adiabatic_general(p: HamiltonianParams, theta: float, t):
    """Adiabatic, dissipation-free probability for arbitrary (mu, nu)."""
    w = p.omega
    if w == 0:
        raise DegenerateHamiltonian()
    t = np.asarray(t, dtype=float)
    phase = 2 * (w + berry_phase(p)) * t - p.lam * t
    x = 2 * theta - p.lam * t
    return 0.5 * (1 + (p.mu * p.nu / w**2) * np.cos(x) * (np.cos(phase) - 1)
                  + (p.nu / w) * np.sin(x) * np.sin(phase))


def prob_adiabatic_mu0(omega: float, lam: float, theta: float, t):
    t = np.asarray(t, dtype=float)
    return 0.5 * (1 + 0.5 * (np.cos(2 * omega * t + lam * t - 2 * theta)
                             + np.cos(2 * omega * t - lam * t + 2 * theta + math.pi)))


def prob_dissipative(omega: float, alpha: float, lam: float, theta: float, t):
    """Underdamped probability with damping e^{-alpha t} and frequency Omega."""
    if not alpha < 2 * omega:
        raise UnsupportedRegime(f"alpha = {alpha} >= 2 omega: use prob_overdamped")
    if alpha < 0:
        raise UnsupportedRegime("alpha must be >= 0")
    t = np.asarray(t, dtype=float)
    big = math.sqrt(omega**2 - alpha**2 / 4)
    osc = np.cos(2 * big * t + lam * t - 2 * theta) + np.cos(2 * big * t - lam * t + 2 * theta + math.pi)
    return 0.5 * (1 + (omega / (2 * big)) * np.exp(-alpha * t) * osc)


def prob_overdamped(omega: float, alpha: float, lam: float, theta: float, t):
    """Overdamped probability, alpha > 2 omega.

    Uses sinh(2 Wt) with W = sqrt(alpha^2/4 - omega^2), the analytic
    continuation of the underdamped form.
    """
    if not alpha > 2 * omega:
        raise UnsupportedRegime(f"alpha = {alpha} <= 2 omega: use prob_dissipative")
    t = np.asarray(t, dtype=float)
    wbar = math.sqrt(alpha**2 / 4 - omega**2)
    # e^{-alpha t} sinh(2 wbar t) without overflow
    decay = 0.5 * (np.exp((2 * wbar - alpha) * t) - np.exp(-(2 * wbar + alpha) * t))
    return 0.5 * (1 + (omega / wbar) * decay * np.sin(2 * theta - lam * t))


def _check_denominators(omega: float, lam: float):
    for name, v in (("2omega+lambda", 2 * omega + lam), ("2omega-lambda", 2 * omega - lam),
                    ("omega+lambda", omega + lam), ("omega-lambda", omega - lam),
                    ("4omega+lambda", 4 * omega + lam), ("4omega-lambda", 4 * omega - lam)):
        if abs(v) < RESONANCE_TOL:
            raise ResonantDenominator(f"{name} = {v:.3g} is resonant")


def perturbative_terms(omega: float, lam: float, cb: DissipationCombos, t, printed: bool = False):
    """The secular factor, Delta(t) and Phi(t) of the first-order probability.

    The default uses the first-order Dyson result: secular term
    -(|B|/2 lambda) sin(lambda t) cos(lambda t + phi_B).  ``printed=True``
    evaluates the uncorrected variant, with Delta halved and secular term
    (|B|/2 lambda) sin(lambda t) sin(lambda t + phi_B), whose error is first order.
    """
    _check_denominators(omega, lam)
    t = np.asarray(t, dtype=float)
    w = omega
    bB, bC = abs(cb.B), abs(cb.C)
    pB, pC = cb.phiB, cb.phiC
    delta = (bC / 2) * (2 * lam / (4 * w * w - lam * lam) * math.sin(pC)
                        - np.sin(2 * w * t + lam * t - pC) / (2 * w + lam)
                        - np.sin(2 * w * t - lam * t + pC) / (2 * w - lam)) \
        + (bB / 8) * (2 * w / (w * w - lam * lam) * math.sin(pB)
                      + np.sin(2 * w * t - 2 * lam * t - pB) / (w - lam)
                      - np.sin(2 * w * t + 2 * lam * t + pB) / (w + lam))
    phi = (bB / 4) * np.sin(lam * t + pB) * (np.sin((2 * w + lam) * t) / (2 * w + lam)
                                             - np.sin((2 * w - lam) * t) / (2 * w - lam)) \
        + 2 * bC * np.sin(lam * t / 2 - pC) * (np.sin((2 * w - lam / 2) * t) / (4 * w - lam)
                                               + np.sin((2 * w + lam / 2) * t) / (4 * w + lam))
    # sin(lambda t)/lambda, continuous at lambda = 0
    sinc = t * np.sinc(lam * t / math.pi)
    if printed:
        secular = (bB / 2) * sinc * np.sin(lam * t + pB)
    else:
        delta = 2 * delta
        secular = -(bB / 2) * sinc * np.cos(lam * t + pB)
    return secular, delta, phi


def prob_perturbative(p: HamiltonianParams, cb: DissipationCombos, theta: float, t, printed: bool = False):
    """First-order probability in the dissipation parameters (mu = 0)."""
    if p.mu != 0:
        raise UnsupportedRegime("first-order closed form requires mu = 0")
    w = p.omega
    if w == 0:
        raise DegenerateHamiltonian()
    t = np.asarray(t, dtype=float)
    secular, delta, phi = perturbative_terms(w, p.lam, cb, t, printed=printed)
    x = 2 * theta - p.lam * t
    body = -delta * np.cos(x) + ((1 + secular) * np.sin(2 * w * t) - phi) * np.sin(x)
    return 0.5 + 0.5 * np.exp(-(cb.D + cb.A / 2) * t) * body


def prob_from_trajectory(traj, angles: PolarizerAngles) -> IntensitySeries:
    """Pointwise analyzer expectation along a trajectory."""
    raw = np.asarray(expectation(projector(angles), traj.states), dtype=float)
    if raw.size and (raw.min() < -PROBABILITY_SLACK or raw.max() > 1 + PROBABILITY_SLACK):
        raise ProbabilityOutOfRange(f"probability range [{raw.min():.3g}, {raw.max():.3g}] leaves [0, 1]")
    meta = {"theta": angles.theta, "phi": angles.phi}
    meta.update({k: v for k, v in traj.diagnostics.items() if k in ("solver", "frame")})
    return IntensitySeries(traj.times, np.clip(raw, 0.0, 1.0), meta)


KINDS = ("adiabatic_general", "adiabatic_mu0", "dissipative", "overdamped", "perturbative")


@dataclass(frozen=True)
class ProbabilityModel:
    """A closed-form probability curve bound to its parameters."""

    kind: str
    hamiltonian: HamiltonianParams
    dissipation: DissipationParams = field(default_factory=DissipationParams)
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def for_params(cls, h: HamiltonianParams, d: DissipationParams, theta: float) -> "ProbabilityModel":
        """Pick the most specific closed form applicable to (h, d)."""
        if d.is_zero():
            return cls("adiabatic_mu0" if h.mu == 0 else "adiabatic_general", h, d, theta)
        weak = d.a == d.alpha and d.b == d.c == d.beta == d.gamma == 0
        if h.mu == 0 and weak:
            return cls("dissipative" if d.alpha < 2 * h.omega else "overdamped", h, d, theta)
        return cls("perturbative", h, d, theta)

    def __call__(self, t):
        h, d = self.hamiltonian, self.dissipation
        if self.kind == "adiabatic_general":
            return prob_adiabatic_general(h, self.theta, t)
        if self.kind == "adiabatic_mu0":
            return prob_adiabatic_mu0(h.omega, h.lam, self.theta, t)
        if self.kind == "dissipative":
            return prob_dissipative(h.omega, d.alpha, h.lam, self.theta, t)
        if self.kind == "overdamped":
            return prob_overdamped(h.omega, d.alpha, h.lam, self.theta, t)
        return prob_perturbative(h, combos(d), self.theta, t)

    def series(self, times) -> IntensitySeries:
        times = np.asarray(times, dtype=float)
        vals = np.broadcast_to(np.asarray(self(times), dtype=float), times.shape)
        return IntensitySeries(times, np.clip(vals, 0.0, 1.0), {"kind": self.kind, "theta": self.theta})
