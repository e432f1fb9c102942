"""Signal analysis of intensity curves.

Spectral peaks locate the split birefringence lines 2*Omega +/- lambda, the
envelope of |P - 1/2| gives the damping rate, and a nonlinear least-squares
fit recovers the parameters of the damped oscillation

    P(t) = 1/2 + A0 e^{-alpha t} sin(2 Omega t) sin(2 theta0 - lambda t),
    Omega = sqrt(omega^2 - alpha^2/4),

which is the underdamped closed form with the amplitude A0 = omega/(2 Omega)
left free to absorb analyzer calibration.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import IntensitySeries
from .errors import (
    InsufficientPeaks,
    NoConvergence,
    NonUniformGrid,
    TooFewExtrema,
    TooFewSamples,
)

log = logging.getLogger(__name__)

MIN_SAMPLES = 64
PEAK_THRESHOLD = 5.0
MIN_EXTREMA = 5
MAX_ITERATIONS = 200
STEP_RTOL = 1e-10


# -- spectrum ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumReport:
    frequencies: np.ndarray
    magnitudes: np.ndarray
    peaks: list[tuple[float, float]] = field(default_factory=list)

    @property
    def resolution(self) -> float:
        """Angular-frequency bin width."""
        return float(self.frequencies[1] - self.frequencies[0])


def _parabolic(y0: float, y1: float, y2: float) -> tuple[float, float]:
    """Vertex offset (in bins) and height of the parabola through three points."""
    den = y0 - 2 * y1 + y2
    if den == 0:
        return 0.0, y1
    d = 0.5 * (y0 - y2) / den
    return d, y1 - 0.25 * (y0 - y2) * d


def spectrum(series: IntensitySeries, window: str = "hann") -> SpectrumReport:
    """Magnitude spectrum of the mean-subtracted, windowed series.

    Frequencies are angular, 2 pi k / (N dt).  Peaks are local maxima above
    five times the median magnitude, refined by a three-point parabola and
    sorted by decreasing magnitude.
    """
    n = len(series)
    if n < MIN_SAMPLES:
        raise TooFewSamples(f"spectrum needs at least {MIN_SAMPLES} samples, got {n}")
    if not series.is_uniform():
        raise NonUniformGrid("spectrum requires a uniform time grid")
    if window == "hann":
        w = np.hanning(n)
    elif window == "rectangular":
        w = np.ones(n)
    else:
        raise ValueError(f"unknown window {window!r}")
    x = series.values - series.values.mean()
    mags = np.abs(np.fft.rfft(x * w)) / w.sum()
    freqs = 2 * math.pi * np.fft.rfftfreq(n, d=series.step)

    peaks: list[tuple[float, float]] = []
    floor = PEAK_THRESHOLD * np.median(mags)
    scale = mags.max() if mags.size else 0.0
    if scale > 0:
        inner = mags[1:-1]
        idx = np.nonzero((inner > mags[:-2]) & (inner >= mags[2:]) & (inner > floor)
                         & (inner > 1e-12 * scale))[0] + 1
        dw = freqs[1] - freqs[0]
        for k in idx:
            d, h = _parabolic(mags[k - 1], mags[k], mags[k + 1])
            peaks.append((float(freqs[k] + d * dw), float(h)))
        peaks.sort(key=lambda p: -p[1])
    return SpectrumReport(freqs, mags, peaks)


def berry_split(report: SpectrumReport) -> tuple[float, float]:
    """Center and half-separation of the two dominant peaks."""
    if len(report.peaks) < 2:
        raise InsufficientPeaks(f"need two peaks, found {len(report.peaks)}")
    f1, f2 = sorted(p[0] for p in report.peaks[:2])
    return 0.5 * (f1 + f2), 0.5 * (f2 - f1)


# -- envelope ------------------------------------------------------------------

def _extrema(series: IntensitySeries) -> tuple[np.ndarray, np.ndarray]:
    y = np.abs(series.values - 0.5)
    inner = y[1:-1]
    idx = np.nonzero((inner > y[:-2]) & (inner >= y[2:]))[0] + 1
    # drop maxima at numerical noise level
    if idx.size:
        idx = idx[y[idx] > 1e-6 * y[idx].max()]
    t, h = [], []
    for k in idx:
        d, v = _parabolic(y[k - 1], y[k], y[k + 1])
        t.append(series.times[k] + d * series.step)
        h.append(v)
    return np.array(t), np.array(h)


def damping_envelope(series: IntensitySeries) -> float:
    """Damping rate from a log-linear fit to the peaks of |P - 1/2|."""
    t, h = _extrema(series)
    if len(t) < MIN_EXTREMA:
        raise TooFewExtrema(f"need at least {MIN_EXTREMA} extrema, found {len(t)}")
    slope, _ = np.polyfit(t, np.log(h), 1)
    return float(-slope)


# -- nonlinear fit -------------------------------------------------------------

@dataclass(frozen=True)
class FitEstimates:
    omega: float
    alpha: float
    lam: float
    theta0: float
    amplitude: float

    def as_array(self) -> np.ndarray:
        return np.array([self.omega, self.alpha, self.lam, self.theta0, self.amplitude])

    @classmethod
    def from_array(cls, x) -> "FitEstimates":
        return cls(*(float(v) for v in x))

    @property
    def nominal_amplitude(self) -> float:
        """omega/(2 Omega), the amplitude the undistorted closed form predicts."""
        return self.omega / (2 * math.sqrt(self.omega**2 - self.alpha**2 / 4))


@dataclass(frozen=True)
class FitResult:
    estimates: FitEstimates
    residual_rms: float
    converged: bool
    iterations: int
    total_iterations: int = 0


def canonical(e: FitEstimates) -> FitEstimates:
    """Representative with A0 >= 0, lambda >= 0 and theta0 in [0, pi).

    The model is invariant under (A0, theta0) -> (-A0, theta0 + pi/2) and
    (lambda, theta0) -> (-lambda, pi/2 - theta0).
    """
    amp, theta0, lam = e.amplitude, e.theta0, e.lam
    if amp < 0:
        amp, theta0 = -amp, theta0 + 0.5 * math.pi
    if lam < 0:
        lam, theta0 = -lam, 0.5 * math.pi - theta0
    theta0 %= math.pi
    if theta0 >= math.pi:
        # a tiny negative angle rounds up to pi under the modulo
        theta0 = 0.0
    return FitEstimates(e.omega, e.alpha, lam, theta0, amp)


def damped_model(x, t: np.ndarray) -> np.ndarray:
    """Fit model evaluated at parameters x = (omega, alpha, lambda, theta0, A0)."""
    omega, alpha, lam, theta0, amp = x
    big = math.sqrt(max(omega * omega - 0.25 * alpha * alpha, 0.0))
    return 0.5 + amp * np.exp(-alpha * t) * np.sin(2 * big * t) * np.sin(2 * theta0 - lam * t)


def _project(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x[0] = abs(x[0])
    x[1] = min(max(x[1], 0.0), 2 * x[0] * (1 - 1e-9))
    return x


def _jacobian(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    jac = np.empty((t.size, x.size))
    for j in range(x.size):
        h = 1e-6 * max(abs(x[j]), 1e-2)
        up, dn = x.copy(), x.copy()
        up[j] += h
        dn[j] -= h
        if j == 1 and dn[1] < 0:
            # one-sided at the alpha >= 0 boundary
            dn[1] = x[1]
            jac[:, j] = (damped_model(up, t) - damped_model(dn, t)) / h
            continue
        jac[:, j] = (damped_model(up, t) - damped_model(dn, t)) / (2 * h)
    return jac


def _levenberg_marquardt(x0: np.ndarray, t: np.ndarray, y: np.ndarray, max_iter: int):
    x = _project(np.asarray(x0, dtype=float))
    r = damped_model(x, t) - y
    cost = float(r @ r)
    damping = 1e-3
    for it in range(1, max_iter + 1):
        jac = _jacobian(x, t)
        a = jac.T @ jac
        g = jac.T @ r
        diag = np.diag(a).copy()
        diag[diag == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(a + damping * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                damping *= 10
                continue
            trial = _project(x + step)
            taken = trial - x
            rel = np.linalg.norm(taken) / (np.linalg.norm(x) + 1e-300)
            if rel < STEP_RTOL:
                return x, cost, True, it
            rt = damped_model(trial, t) - y
            ct = float(rt @ rt)
            if ct < cost:
                stalled = cost - ct <= 1e-15 * cost
                x, r, cost = trial, rt, ct
                damping = max(damping / 3, 1e-12)
                if stalled:
                    return x, cost, True, it
                break
            damping *= 4
            if damping > 1e12:
                # no downhill direction left: the residual has stalled
                return x, cost, True, it
    return x, cost, False, max_iter


def fit_dissipative(series: IntensitySeries, initial_guess: FitEstimates, *,
                    max_iterations: int = MAX_ITERATIONS, strict: bool = False) -> FitResult:
    """Least-squares fit of the damped oscillation model.

    Levenberg-Marquardt with a central-difference Jacobian and alpha
    projected onto [0, 2 omega).  The time window grows geometrically from a
    few oscillation periods to the full series, each stage warm-started from
    the previous one, so that a rough frequency guess does not lock onto a
    neighbouring phase branch.  ``iterations`` counts the final full-window
    stage.  Estimates are reported in the canonical form of ``canonical``.
    A fit that hits ``max_iterations`` is returned flagged
    ``converged=False``, or raises NoConvergence when ``strict``.
    """
    t = series.times
    y = series.values
    x = initial_guess.as_array()
    if x[1] < 0:
        raise ValueError("initial guess must have alpha >= 0")
    n = len(t)
    period = math.pi / max(abs(x[0]), 1e-12)
    first = int(np.searchsorted(t, t[0] + 2 * period))
    sizes = []
    m = max(first, 32)
    while m < n:
        sizes.append(m)
        m *= 2
    sizes.append(n)
    total = 0
    converged, it, cost = False, 0, float("nan")
    for m in sizes:
        x, cost, converged, it = _levenberg_marquardt(x, t[:m], y[:m], max_iterations)
        total += it
    rms = math.sqrt(cost / n)
    result = FitResult(canonical(FitEstimates.from_array(x)), rms, converged, it, total)
    log.debug("fit: %s after %d iterations (rms %.3g)", "converged" if converged else "stopped", it, rms)
    if strict and not converged:
        raise NoConvergence(f"fit did not converge in {max_iterations} iterations (rms {rms:.3g})")
    return result


def guess_from_data(series: IntensitySeries) -> FitEstimates:
    """Starting point for the fit, derived from the series alone.

    The spectrum gives 2 Omega and lambda, the envelope gives alpha, and
    (theta0, A0) follow from a linear least-squares solve on the two
    quadrature components at each candidate lambda.
    """
    report = spectrum(series)
    if not report.peaks:
        # strongly damped lines are too broad to clear the peak threshold
        k = int(np.argmax(report.magnitudes[1:])) + 1
        if report.magnitudes[k] == 0:
            raise InsufficientPeaks("constant series: nothing to fit")
        report = SpectrumReport(report.frequencies, report.magnitudes,
                                [(float(report.frequencies[k]), float(report.magnitudes[k]))])
    try:
        center, lam = berry_split(report)
        if abs(center - report.peaks[0][0]) > 4 * lam:
            center, lam = report.peaks[0][0], 0.0
    except InsufficientPeaks:
        center, lam = report.peaks[0][0], 0.0
    try:
        alpha = max(damping_envelope(series), 0.0)
    except TooFewExtrema:
        alpha = 0.0
    big = center / 2
    omega = math.sqrt(big * big + alpha * alpha / 4)
    alpha = min(alpha, 1.9 * omega)
    t, y = series.times, series.values - 0.5
    base = np.exp(-alpha * t) * np.sin(2 * big * t)
    # lambda = 0 is a saddle of the fit, so scan the band the spectrum cannot resolve
    candidates = np.concatenate([[lam, -lam], np.linspace(-report.resolution, report.resolution, 41)])
    best = None
    for lam_s in candidates:
        basis = np.stack([base * np.cos(lam_s * t), -base * np.sin(lam_s * t)], axis=1)
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        res = float(np.sum((basis @ coef - y) ** 2))
        if best is None or res < best[0]:
            best = (res, float(lam_s), coef)
    _, lam_s, (c1, c2) = best
    return canonical(FitEstimates(omega, alpha, lam_s, 0.5 * math.atan2(c1, c2), math.hypot(c1, c2)))
