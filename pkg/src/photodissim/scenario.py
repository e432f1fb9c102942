"""Run configured scenarios and write their artifacts."""
from __future__ import annotations

import json
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .analysis import (
    FitResult,
    damping_envelope,
    fit_dissipative,
    guess_from_data,
    spectrum,
)
from .config import ScenarioConfig, with_value
from .core import vectorize
from .errors import PhotodissimError, RegimeWarning, TooFewExtrema
from .observables import prob_from_trajectory
from .solvers import EvolutionSpec, Trajectory, evolve

log = logging.getLogger(__name__)

FORMATS = ("csv", "json")


@dataclass
class RunReport:
    config: dict
    warnings: list[str] = field(default_factory=list)
    artifacts: list[Path] = field(default_factory=list)
    wall_time: float = 0.0
    results: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "warnings": list(self.warnings),
            "artifacts": [str(p) for p in self.artifacts],
            "wall_time": self.wall_time,
            "results": self.results,
        }


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_table(path: Path, header: Sequence[str], columns: Sequence[np.ndarray], fmt: str) -> Path:
    if fmt == "csv":
        path = path.with_suffix(".csv")
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in zip(*columns)]
        path.write_text("\n".join(lines) + "\n")
    else:
        path = path.with_suffix(".json")
        doc = {h: [float(v) for v in c] for h, c in zip(header, columns)}
        path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def _write_fit(path: Path, fit: FitResult, guess) -> list[Path]:
    e = fit.estimates
    flat = {
        "omega": e.omega, "alpha": e.alpha, "lambda": e.lam, "theta0": e.theta0, "amplitude": e.amplitude,
        "nominal_amplitude": e.nominal_amplitude if e.alpha < 2 * e.omega else float("nan"),
        "residual_rms": fit.residual_rms, "converged": fit.converged,
        "iterations": fit.iterations, "total_iterations": fit.total_iterations,
        "guess_omega": guess.omega, "guess_alpha": guess.alpha, "guess_lambda": guess.lam,
        "guess_theta0": guess.theta0, "guess_amplitude": guess.amplitude,
    }

    def show(v):
        if isinstance(v, bool):
            return str(v).lower()
        return str(v) if isinstance(v, int) else _fmt(v)

    txt = path.with_suffix(".txt")
    txt.write_text("".join(f"{k}={show(v)}\n" for k, v in flat.items()))
    js = path.with_suffix(".json")
    js.write_text(json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v)
                              for k, v in flat.items()}, indent=1) + "\n")
    return [txt, js]


def _regime_checks(cfg: ScenarioConfig) -> None:
    h, d = cfg.hamiltonian, cfg.dissipation
    if d.alpha > 2 * h.omega and d.alpha > 0:
        warnings.warn(f"overdamped regime: alpha = {d.alpha} > 2 omega = {2 * h.omega}", RegimeWarning, stacklevel=2)


def _execute(cfg: ScenarioConfig, out: Path, fmt: str, seed: int, report: RunReport) -> None:
    _regime_checks(cfg)
    spec = EvolutionSpec(
        hamiltonian=cfg.hamiltonian, dissipation=cfg.dissipation,
        initial=vectorize(cfg.initial_state.density_matrix()), t_final=cfg.time.t_final,
        dt=cfg.time.dt, solver=cfg.solver, samples=cfg.time.samples if cfg.time.t_final > 0 else None,
        frame=cfg.frame,
    )
    traj: Trajectory = evolve(spec)
    report.results["trace_deviation"] = traj.trace_deviation()
    report.results["min_eigenvalue"] = traj.min_eigenvalue()
    out.mkdir(parents=True, exist_ok=True)

    if "trajectory" in cfg.outputs:
        s = traj.states
        cols = [traj.times, s[:, 0].real, s[:, 0].imag, s[:, 1].real, s[:, 1].imag, s[:, 2].real, s[:, 2].imag]
        header = ["t", "rho1_re", "rho1_im", "rho2_re", "rho2_im", "rho3_re", "rho3_im"]
        report.artifacts.append(_write_table(out / "trajectory", header, cols, fmt))

    wants = {"probability", "spectrum", "fit"} & set(cfg.outputs)
    if not wants:
        return
    series = prob_from_trajectory(traj, cfg.analyzer)
    if cfg.fit.noise_sigma > 0:
        series = series.with_noise(cfg.fit.noise_sigma, np.random.default_rng(seed))
    if "probability" in cfg.outputs:
        report.artifacts.append(_write_table(out / "probability", ["t", "p_theta"], [series.times, series.values], fmt))
    try:
        report.results["envelope_alpha"] = damping_envelope(series)
    except TooFewExtrema:
        pass
    if "spectrum" in cfg.outputs:
        spec_report = spectrum(series)
        report.artifacts.append(_write_table(out / "spectrum", ["omega", "magnitude"],
                                             [spec_report.frequencies, spec_report.magnitudes], fmt))
        report.results["peaks"] = [list(p) for p in spec_report.peaks[:4]]
    if "fit" in cfg.outputs:
        guess = cfg.fit.initial_guess or guess_from_data(series)
        fit = fit_dissipative(series, guess)
        report.artifacts.extend(_write_fit(out / "fit", fit, guess))
        report.results["fit"] = {
            "omega": fit.estimates.omega, "alpha": fit.estimates.alpha, "lambda": fit.estimates.lam,
            "theta0": fit.estimates.theta0, "amplitude": fit.estimates.amplitude,
            "residual_rms": fit.residual_rms, "converged": fit.converged,
        }


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path = "out", fmt: str = "csv",
                 seed: int | None = None) -> RunReport:
    """Evolve, derive the requested outputs and write them under ``out_dir``.

    Warnings raised along the way are collected into the report, each
    distinct condition once.  Errors are logged with the run context and re-raised.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    seed = cfg.seed if seed is None else seed
    report = RunReport(config=cfg.echo())
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            _execute(cfg, Path(out_dir), fmt, seed, report)
        except PhotodissimError as exc:
            log.error("scenario failed (solver=%s, outputs=%s): %s", cfg.solver, list(cfg.outputs), exc)
            raise
    seen = set()
    for w in caught:
        text = f"{w.category.__name__}: {w.message}"
        if text not in seen:
            seen.add(text)
            report.warnings.append(text)
            log.warning("%s", text)
    report.wall_time = time.perf_counter() - start
    return report


def _axis_dir(axis: str, value: float) -> str:
    return f"{axis}={value!r}"


def _sweep_one(job):
    cfg, out, fmt, seed = job
    return run_scenario(cfg, out, fmt=fmt, seed=seed)


def sweep(cfg: ScenarioConfig, axis: str, values: Sequence[float], out_dir: str | Path = "out",
          fmt: str = "csv", seed: int | None = None, max_workers: int | None = None) -> list[RunReport]:
    """One independent run per value; reports come back in input order.

    Runs execute in separate processes (warning capture is process-global);
    ``max_workers=1`` runs them in-process, one after another.
    """
    configs = [with_value(cfg, axis, v) for v in values]
    if not configs:
        return []
    root = Path(out_dir)
    jobs = [(c, root / _axis_dir(axis, v), fmt, seed) for v, c in zip(values, configs)]
    if max_workers == 1 or len(jobs) == 1:
        return [_sweep_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_sweep_one, jobs))
