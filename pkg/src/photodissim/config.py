"""Scenario configuration: TOML documents to validated ``ScenarioConfig``.

Schema (every section optional except ``hamiltonian``)::

    [hamiltonian]   omega0, mu, nu, lambda            (default 0)
    [dissipation]   a, b, c, alpha, beta, gamma       (default 0; a defaults to alpha)
    initial_state = "L" | "R"
                  | { kind = "linear", theta = ... }
                  | { kind = "stokes", s1 = ..., s2 = ..., s3 = ... }
    [analyzer]      theta, phi                        (default 0)
    [time]          t_final (100), dt (auto), samples (2048)
    solver = "numerical"      frame = "lab"           seed = 0
    outputs = ["probability"]
    [fit]           noise_sigma (0), [fit.initial_guess] omega, alpha, lambda, theta0, amplitude
"""
from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analysis import FitEstimates
from .core import (
    DensityMatrix,
    DissipationParams,
    HamiltonianParams,
    PolarizerAngles,
    linear_state,
    state_L,
    state_R,
    stokes_state,
    validate_cp,
)
from .errors import BadAxis, BadValue, MissingKey, NonCPDissipation, PhotodissimError
from .solvers import FRAMES, SOLVERS

OUTPUTS = ("trajectory", "probability", "spectrum", "fit")
DEFAULT_T_FINAL = 100.0
DEFAULT_SAMPLES = 2048

_HAM_KEYS = ("omega0", "mu", "nu", "lambda")
_DISS_KEYS = ("a", "b", "c", "alpha", "beta", "gamma")
_NONNEG = ("a", "alpha", "gamma")
_GUESS_KEYS = ("omega", "alpha", "lambda", "theta0", "amplitude")
_TOP_KEYS = ("hamiltonian", "dissipation", "initial_state", "analyzer", "time",
             "solver", "frame", "outputs", "fit", "seed")


@dataclass(frozen=True)
class InitialState:
    kind: str
    params: tuple[float, ...] = ()

    def density_matrix(self) -> DensityMatrix:
        if self.kind == "L":
            return state_L()
        if self.kind == "R":
            return state_R()
        if self.kind == "linear":
            return linear_state(*self.params)
        return stokes_state(*self.params)


@dataclass(frozen=True)
class TimeGrid:
    t_final: float = DEFAULT_T_FINAL
    dt: float | None = None
    samples: int = DEFAULT_SAMPLES


@dataclass(frozen=True)
class FitOptions:
    initial_guess: FitEstimates | None = None
    noise_sigma: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    hamiltonian: HamiltonianParams
    dissipation: DissipationParams = field(default_factory=DissipationParams)
    initial_state: InitialState = InitialState("L")
    analyzer: PolarizerAngles = PolarizerAngles(0.0, 0.0)
    time: TimeGrid = TimeGrid()
    solver: str = "numerical"
    frame: str = "lab"
    outputs: tuple[str, ...] = ("probability",)
    fit: FitOptions = FitOptions()
    seed: int = 0
    allow_noncp: bool = False
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def echo(self) -> dict:
        """The configuration with every default filled in, as plain data."""
        h, d, g = self.hamiltonian, self.dissipation, self.fit.initial_guess
        out: dict[str, Any] = {
            "hamiltonian": {"omega0": h.omega0, "mu": h.mu, "nu": h.nu, "lambda": h.lam},
            "dissipation": dict(zip(_DISS_KEYS, d.as_tuple())),
            "initial_state": {"kind": self.initial_state.kind, "params": list(self.initial_state.params)},
            "analyzer": {"theta": self.analyzer.theta, "phi": self.analyzer.phi},
            "time": {"t_final": self.time.t_final, "dt": self.time.dt, "samples": self.time.samples},
            "solver": self.solver,
            "frame": self.frame,
            "outputs": list(self.outputs),
            "fit": {"noise_sigma": self.fit.noise_sigma},
            "seed": self.seed,
            "allow_noncp": self.allow_noncp,
        }
        if g is not None:
            out["fit"]["initial_guess"] = dict(zip(_GUESS_KEYS, g.as_array().tolist()))
        return out


def _number(table: dict, key: str, path: str, default: float | None = 0.0) -> float | None:
    if key not in table:
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise BadValue(path, f"must be a number, got {v!r}")
    if not math.isfinite(v):
        raise BadValue(path, "must be finite")
    return float(v)


def _table(doc: dict, key: str, allowed: tuple[str, ...], required: bool = False) -> dict:
    if key not in doc:
        if required:
            raise MissingKey(key)
        return {}
    t = doc[key]
    if not isinstance(t, dict):
        raise BadValue(key, "must be a table")
    for k in t:
        if k not in allowed:
            raise BadValue(f"{key}.{k}", "unknown key")
    return t


def _initial_state(doc: dict) -> InitialState:
    v = doc.get("initial_state", "L")
    if isinstance(v, str):
        if v in ("L", "R"):
            return InitialState(v)
        raise BadValue("initial_state", f"expected 'L', 'R' or a table, got {v!r}")
    if not isinstance(v, dict) or "kind" not in v:
        raise MissingKey("initial_state.kind") if isinstance(v, dict) else BadValue("initial_state", "bad type")
    kind = v["kind"]
    if kind in ("L", "R"):
        return InitialState(kind)
    if kind == "linear":
        return InitialState("linear", (_number(v, "theta", "initial_state.theta", None) or 0.0,))
    if kind == "stokes":
        s = tuple(_number(v, k, f"initial_state.{k}", None) for k in ("s1", "s2", "s3"))
        for k, x in zip(("s1", "s2", "s3"), s):
            if x is None:
                raise MissingKey(f"initial_state.{k}")
        if s[0] ** 2 + s[1] ** 2 + s[2] ** 2 > 1 + 1e-12:
            raise BadValue("initial_state", "Stokes vector must have length <= 1")
        return InitialState("stokes", s)
    raise BadValue("initial_state.kind", f"unknown kind {kind!r}")


def config_from_dict(doc: dict, allow_noncp: bool = False) -> ScenarioConfig:
    for k in doc:
        if k not in _TOP_KEYS:
            raise BadValue(k, "unknown key")
    ht = _table(doc, "hamiltonian", _HAM_KEYS, required=True)
    h = HamiltonianParams(*(_number(ht, k, f"hamiltonian.{k}") for k in _HAM_KEYS))

    dt_ = _table(doc, "dissipation", _DISS_KEYS)
    vals = {k: _number(dt_, k, f"dissipation.{k}") for k in _DISS_KEYS}
    if "a" not in dt_:
        # alpha-only documents describe the CP-valid family a = alpha
        vals["a"] = vals["alpha"]
    for k in _NONNEG:
        if vals[k] < 0:
            raise BadValue(f"dissipation.{k}", "must be ≥ 0")
    d = DissipationParams(**vals)
    report = validate_cp(d)
    if not report.ok and not allow_noncp:
        raise NonCPDissipation(report.summary())

    at = _table(doc, "analyzer", ("theta", "phi"))
    analyzer = PolarizerAngles(_number(at, "theta", "analyzer.theta"), _number(at, "phi", "analyzer.phi"))

    tt = _table(doc, "time", ("t_final", "dt", "samples"))
    t_final = _number(tt, "t_final", "time.t_final", DEFAULT_T_FINAL)
    if t_final < 0:
        raise BadValue("time.t_final", "must be ≥ 0")
    dt = _number(tt, "dt", "time.dt", None)
    if dt is not None and dt <= 0:
        raise BadValue("time.dt", "must be > 0")
    samples = tt.get("samples", DEFAULT_SAMPLES)
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 2:
        raise BadValue("time.samples", "must be an integer ≥ 2")

    solver = doc.get("solver", "numerical")
    if solver not in SOLVERS:
        raise BadValue("solver", f"must be one of {', '.join(SOLVERS)}")
    frame = doc.get("frame", "lab")
    if frame not in FRAMES:
        raise BadValue("frame", f"must be one of {', '.join(FRAMES)}")
    outputs = doc.get("outputs", ["probability"])
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        raise BadValue("outputs", f"must be a list drawn from {', '.join(OUTPUTS)}")

    ft = _table(doc, "fit", ("initial_guess", "noise_sigma"))
    sigma = _number(ft, "noise_sigma", "fit.noise_sigma")
    if sigma < 0:
        raise BadValue("fit.noise_sigma", "must be ≥ 0")
    guess = None
    if "initial_guess" in ft:
        gt = _table(ft, "initial_guess", _GUESS_KEYS)
        g = []
        for k in _GUESS_KEYS:
            x = _number(gt, k, f"fit.initial_guess.{k}", None)
            if x is None:
                raise MissingKey(f"fit.initial_guess.{k}")
            g.append(x)
        if g[1] < 0:
            raise BadValue("fit.initial_guess.alpha", "must be ≥ 0")
        guess = FitEstimates(*g)

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise BadValue("seed", "must be an integer")

    return ScenarioConfig(
        hamiltonian=h, dissipation=d, initial_state=_initial_state(doc), analyzer=analyzer,
        time=TimeGrid(t_final, dt, samples), solver=solver, frame=frame,
        outputs=tuple(dict.fromkeys(outputs)), fit=FitOptions(guess, sigma), seed=seed,
        allow_noncp=allow_noncp, raw=copy.deepcopy(doc),
    )


def parse_config(text: str, allow_noncp: bool = False) -> ScenarioConfig:
    """Parse and validate a TOML scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise BadValue("<document>", f"not valid TOML: {exc}") from None
    return config_from_dict(doc, allow_noncp=allow_noncp)


NUMERIC_AXES = tuple(
    [f"hamiltonian.{k}" for k in _HAM_KEYS] + [f"dissipation.{k}" for k in _DISS_KEYS]
    + ["analyzer.theta", "analyzer.phi", "time.t_final", "time.dt", "fit.noise_sigma"]
)


def with_value(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Copy of ``cfg`` with the numeric key ``axis`` set to ``value``."""
    if axis not in NUMERIC_AXES:
        raise BadAxis(axis)
    doc = copy.deepcopy(cfg.raw)
    section, key = axis.split(".")
    doc.setdefault(section, {})[key] = value
    try:
        return config_from_dict(doc, allow_noncp=cfg.allow_noncp)
    except PhotodissimError as exc:
        raise BadValue(axis, f"value {value!r} rejected: {exc}") from exc
