"""Configuration schema, result reports, and trajectory file IO.

A problem lives in one JSON document with top-level keys ``kind``,
``model``, ``bounds``, ``estimation``, optional ``grid`` (continuous
problems), optional ``simulation``, and ``seed``. Matrices are nested
row-major lists; time-varying coefficients are tagged objects

    {"type": "constant",   "value": [[...]]}
    {"type": "table",      "times": [t0, ...], "values": [[[...]], ...]}
    {"type": "polynomial", "coefficients": [[[...]], ...]}

Validation is layered: JSON syntax errors raise ParseError, layout
violations raise SchemaError with the offending field path, and shape
mismatches raise DimensionError (a SchemaError subclass). All checks
run before any solve is attempted.

Reports serialize with ``sigma_hat`` emitted as the string "infinite"
when the radius is infinite, never as a bare non-numeric float token.
Floats round-trip exactly: both JSON and CSV emit shortest repr, which
Python guarantees to parse back to the identical double.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .continuous import (
    ConstantFunction,
    ContinuousDAE,
    ContinuousEllipsoid,
    PolynomialFunction,
    TableFunction,
    TimeGrid,
)
from .discrete import DAEEllipsoid, DiscreteDAE
from .errors import (
    DimensionError,
    EstimationError,
    InvalidBounds,
    InvalidInput,
    ParseError,
    SchemaError,
)
from .static import KIND_APOSTERIORI, KIND_APRIORI, StaticEllipsoid, StaticModel

KINDS = ("static", "discrete_dae", "continuous_dae")
MODES = ("apriori", "aposteriori", "filter", "riccati", "tikhonov")
DISTURBANCES = ("boundary", "uniform", "zero")


# ---------------------------------------------------------------------------
# Low-level field extraction


def _require(mapping: dict, key: str, path: str):
    if not isinstance(mapping, dict):
        raise SchemaError(f"{path} must be an object")
    if key not in mapping:
        raise SchemaError(f"missing required field {path}.{key}")
    return mapping[key]


def _matrix(obj, path: str) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path} is not a numeric matrix: {exc}") from exc
    if a.ndim == 0 or a.dtype == object:
        raise SchemaError(f"{path} is not a numeric matrix")
    if a.ndim == 1:
        raise SchemaError(f"{path} must be a nested (2-D) array")
    if a.ndim != 2:
        raise SchemaError(f"{path} has {a.ndim} dimensions, expected 2")
    if not np.all(np.isfinite(a)):
        raise SchemaError(f"{path} contains non-finite entries")
    return a


def _vector(obj, path: str) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path} is not a numeric vector: {exc}") from exc
    if a.ndim != 1:
        raise SchemaError(f"{path} must be a flat array")
    if not np.all(np.isfinite(a)):
        raise SchemaError(f"{path} contains non-finite entries")
    return a


def _time_function(obj, path: str, vector: bool = False):
    """Parse a tagged time-varying coefficient; bare arrays mean constant."""
    reader = _vector if vector else _matrix
    if isinstance(obj, list):
        return ConstantFunction(reader(obj, path))
    if not isinstance(obj, dict):
        raise SchemaError(f"{path} must be an array or a tagged object")
    ftype = _require(obj, "type", path)
    try:
        if ftype == "constant":
            return ConstantFunction(reader(_require(obj, "value", path), f"{path}.value"))
        if ftype == "table":
            times = _vector(_require(obj, "times", path), f"{path}.times")
            values = _require(obj, "values", path)
            if not isinstance(values, list) or not values:
                raise SchemaError(f"{path}.values must be a non-empty list")
            parsed = [
                reader(v, f"{path}.values[{i}]") for i, v in enumerate(values)
            ]
            return TableFunction(times, parsed)
        if ftype == "polynomial":
            coeffs = _require(obj, "coefficients", path)
            if not isinstance(coeffs, list) or not coeffs:
                raise SchemaError(f"{path}.coefficients must be a non-empty list")
            parsed = [
                reader(c, f"{path}.coefficients[{i}]") for i, c in enumerate(coeffs)
            ]
            return PolynomialFunction(parsed)
    except InvalidInput as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    raise SchemaError(f"{path}.type must be constant, table, or polynomial")


def _matrix_seq(block: dict, name: str, count: int, path: str) -> List[np.ndarray]:
    """Read ``name_seq`` (exact length) or replicate a single ``name``."""
    seq_key = f"{name}_seq"
    if seq_key in block:
        raw = block[seq_key]
        if not isinstance(raw, list) or len(raw) != count:
            raise SchemaError(f"{path}.{seq_key} must be a list of {count} matrices")
        return [_matrix(m, f"{path}.{seq_key}[{i}]") for i, m in enumerate(raw)]
    if name in block:
        return [_matrix(block[name], f"{path}.{name}")] * count
    raise SchemaError(f"missing required field {path}.{name} or {path}.{seq_key}")


# ---------------------------------------------------------------------------
# Typed configuration


@dataclass(frozen=True)
class EstimationSpec:
    mode: str
    ell: Optional[np.ndarray] = None          # static / terminal functionals
    ell_seq: Optional[List[np.ndarray]] = None  # per-step discrete functionals
    ell_fn: Any = None                        # continuous integral functionals
    alphas: Optional[Sequence[float]] = None  # tikhonov schedule


@dataclass(frozen=True)
class SimulationSpec:
    disturbance: str = "boundary"


@dataclass(frozen=True)
class ProblemConfig:
    kind: str
    model: Union[StaticModel, DiscreteDAE, ContinuousDAE]
    bounds: Union[StaticEllipsoid, DAEEllipsoid, ContinuousEllipsoid]
    estimation: EstimationSpec
    grid: Optional[TimeGrid]
    seed: int
    simulation: SimulationSpec
    raw: Dict[str, Any] = field(repr=False, default_factory=dict)


def _parse_static(model_block, bounds_block, mode, path="model") -> tuple:
    F = _matrix(_require(model_block, "F", path), f"{path}.F")
    B = _matrix(_require(model_block, "B", path), f"{path}.B")
    H = _matrix(_require(model_block, "H", path), f"{path}.H")
    try:
        model = StaticModel(F=F, B=B, H=H)
    except InvalidInput as exc:
        raise DimensionError(f"model: {exc}") from exc
    kind = KIND_APRIORI if mode == "apriori" else KIND_APOSTERIORI
    Q1 = _matrix(_require(bounds_block, "Q1", "bounds"), "bounds.Q1")
    Q2 = _matrix(_require(bounds_block, "Q2", "bounds"), "bounds.Q2")
    try:
        bounds = StaticEllipsoid(Q1=Q1, Q2=Q2, kind=kind)
    except InvalidBounds as exc:
        raise SchemaError(f"bounds: {exc}") from exc
    if bounds.Q1.shape[0] != model.disturbance_dim:
        raise DimensionError(
            f"bounds.Q1 is {bounds.Q1.shape[0]}-dimensional but model.B has "
            f"{model.disturbance_dim} columns"
        )
    if bounds.Q2.shape[0] != model.observation_dim:
        raise DimensionError(
            f"bounds.Q2 is {bounds.Q2.shape[0]}-dimensional but model.H has "
            f"{model.observation_dim} rows"
        )
    return model, bounds


def _parse_discrete(model_block, bounds_block) -> tuple:
    horizon = _require(model_block, "horizon", "model")
    if not isinstance(horizon, int) or horizon < 0:
        raise SchemaError("model.horizon must be a nonnegative integer")
    F_seq = _matrix_seq(model_block, "F", horizon + 1, "model")
    C_seq = _matrix_seq(model_block, "C", horizon, "model") if horizon else []
    B_seq = _matrix_seq(model_block, "B", horizon, "model") if horizon else []
    H_seq = _matrix_seq(model_block, "H", horizon + 1, "model")
    m = F_seq[0].shape[0]
    S = (
        _matrix(model_block["S"], "model.S")
        if "S" in model_block
        else np.eye(m)
    )
    try:
        model = DiscreteDAE(
            F_seq=tuple(F_seq),
            C_seq=tuple(C_seq),
            B_seq=tuple(B_seq),
            S=S,
            H_seq=tuple(H_seq),
        )
    except InvalidInput as exc:
        raise DimensionError(f"model: {exc}") from exc
    Q0 = _matrix(_require(bounds_block, "Q0", "bounds"), "bounds.Q0")
    Q1_seq = (
        _matrix_seq(bounds_block, "Q1", horizon, "bounds") if horizon else []
    )
    Q2_seq = _matrix_seq(bounds_block, "Q2", horizon + 1, "bounds")
    try:
        bounds = DAEEllipsoid(Q0=Q0, Q1_seq=tuple(Q1_seq), Q2_seq=tuple(Q2_seq))
    except InvalidBounds as exc:
        raise SchemaError(f"bounds: {exc}") from exc
    if bounds.Q0.shape[0] != model.equation_dim:
        raise DimensionError("bounds.Q0 does not match the equation dimension")
    for i, q in enumerate(bounds.Q1_seq):
        if q.shape[0] != model.disturbance_dim:
            raise DimensionError(f"bounds.Q1_seq[{i}] does not match model.B columns")
    for i, q in enumerate(bounds.Q2_seq):
        if q.shape[0] != model.observation_dim:
            raise DimensionError(f"bounds.Q2_seq[{i}] does not match model.H rows")
    return model, bounds


def _parse_continuous(model_block, bounds_block) -> tuple:
    F = _matrix(_require(model_block, "F", "model"), "model.F")
    C = _time_function(_require(model_block, "C", "model"), "model.C")
    H = _time_function(_require(model_block, "H", "model"), "model.H")
    t_start = _require(model_block, "t_start", "model")
    t_end = _require(model_block, "t_end", "model")
    if not isinstance(t_start, (int, float)) or not isinstance(t_end, (int, float)):
        raise SchemaError("model.t_start and model.t_end must be numbers")
    try:
        model = ContinuousDAE(
            F=F, C=C, H=H, t_start=float(t_start), t_end=float(t_end)
        )
    except InvalidInput as exc:
        raise DimensionError(f"model: {exc}") from exc
    Q0 = _matrix(_require(bounds_block, "Q0", "bounds"), "bounds.Q0")
    Q1 = _time_function(_require(bounds_block, "Q1", "bounds"), "bounds.Q1")
    Q2 = _time_function(_require(bounds_block, "Q2", "bounds"), "bounds.Q2")
    try:
        bounds = ContinuousEllipsoid(Q0=Q0, Q1=Q1, Q2=Q2)
    except InvalidBounds as exc:
        raise SchemaError(f"bounds: {exc}") from exc
    if bounds.Q0.shape[0] != model.equation_dim:
        raise DimensionError("bounds.Q0 does not match the equation dimension")
    return model, bounds


def _parse_estimation(block, kind: str, model) -> EstimationSpec:
    mode = _require(block, "mode", "estimation")
    if mode not in MODES:
        raise SchemaError(f"estimation.mode must be one of {MODES}, got {mode!r}")
    if kind == "static" and mode not in ("apriori", "aposteriori"):
        raise SchemaError(f"estimation.mode {mode!r} needs a dynamic model")
    if kind == "discrete_dae" and mode in ("riccati", "tikhonov"):
        raise SchemaError(f"estimation.mode {mode!r} needs a continuous model")
    if kind == "continuous_dae" and mode == "aposteriori":
        raise SchemaError(
            "aposteriori mode is not available for continuous_dae; discretize "
            "to a discrete_dae problem instead"
        )

    ell = None
    ell_seq = None
    ell_fn = None
    alphas = None
    if kind == "continuous_dae" and mode in ("apriori", "tikhonov"):
        ell_fn = _time_function(
            _require(block, "ell", "estimation"), "estimation.ell", vector=True
        )
    elif "ell_seq" in block:
        raw = block["ell_seq"]
        if not isinstance(raw, list):
            raise SchemaError("estimation.ell_seq must be a list of vectors")
        ell_seq = [
            _vector(v, f"estimation.ell_seq[{i}]") for i, v in enumerate(raw)
        ]
    else:
        ell = _vector(_require(block, "ell", "estimation"), "estimation.ell")

    if mode == "tikhonov":
        raw = _require(block, "alphas", "estimation")
        alphas = [float(a) for a in _vector(raw, "estimation.alphas")]
        if any(a <= 0 for a in alphas):
            raise SchemaError("estimation.alphas must be positive")
        if any(b >= a for a, b in zip(alphas, alphas[1:])):
            raise SchemaError("estimation.alphas must be strictly decreasing")
    return EstimationSpec(
        mode=mode, ell=ell, ell_seq=ell_seq, ell_fn=ell_fn, alphas=alphas
    )


def parse_config(source) -> ProblemConfig:
    """Parse and validate a problem description.

    ``source`` may be a path to a JSON file or an already-loaded dict.
    """
    if isinstance(source, dict):
        raw = source
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read {source}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}"
            ) from exc
    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object")

    kind = _require(raw, "kind", "config")
    if kind not in KINDS:
        raise SchemaError(f"kind must be one of {KINDS}, got {kind!r}")
    model_block = _require(raw, "model", "config")
    bounds_block = _require(raw, "bounds", "config")
    estimation_block = _require(raw, "estimation", "config")
    mode = _require(estimation_block, "mode", "estimation")

    if kind == "static":
        model, bounds = _parse_static(model_block, bounds_block, mode)
    elif kind == "discrete_dae":
        model, bounds = _parse_discrete(model_block, bounds_block)
    else:
        model, bounds = _parse_continuous(model_block, bounds_block)

    estimation = _parse_estimation(estimation_block, kind, model)

    grid = None
    if kind == "continuous_dae":
        gb = _require(raw, "grid", "config")
        try:
            grid = TimeGrid(
                start=float(_require(gb, "start", "grid")),
                end=float(_require(gb, "end", "grid")),
                steps=int(_require(gb, "steps", "grid")),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"grid: {exc}") from exc
        except EstimationError as exc:
            raise SchemaError(f"grid: {exc}") from exc
    elif "grid" in raw and raw["grid"] is not None:
        raise SchemaError("grid is only meaningful for continuous_dae problems")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise SchemaError("seed must be an integer")

    sim_block = raw.get("simulation", {}) or {}
    disturbance = sim_block.get("disturbance", "boundary")
    if disturbance not in DISTURBANCES:
        raise SchemaError(
            f"simulation.disturbance must be one of {DISTURBANCES}, got {disturbance!r}"
        )

    # Cross-check functional dimensions against the model.
    n = model.state_dim
    if estimation.ell is not None and estimation.ell.shape[0] != n:
        raise DimensionError(
            f"estimation.ell has length {estimation.ell.shape[0]}, expected {n}"
        )
    if estimation.ell_seq is not None:
        if kind != "discrete_dae":
            raise SchemaError("estimation.ell_seq is only valid for discrete_dae")
        if len(estimation.ell_seq) != model.horizon + 1:
            raise DimensionError(
                f"estimation.ell_seq needs {model.horizon + 1} entries, got "
                f"{len(estimation.ell_seq)}"
            )
        for i, v in enumerate(estimation.ell_seq):
            if v.shape[0] != n:
                raise DimensionError(f"estimation.ell_seq[{i}] has wrong length")

    return ProblemConfig(
        kind=kind,
        model=model,
        bounds=bounds,
        estimation=estimation,
        grid=grid,
        seed=seed,
        simulation=SimulationSpec(disturbance=disturbance),
        raw=raw,
    )


# ---------------------------------------------------------------------------
# Serialization back to plain documents


def _fn_to_json(fn, path: str):
    if isinstance(fn, ConstantFunction):
        return {"type": "constant", "value": fn.value.tolist()}
    if isinstance(fn, TableFunction):
        return {
            "type": "table",
            "times": fn.times.tolist(),
            "values": [v.tolist() for v in fn.values],
        }
    if isinstance(fn, PolynomialFunction):
        return {
            "type": "polynomial",
            "coefficients": [c.tolist() for c in fn.coefficients],
        }
    raise SchemaError(f"{path}: arbitrary callables cannot be serialized")


def serialize_config(config: ProblemConfig) -> Dict[str, Any]:
    """Emit a JSON-compatible dict that parses back to an equal config."""
    out: Dict[str, Any] = {"kind": config.kind, "seed": config.seed}
    est: Dict[str, Any] = {"mode": config.estimation.mode}
    if config.kind == "static":
        model, bounds = config.model, config.bounds
        out["model"] = {
            "F": model.F.tolist(),
            "B": model.B.tolist(),
            "H": model.H.tolist(),
        }
        out["bounds"] = {"Q1": bounds.Q1.tolist(), "Q2": bounds.Q2.tolist()}
    elif config.kind == "discrete_dae":
        model, bounds = config.model, config.bounds
        out["model"] = {
            "horizon": model.horizon,
            "F_seq": [f.tolist() for f in model.F_seq],
            "C_seq": [c.tolist() for c in model.C_seq],
            "B_seq": [b.tolist() for b in model.B_seq],
            "S": model.S.tolist(),
            "H_seq": [h.tolist() for h in model.H_seq],
        }
        out["bounds"] = {
            "Q0": bounds.Q0.tolist(),
            "Q1_seq": [q.tolist() for q in bounds.Q1_seq],
            "Q2_seq": [q.tolist() for q in bounds.Q2_seq],
        }
    else:
        model, bounds = config.model, config.bounds
        out["model"] = {
            "F": model.F.tolist(),
            "C": _fn_to_json(model.C, "model.C"),
            "H": _fn_to_json(model.H, "model.H"),
            "t_start": model.t_start,
            "t_end": model.t_end,
        }
        out["bounds"] = {
            "Q0": bounds.Q0.tolist(),
            "Q1": _fn_to_json(bounds.Q1, "bounds.Q1"),
            "Q2": _fn_to_json(bounds.Q2, "bounds.Q2"),
        }
        out["grid"] = {
            "start": config.grid.start,
            "end": config.grid.end,
            "steps": config.grid.steps,
        }
    if config.estimation.ell is not None:
        est["ell"] = config.estimation.ell.tolist()
    if config.estimation.ell_seq is not None:
        est["ell_seq"] = [v.tolist() for v in config.estimation.ell_seq]
    if config.estimation.ell_fn is not None:
        est["ell"] = _fn_to_json(config.estimation.ell_fn, "estimation.ell")
    if config.estimation.alphas is not None:
        est["alphas"] = list(config.estimation.alphas)
    out["estimation"] = est
    out["simulation"] = {"disturbance": config.simulation.disturbance}
    return out


# ---------------------------------------------------------------------------
# Result reports


@dataclass
class ResultReport:
    """Everything a command run produced, in serializable form."""

    command: str
    estimate: Optional[float]
    sigma_hat: Optional[float]
    feasible: bool
    outputs: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        def convert(value):
            if isinstance(value, np.ndarray):
                return value.tolist()
            if isinstance(value, (np.floating, np.integer)):
                return value.item()
            if isinstance(value, float) and math.isinf(value):
                return "infinite"
            if isinstance(value, dict):
                return {k: convert(v) for k, v in value.items()}
            if isinstance(value, (list, tuple)):
                return [convert(v) for v in value]
            return value

        sigma: Any = self.sigma_hat
        if sigma is not None and math.isinf(sigma):
            sigma = "infinite"
        return {
            "command": self.command,
            "estimate": convert(self.estimate),
            "sigma_hat": sigma,
            "feasible": self.feasible,
            "outputs": convert(self.outputs),
            "diagnostics": convert(self.diagnostics),
            "timings": convert(self.timings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ResultReport":
        sigma = data.get("sigma_hat")
        if sigma == "infinite":
            sigma = math.inf
        return cls(
            command=data.get("command", ""),
            estimate=data.get("estimate"),
            sigma_hat=sigma,
            feasible=bool(data.get("feasible")),
            outputs=data.get("outputs", {}),
            diagnostics=data.get("diagnostics", {}),
            timings=data.get("timings", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "ResultReport":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid report JSON: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# Trajectory CSV files


def write_trajectory_csv(path, prefix: str, data) -> None:
    """Write rows of a trajectory with header ``k,<prefix>0,...``.

    Values are emitted as shortest round-trip decimal strings, so a
    read-back reproduces every double bit for bit.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidInput("trajectory data must be 1-D or 2-D")
    header = ",".join(["k"] + [f"{prefix}{j}" for j in range(arr.shape[1])])
    lines = [header]
    for k, row in enumerate(arr):
        lines.append(",".join([str(k)] + [repr(float(v)) for v in row]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory_csv(path, prefix: Optional[str] = None) -> np.ndarray:
    """Read a trajectory written by :func:`write_trajectory_csv`.

    Returns the value rows in index order; the k column must be the
    consecutive integers starting at 0.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ParseError(f"{path}: empty trajectory file")
    header = lines[0].split(",")
    if header[0] != "k" or len(header) < 2:
        raise ParseError(f"{path}: header must start with 'k' and name columns")
    if prefix is not None:
        expected = [f"{prefix}{j}" for j in range(len(header) - 1)]
        if header[1:] != expected:
            raise ParseError(
                f"{path}: expected columns {expected}, found {header[1:]}"
            )
    width = len(header) - 1
    rows = []
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != width + 1:
            raise ParseError(f"{path}: row {i} has {len(parts)} fields, expected {width + 1}")
        try:
            k = int(parts[0])
            values = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}: row {i} is not numeric: {exc}") from exc
        if k != i:
            raise ParseError(f"{path}: row {i} has index {k}, expected {i}")
        rows.append(values)
    return np.asarray(rows, dtype=float)
