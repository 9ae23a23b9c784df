"""Run configuration files and result serialisation (JSON for solves, CSV for scans).

Config files are line oriented: ``key = value``, ``#`` starts a comment.
Floats are written with 17 significant digits so every double round-trips.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .entropy import parse_entropy
from .errors import ThermalHartreeError
from .scf import SolveResult

__all__ = [
    "COMMANDS",
    "ParseError",
    "ValidationError",
    "RunConfig",
    "parse_config",
    "serialize_config",
    "solve_payload",
    "dumps",
    "write_solve_json",
    "scan_csv_text",
    "write_scan_csv",
    "read_scan_csv",
    "SCAN_HEADER",
]

COMMANDS = ("solve", "solve-zero", "scan", "find-tc", "find-tstar", "verify", "oracle")
SCAN_HEADER = ["T", "free_energy", "e_kin", "e_pot", "entropy_term", "mu", "rank", "lambda2", "converged"]


class ParseError(ThermalHartreeError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ThermalHartreeError, ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs; ``None`` means "not given"."""

    command: str = "solve"
    mass: float = 1.0
    temperature: float | None = None
    t_min: float | None = None
    t_max: float | None = None
    points: int = 20
    entropy: str = "power:2"
    r_max: float = 80.0
    n_points: int = 4000
    mixing: float = 0.5
    max_iterations: int = 500
    tol_density: float = 1e-8
    tol_energy: float = 1e-10
    l_max: int = 8
    k_per_channel: int = 12
    seed: str = "gaussian"
    warm_start: bool = True
    parallel: int = 1
    out: str | None = None
    reference: str | None = None

    def __post_init__(self):
        validate(self)

    def scf_config(self):
        from .scf import SCFConfig

        return SCFConfig(
            mixing=self.mixing,
            min_mixing=min(0.05, self.mixing),
            max_iterations=self.max_iterations,
            tol_density=self.tol_density,
            tol_energy_rel=self.tol_energy,
            l_max=self.l_max,
            k_per_channel=self.k_per_channel,
            r_max=self.r_max,
            n_points=self.n_points,
            seed=self.seed,
        )

    def temperatures(self) -> np.ndarray:
        if self.t_min is None or self.t_max is None:
            raise ValidationError("t_min", "scan needs t_min and t_max")
        return np.linspace(self.t_min, self.t_max, self.points)


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_POSITIVE = ("mass", "r_max", "tol_density", "tol_energy")
_POSITIVE_INT = ("points", "n_points", "max_iterations", "k_per_channel", "parallel")


def validate(cfg: RunConfig) -> None:
    if cfg.command not in COMMANDS:
        raise ValidationError("command", f"unknown command {cfg.command!r}")
    for name in _POSITIVE:
        value = getattr(cfg, name)
        if not (math.isfinite(value) and value > 0):
            raise ValidationError(name, f"must be positive, got {value!r}")
    for name in _POSITIVE_INT:
        if getattr(cfg, name) < 1:
            raise ValidationError(name, "must be at least 1")
    if cfg.n_points < 16:
        raise ValidationError("n_points", "must be at least 16")
    if cfg.l_max < 0:
        raise ValidationError("l_max", "must be nonnegative")
    if not 0 < cfg.mixing <= 1:
        raise ValidationError("mixing", "must lie in (0, 1]")
    for name in ("temperature", "t_min", "t_max"):
        value = getattr(cfg, name)
        if value is not None and not (math.isfinite(value) and value >= 0):
            raise ValidationError(name, f"must be nonnegative, got {value!r}")
    if cfg.t_min is not None and cfg.t_max is not None:
        if cfg.t_min <= 0:
            raise ValidationError("t_min", "scan temperatures must be positive")
        if cfg.t_max < cfg.t_min or (cfg.points > 1 and cfg.t_max == cfg.t_min):
            raise ValidationError("t_max", "must exceed t_min")
    if cfg.seed != "gaussian":
        raise ValidationError("seed", f"unknown seed density kind {cfg.seed!r}")
    try:
        spec = parse_entropy(cfg.entropy)
    except (ValueError, OSError) as exc:
        raise ValidationError("entropy", str(exc)) from exc
    del spec


def _convert(name: str, text: str):
    kind = _TYPES[name]
    if text.lower() in ("none", "") and "None" in kind:
        return None
    if kind.startswith("bool"):
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse a ``key = value`` document; non-``None`` ``overrides`` win over the file.

    Raises
    ------
    ParseError
        Malformed line, unknown key or repeated key (with the line number).
    ValidationError
        A value out of range (naming the field).
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in _TYPES:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {exc}", lineno) from exc
    for key, value in (overrides or {}).items():
        if key not in _TYPES:
            raise ValidationError(key, "unknown option")
        if value is not None:
            values[key] = value
    return RunConfig(**values)


def _format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in asdict(cfg).items())


def _encode(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{_encode(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with floats at 17 significant digits and non-finite values as ``null``."""
    return _encode(obj)


def solve_payload(result: SolveResult, entropy: str) -> dict:
    state, b = result.state, result.breakdown
    spec = state.spectrum
    occupations = [
        {
            "l": int(spec.l[i]),
            "n": int(spec.n[i]),
            "eigenvalue": float(spec.energies[i]),
            "lambda": float(state.lambdas[i]),
            "degeneracy": int(spec.degeneracy[i]),
        }
        for i in range(len(spec))
        if state.lambdas[i] > 0
    ]
    diagnostics = {}
    for key, value in result.diagnostics.items():
        if isinstance(value, (int, float, np.floating, np.integer)):
            diagnostics[key] = value
        elif isinstance(value, np.ndarray):
            diagnostics[key] = value.tolist()
    return {
        "mass": state.M,
        "temperature": state.T,
        "entropy": entropy,
        "free_energy": b.total,
        "e_kin": b.e_kin,
        "e_pot": b.e_pot,
        "entropy_term": b.entropy_term,
        "mu": state.mu,
        "virial_ratio": b.virial_ratio,
        "multiplier_residual": b.multiplier_residual,
        "rank": result.rank,
        "converged": result.converged,
        "iterations": result.iterations,
        "grid": {"r_max": state.grid.r_max, "n_points": state.grid.n_points},
        "occupations": occupations,
        "diagnostics": diagnostics,
    }


def write_solve_json(result: SolveResult, path, entropy: str) -> None:
    Path(path).write_text(dumps(solve_payload(result, entropy)) + "\n")


def _csv_float(x: float) -> str:
    return format(float(x), ".17g") if math.isfinite(x) else "nan"


def scan_csv_text(scan) -> str:
    """Header, one row per point, then ``# t_c_scan=``, ``# t_c_formula=``, ``# t_star=`` lines."""
    if len(scan) == 0:
        raise ValueError("refusing to write an empty scan")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_HEADER)
    for p in scan.points:
        writer.writerow(
            [
                _csv_float(p.T),
                _csv_float(p.free_energy),
                _csv_float(p.e_kin),
                _csv_float(p.e_pot),
                _csv_float(p.entropy_term),
                _csv_float(p.mu),
                p.rank,
                _csv_float(p.lambda2),
                "true" if p.converged else "false",
            ]
        )
    for key in ("t_c_scan", "t_c_formula", "t_star"):
        value = getattr(scan, key)
        buf.write(f"# {key}={'' if value is None else _csv_float(value)}\n")
    return buf.getvalue()


def write_scan_csv(scan, path) -> None:
    Path(path).write_text(scan_csv_text(scan))


def read_scan_csv(path) -> tuple[list[dict], dict]:
    """Rows as dicts of strings and the trailer as ``{key: float | None}``."""
    rows, summary = [], {}
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    for ln in lines:
        if ln.startswith("# "):
            key, _, value = ln[2:].partition("=")
            summary[key] = float(value) if value else None
    rows = list(csv.DictReader(body))
    return rows, summary
