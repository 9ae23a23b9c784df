"""Entropy generating functions ``β`` with their first derivative and its inverse.

The entropy of a state with occupations ``λ_j`` is ``-Σ β(λ_j)``. The solvers
only need ``β``, ``β'`` and ``(β')⁻¹``; they never differentiate numerically.
"""

from __future__ import annotations

import importlib.util
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import NegativeArgument, UndefinedAtZero

__all__ = [
    "EntropySpec",
    "PowerLaw",
    "Custom",
    "ValidationReport",
    "beta",
    "beta_prime",
    "beta_prime_inverse",
    "p_sup",
    "validate_assumptions",
    "parse_entropy",
]

# Largest admissible growth exponent sup m β'(m)/β(m).
GROWTH_LIMIT = 3.0


class EntropySpec:
    """Interface shared by :class:`PowerLaw` and :class:`Custom`."""

    def beta(self, s):
        raise NotImplementedError

    def beta_prime(self, s):
        raise NotImplementedError

    def beta_prime_inverse(self, y):
        raise NotImplementedError

    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(EntropySpec):
    """``β(s) = s**p`` with ``p > 1`` (polytropic entropy)."""

    p: float

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p <= 1.0:
            raise ValueError(f"power-law exponent must exceed 1, got {self.p!r}")
        if self.p > GROWTH_LIMIT:
            warnings.warn(
                f"power-law exponent {self.p} > 3: the chemical potential is not "
                "guaranteed to be negative; mass-constrained solves may fail",
                stacklevel=3,
            )

    def beta(self, s):
        return np.power(_nonnegative(s), self.p)

    def beta_prime(self, s):
        return self.p * np.power(_nonnegative(s), self.p - 1.0)

    def beta_prime_inverse(self, y):
        y = np.asarray(y, dtype=float)
        out = np.power(np.maximum(y, 0.0) / self.p, 1.0 / (self.p - 1.0))
        return out if out.ndim else float(out)

    def label(self) -> str:
        return f"power:{self.p:g}"


@dataclass(frozen=True)
class Custom(EntropySpec):
    """User supplied ``β``, ``β'`` and ``(β')⁻¹`` (all vectorised over numpy arrays).

    ``inverse`` only has to be correct for positive arguments; nonpositive
    arguments are mapped to 0 here.
    """

    func: Callable = field(compare=False)
    derivative: Callable = field(compare=False)
    inverse: Callable = field(compare=False)
    name: str = "custom"

    def beta(self, s):
        return _as_output(self.func(_nonnegative(s)))

    def beta_prime(self, s):
        return _as_output(self.derivative(_nonnegative(s)))

    def beta_prime_inverse(self, y):
        y = np.asarray(y, dtype=float)
        pos = y > 0
        out = np.zeros_like(y)
        if np.any(pos):
            out[pos] = np.maximum(np.asarray(self.inverse(y[pos]), dtype=float), 0.0)
        return out if out.ndim else float(out)

    def label(self) -> str:
        return f"custom:{self.name}"


def _nonnegative(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise NegativeArgument("entropy function evaluated at a negative occupation")
    return s


def _as_output(v):
    v = np.asarray(v, dtype=float)
    return v if v.ndim else float(v)


def beta(spec: EntropySpec, s):
    return spec.beta(s)


def beta_prime(spec: EntropySpec, s):
    return spec.beta_prime(s)


def beta_prime_inverse(spec: EntropySpec, y):
    """``(β')⁻¹(y)₊``: zero for ``y <= 0``, increasing for ``y > 0``."""
    return spec.beta_prime_inverse(y)


def _log_samples(upper: float, n: int = 4001, decades: float = 10.0) -> np.ndarray:
    return upper * np.logspace(-decades, 0.0, n)


def p_sup(spec: EntropySpec, M: float) -> float:
    """``sup_{m∈(0,M]} m β'(m)/β(m)``; exact for power laws, sampled otherwise."""
    if M <= 0:
        raise ValueError("mass must be positive")
    if isinstance(spec, PowerLaw):
        return float(spec.p)
    m = _log_samples(M)
    b = np.asarray(spec.beta(m), dtype=float)
    if np.any(b == 0.0):
        raise UndefinedAtZero("β vanishes at a positive argument; growth ratio undefined")
    return float(np.max(m * np.asarray(spec.beta_prime(m), dtype=float) / b))


@dataclass
class ValidationReport:
    """Outcome of the structural checks; ``failures`` names what went wrong."""

    strictly_convex_c1: bool
    nonnegative_vanishing: bool
    bounded_growth: bool
    growth: float
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.strictly_convex_c1 and self.nonnegative_vanishing and self.bounded_growth


def validate_assumptions(
    spec: EntropySpec, s_max: float, tol: float = 1e-9, n_samples: int = 2001
) -> ValidationReport:
    """Check convexity, ``β ≥ 0`` on ``[0, 1]``, ``β(0) = β'(0) = 0`` and growth ``≤ 3``.

    Convexity is probed by second differences on ``[0, s_max]`` (tolerance
    ``tol``, absolute); growth by :func:`p_sup` over ``(0, s_max]``.
    """
    if s_max <= 0:
        raise ValueError("s_max must be positive")
    failures = []
    s = np.linspace(0.0, s_max, n_samples)
    with np.errstate(all="ignore"):
        b = np.asarray(spec.beta(s), dtype=float)
        db = np.asarray(spec.beta_prime(s), dtype=float)

    second = b[2:] - 2.0 * b[1:-1] + b[:-2]
    convex = bool(np.all(np.isfinite(b)) and np.all(second >= -tol) and np.any(second > tol * 1e-3))
    increasing_slope = bool(np.all(np.isfinite(db[1:])) and np.all(np.diff(db[1:]) > -tol))
    convex_c1 = convex and increasing_slope
    if not convex_c1:
        failures.append("beta is not strictly convex / C1 on [0, s_max]")

    unit = np.linspace(0.0, 1.0, 1001)
    with np.errstate(all="ignore"):
        b_unit = np.asarray(spec.beta(unit), dtype=float)
        b0 = float(np.asarray(spec.beta(0.0)))
        db0 = float(np.asarray(spec.beta_prime(0.0)))
    vanishing = bool(np.all(b_unit >= -tol) and abs(b0) <= tol and np.isfinite(db0) and abs(db0) <= tol)
    if not vanishing:
        failures.append("beta must be nonnegative on [0,1] with beta(0) = beta'(0) = 0")

    try:
        with np.errstate(all="ignore"):
            growth = p_sup(spec, s_max)
        bounded = bool(np.isfinite(growth) and growth <= GROWTH_LIMIT + 1e-9 and vanishing)
    except UndefinedAtZero:
        growth, bounded = float("nan"), False
    if not bounded:
        failures.append(f"growth sup m*beta'(m)/beta(m) = {growth:g} exceeds 3 or is undefined")

    return ValidationReport(convex_c1, vanishing, bounded, growth, failures)


def _load_custom(path: str | Path) -> Custom:
    path = Path(path)
    modspec = importlib.util.spec_from_file_location(f"_entropy_{path.stem}", path)
    if modspec is None or modspec.loader is None:
        raise ValueError(f"cannot load entropy module {path}")
    module = importlib.util.module_from_spec(modspec)
    modspec.loader.exec_module(module)
    try:
        return Custom(module.beta, module.beta_prime, module.beta_prime_inverse, name=str(path))
    except AttributeError as exc:
        raise ValueError(
            f"{path} must define beta, beta_prime and beta_prime_inverse"
        ) from exc


def parse_entropy(text: str) -> EntropySpec:
    """Parse ``power:<p>`` or ``custom:<path to python file>``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "power":
        try:
            p = float(arg)
        except ValueError as exc:
            raise ValueError(f"bad power-law exponent in {text!r}") from exc
        return PowerLaw(p)
    if kind == "custom":
        return _load_custom(arg.strip())
    raise ValueError(f"unknown entropy kind {kind!r}; expected power:<p> or custom:<path>")
