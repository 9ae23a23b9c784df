"""Temperature sweeps and the structural relations of ``i_{M,T}``.

``i_{M,T}`` is estimated by the free energy of the converged SCF state, which
is an upper bound on the infimum. Scans warm-start each temperature from the
previous converged density; cold-start points are independent and may be
farmed out to worker processes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .entropy import EntropySpec, PowerLaw
from .errors import (
    ConvergenceFailure,
    EmptySpectrum,
    InsufficientSpectrum,
    MassNotAttainable,
    NoRootFound,
    NotConverged,
)
from .grid import RadialField
from .scf import (
    MixedState,
    SCFConfig,
    SolveResult,
    build_state,
    free_energy,
    scf_solve,
    zero_temperature_solve,
)
from .spectral import Spectrum, full_spectrum

log = logging.getLogger(__name__)

__all__ = [
    "ScanPoint",
    "ScanResult",
    "CriticalTemperature",
    "MaxTemperature",
    "ScalingReport",
    "SubadditivityReport",
    "temperature_scan",
    "critical_temperature_formula",
    "find_critical_temperature",
    "find_max_temperature",
    "tstar_lower_bound",
    "transform_state",
    "scaling_check",
    "subadditivity_check",
    "tail_profile",
]

_SOLVE_ERRORS = (MassNotAttainable, NotConverged, ConvergenceFailure, EmptySpectrum)


@dataclass
class ScanPoint:
    """One temperature of a scan. Failed points carry NaNs and an ``error`` string."""

    T: float
    free_energy: float
    e_kin: float
    e_pot: float
    entropy_term: float
    mu: float
    rank: int
    lambda2: float
    converged: bool
    error: str | None = None

    @classmethod
    def from_result(cls, T: float, result: SolveResult) -> "ScanPoint":
        b = result.breakdown
        lam = result.state.lambdas
        return cls(
            T,
            b.total,
            b.e_kin,
            b.e_pot,
            b.entropy_term,
            result.state.mu,
            result.rank,
            float(lam[1]) if len(lam) > 1 else 0.0,
            result.converged,
        )

    @classmethod
    def failed(cls, T: float, exc: Exception) -> "ScanPoint":
        nan = float("nan")
        return cls(T, nan, nan, nan, nan, nan, 0, nan, False, f"{type(exc).__name__}: {exc}")


@dataclass
class ScanResult:
    M: float
    entropy: str
    points: list[ScanPoint] = field(default_factory=list)
    t_c_scan: float | None = None
    t_c_formula: float | None = None
    t_star: float | None = None
    densities: list = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def temperatures(self) -> np.ndarray:
        return np.array([p.T for p in self.points])

    @property
    def free_energies(self) -> np.ndarray:
        return np.array([p.free_energy for p in self.points])

    @property
    def ranks(self) -> np.ndarray:
        return np.array([p.rank for p in self.points])

    def _good(self) -> tuple[np.ndarray, np.ndarray]:
        ok = np.array([p.converged for p in self.points], dtype=bool)
        return self.temperatures[ok], self.free_energies[ok]

    def concavity_violations(self, rtol: float = 1e-8) -> list[int]:
        """Indices (among converged points) where ``T ↦ F`` bends upward.

        Uses ``2 (L_k - F_k)`` with ``L_k`` the chord through the neighbours;
        on a uniform grid this is the second difference.
        """
        T, F = self._good()
        bad = []
        for k in range(1, len(T) - 1):
            w = (T[k] - T[k - 1]) / (T[k + 1] - T[k - 1])
            chord = (1 - w) * F[k - 1] + w * F[k + 1]
            if 2.0 * (chord - F[k]) > rtol * abs(F[k]):
                bad.append(k)
        return bad

    def monotonicity_violations(self, atol: float = 0.0) -> list[int]:
        """Indices where ``F`` decreases as ``T`` increases."""
        _, F = self._good()
        return [k for k in range(1, len(F)) if F[k] < F[k - 1] - atol]


def _solve(M: float, T: float, spec: EntropySpec, config: SCFConfig, initial=None, raise_on_failure=True):
    if T == 0:
        return zero_temperature_solve(M, config, initial, raise_on_failure)
    return scf_solve(M, T, spec, config, initial, raise_on_failure)


def _scan_point(args) -> tuple[ScanPoint, RadialField | None]:
    M, T, spec, config, initial = args
    try:
        result = _solve(M, T, spec, config, initial, raise_on_failure=False)
    except _SOLVE_ERRORS as exc:
        log.info("scan point T=%g failed: %s", T, exc)
        return ScanPoint.failed(T, exc), None
    point = ScanPoint.from_result(T, result)
    return point, result.state.density if result.converged else None


def temperature_scan(
    M: float,
    spec: EntropySpec,
    T_list,
    config: SCFConfig | None = None,
    warm_start: bool = True,
    parallel: int = 1,
) -> ScanResult:
    """Solve at each temperature of ``T_list`` (strictly increasing, positive).

    With ``warm_start`` every solve starts from the last converged density and
    the points run in order. Cold-start points are independent and run on
    ``parallel`` worker processes. Failures are recorded, not raised.
    """
    config = SCFConfig() if config is None else config
    T_list = [float(T) for T in T_list]
    if any(T <= 0 for T in T_list):
        raise ValueError("scan temperatures must be positive")
    if any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("scan temperatures must be strictly increasing")
    scan = ScanResult(M, spec.label())
    if not T_list:
        return scan

    if warm_start:
        if parallel > 1:
            log.info("warm-started scans run sequentially; ignoring parallel=%d", parallel)
        density = None
        for T in T_list:
            point, converged_density = _scan_point((M, T, spec, config, density))
            scan.points.append(point)
            scan.densities.append(converged_density)
            if converged_density is not None:
                density = converged_density
        return scan

    jobs = [(M, T, spec, config, None) for T in T_list]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_scan_point, jobs))
    else:
        outcomes = [_scan_point(job) for job in jobs]
    scan.points = [point for point, _ in outcomes]
    scan.densities = [density for _, density in outcomes]
    return scan


def critical_temperature_formula(M: float, spec: EntropySpec, zeroT: SolveResult) -> float:
    """``(μ⁰₁ - μ⁰₀)/β'(M)`` from the two lowest levels of the zero-temperature Hamiltonian."""
    levels = zeroT.diagnostics.get("levels")
    if levels is None:
        levels = full_spectrum(zeroT.state.potential).distinct_levels()
    if len(levels) < 2:
        raise InsufficientSpectrum("need two bound levels of the zero-temperature Hamiltonian")
    return float((levels[1] - levels[0]) / spec.beta_prime(M))


@dataclass
class CriticalTemperature:
    t_c_scan: float
    t_c_formula: float
    bracket: tuple[float, float]
    scan: ScanResult
    zero_state: SolveResult = field(repr=False)

    @property
    def relative_difference(self) -> float:
        return abs(self.t_c_scan - self.t_c_formula) / self.t_c_formula


def find_critical_temperature(
    M: float,
    spec: EntropySpec,
    config: SCFConfig | None = None,
    window=(0.5, 1.5),
    n_scan: int = 9,
    halvings: int = 12,
) -> CriticalTemperature:
    """Locate the first temperature at which the minimiser stops being pure.

    A warm-started scan over ``window`` (in units of the formula value) finds
    the first interval where the rank exceeds one; the interval is then
    bisected ``halvings`` times, each probe warm-started from the pure side.
    Convergence slows down sharply at the transition, so a probe that runs out
    of iterations is classified by the rank of its last iterate.

    Raises
    ------
    NoRootFound
        If the rank does not change inside the window.
    """
    config = SCFConfig() if config is None else config
    zero = zero_temperature_solve(M, config)
    t_formula = critical_temperature_formula(M, spec, zero)
    temps = t_formula * np.linspace(window[0], window[1], n_scan)
    scan = temperature_scan(M, spec, temps, config)
    scan.t_c_formula = t_formula

    ranks = scan.ranks
    mixed = [k for k, p in enumerate(scan.points) if p.converged and p.rank > 1]
    if not mixed or mixed[0] == 0 or ranks[mixed[0] - 1] != 1 or scan.densities[mixed[0] - 1] is None:
        raise NoRootFound("no pure-to-mixed transition inside the scan window")
    k = mixed[0]
    lo, hi = float(temps[k - 1]), float(temps[k])
    density = scan.densities[k - 1]
    for _ in range(halvings):
        mid = 0.5 * (lo + hi)
        result = _solve(M, mid, spec, config, density, raise_on_failure=False)
        if not result.converged:
            log.warning("bisection probe at T=%g did not converge; using its last iterate", mid)
        if result.rank > 1:
            hi = mid
        else:
            lo = mid
            density = result.state.density
    scan.t_c_scan = 0.5 * (lo + hi)
    return CriticalTemperature(scan.t_c_scan, t_formula, (lo, hi), scan, zero)


@dataclass
class MaxTemperature:
    """``t_star`` is the secant root through the two hottest negative evaluations.

    By concavity of ``T ↦ i`` that root never overshoots the true crossing.
    ``evaluations`` lists ``(T, F or nan, status)`` in the order computed.
    """

    t_star: float
    bracket: tuple[float, float]
    evaluations: list = field(default_factory=list)
    t_c_formula: float | None = None
    i_0: float | None = None


def _classify(M, T, spec, config, density):
    try:
        result = _solve(M, T, spec, config, density, raise_on_failure=False)
    except _SOLVE_ERRORS as exc:
        return float("nan"), type(exc).__name__, None
    F = result.free_energy
    if not result.converged:
        return F, "not-converged", None
    return F, ("negative" if F < 0 else "nonnegative"), result.state.density


def _secant_root(pts) -> float:
    (T1, F1), (T2, F2) = pts[-2], pts[-1]
    return T2 - F2 * (T2 - T1) / (F2 - F1)


def find_max_temperature(
    M: float,
    spec: EntropySpec,
    config: SCFConfig | None = None,
    ceiling: float = 1e3,
    start: float = 0.25,
    growth: float = 2.0,
    rtol: float = 1e-6,
    max_refine: int = 40,
) -> MaxTemperature:
    """Root of ``T ↦ i_{M,T}`` (the maximal temperature ``T*``).

    Temperatures ``start·T_c, growth·start·T_c, …`` are probed until the solve
    fails or returns ``F ≥ 0``; the crossing is then refined by secant steps on
    the two hottest negative values, falling back to bisection whenever the
    secant leaves the bracket. ``T_c`` is the formula value.

    Raises
    ------
    NoRootFound
        If ``F`` stays negative up to ``ceiling·T_c``.
    """
    config = SCFConfig() if config is None else config
    zero = zero_temperature_solve(M, config)
    try:
        t_ref = critical_temperature_formula(M, spec, zero)
    except InsufficientSpectrum:
        t_ref = abs(zero.free_energy) / float(spec.beta(M))
    evaluations = []
    negatives: list[tuple[float, float]] = []
    density = zero.state.density

    T = start * t_ref
    hi = None
    while T <= ceiling * t_ref * (1 + 1e-12):
        F, status, dens = _classify(M, T, spec, config, density)
        evaluations.append((T, F, status))
        if status == "negative":
            negatives.append((T, F))
            density = dens
        else:
            hi = T
            break
        T *= growth
    if hi is None:
        raise NoRootFound(f"free energy still negative at T = {ceiling:g} T_c")
    if not negatives:
        raise NoRootFound(f"free energy already nonnegative at T = {start:g} T_c; lower the start")

    if len(negatives) == 1:
        # a second point on the left is needed for a secant
        T = 0.5 * negatives[0][0]
        F, status, _ = _classify(M, T, spec, config, zero.state.density)
        evaluations.append((T, F, status))
        if status != "negative":
            raise NoRootFound("could not bracket the zero crossing from below")
        negatives.insert(0, (T, F))

    estimate = _secant_root(negatives)
    for _ in range(max_refine):
        lo = negatives[-1][0]
        guess = _secant_root(negatives)
        if not lo < guess < hi:
            guess = 0.5 * (lo + hi)
        F, status, dens = _classify(M, guess, spec, config, density)
        evaluations.append((guess, F, status))
        if status == "negative":
            negatives.append((guess, F))
            density = dens
        else:
            hi = guess
        new_estimate = _secant_root(negatives)
        done = abs(new_estimate - estimate) <= rtol * new_estimate or hi - negatives[-1][0] <= rtol * hi
        estimate = new_estimate
        if done:
            break
    estimate = min(estimate, hi)
    return MaxTemperature(estimate, (negatives[-1][0], hi), evaluations, t_ref, zero.free_energy)


def tstar_lower_bound(M: float, spec: EntropySpec, i_10: float, n_samples: int = 2001) -> float:
    """``max_{0<m≤M} m³/β(m) · |i_{1,0}|`` over a logarithmic grid that includes ``m = M``."""
    if not i_10 < 0:
        raise ValueError("i_10 must be negative")
    m = M * np.logspace(-6.0, 0.0, n_samples)
    with np.errstate(divide="ignore"):
        ratio = m**3 / np.asarray(spec.beta(m), dtype=float)
    return float(np.max(ratio[np.isfinite(ratio)]) * abs(i_10))


def transform_state(state: MixedState, lam: float, T_new: float) -> MixedState:
    """Mass-``λM`` state ``λ⁴ Σ λ_j |ψ_j(λ·)⟩⟨ψ_j(λ·)|`` on the grid shrunk by ``λ``.

    Nodes map to nodes (``r ↦ r/λ``), so no interpolation is involved. The
    orbitals are the eigenfunctions of the dilated Hamiltonian, whose levels
    are ``λ² μ_j``.
    """
    if not lam > 0:
        raise ValueError("scale must be positive")
    spec = state.spectrum
    grid = state.grid.scaled(1.0 / lam)
    spectrum = Spectrum(grid, spec.l, spec.n, lam**2 * spec.energies, np.sqrt(lam) * spec.u)
    return build_state(spectrum, lam * state.lambdas, lam**2 * state.mu, T_new, state.entropy, lam * state.M)


@dataclass
class ScalingReport:
    i_base: float
    i_scaled: float
    bound: float
    holds: bool
    transformed_free_energy: float
    transform_relative_error: float

    @property
    def slack(self) -> float:
        return self.bound - self.i_scaled


def scaling_check(
    M: float,
    T: float,
    lam: float,
    p: float,
    config: SCFConfig | None = None,
    atol: float = 1e-8,
) -> ScalingReport:
    """Test ``i(λM, λ^{3-p} T) ≤ λ³ i(M, T)`` and the exact transform identity.

    The solve at ``λM`` uses the grid shrunk by ``λ`` (same node count), which
    is where the transform sends the grid of the base solve.
    """
    config = SCFConfig() if config is None else config
    spec = PowerLaw(p)
    T_new = lam ** (3.0 - p) * T
    base = _solve(M, T, spec, config)
    scaled_config = replace(config, r_max=config.r_max / lam)
    scaled = _solve(lam * M, T_new, spec, scaled_config, initial=None)
    bound = lam**3 * base.free_energy
    moved = transform_state(base.state, lam, T_new)
    F_moved = free_energy(moved).total
    rel = abs(F_moved - bound) / abs(bound)
    return ScalingReport(base.free_energy, scaled.free_energy, bound, scaled.free_energy <= bound + atol, F_moved, rel)


@dataclass
class SubadditivityReport:
    i_M: float
    i_rest: float
    i_m: float
    notes: list[str] = field(default_factory=list)
    atol: float = 1e-8

    @property
    def gap(self) -> float:
        """``i(M-m) + i(m) - i(M)``; positive means strict binding."""
        return self.i_rest + self.i_m - self.i_M

    @property
    def holds(self) -> bool:
        return self.gap >= -self.atol


def _mass_config(config: SCFConfig, reference: float, mass: float) -> SCFConfig:
    # lighter states are wider by a factor reference/mass
    if mass >= reference:
        return config
    return replace(config, r_max=config.r_max * reference / mass)


def _infimum_estimate(M, T, spec, config, notes) -> float:
    try:
        result = _solve(M, T, spec, config, raise_on_failure=False)
    except MassNotAttainable as exc:
        notes.append(f"M={M:g}: {exc}; using i = 0")
        return 0.0
    F = result.free_energy
    if not result.converged:
        # near a mass's own T_c the iteration crawls; every trial state still bounds i from above
        pure = zero_temperature_solve(M, config).free_energy + T * float(spec.beta(M)) if T > 0 else F
        notes.append(
            f"M={M:g}: SCF stalled (residual {result.history[-1][1]:.2g}); "
            f"using min(last iterate {F:.10g}, pure branch {pure:.10g})"
        )
        F = min(F, pure)
    if F >= 0:
        notes.append(f"M={M:g}: F = {F:.6g} >= 0; using i = 0")
        return 0.0
    return F


def subadditivity_check(
    M: float,
    m: float,
    T: float,
    spec: EntropySpec,
    config: SCFConfig | None = None,
    atol: float = 1e-8,
) -> SubadditivityReport:
    """Compare ``i(M)`` with ``i(M-m) + i(m)`` at one temperature.

    Each mass is solved on a grid widened in proportion to ``M/mass``.
    Because ``i ≤ 0`` always (mass can spread out), a solve that fails or
    ends at ``F ≥ 0`` contributes ``0``.
    """
    if not 0 < m < M:
        raise ValueError("need 0 < m < M")
    config = SCFConfig() if config is None else config
    notes: list[str] = []
    values = [_infimum_estimate(x, T, spec, _mass_config(config, M, x), notes) for x in (M, M - m, m)]
    return SubadditivityReport(*values, notes=notes, atol=atol)


def tail_profile(state: MixedState, radii) -> np.ndarray:
    """``R² ∫_{|x|>R} n dx`` at each radius."""
    grid = state.grid
    w = grid.shell_weights * state.density.values
    # tail[i] = mass at nodes beyond r_i
    tail = np.concatenate((np.cumsum(w[::-1])[::-1][1:], [0.0]))
    radii = np.asarray(radii, dtype=float)
    idx = np.clip(np.searchsorted(grid.r, radii, side="right") - 1, 0, grid.n_points - 1)
    below = radii < grid.r[0]
    values = np.where(below, float(np.sum(w)), tail[idx])
    return radii**2 * values
