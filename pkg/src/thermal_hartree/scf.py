"""Self-consistent minimisation of the free energy at fixed mass and temperature.

One sweep maps a density to its potential, diagonalises ``H = -Δ - V``,
occupies the bound states with the chemical potential that fixes the mass,
and rebuilds the density. Densities are mixed linearly between sweeps.

Every iterate is an admissible state (orthonormal orbitals, nonnegative
occupations, exact mass), so each reported free energy is an upper bound on
the infimum over states. Only radially symmetric states with uniformly filled
``l``-shells are explored.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .entropy import EntropySpec
from .errors import InvalidTemperature, NotConverged
from .grid import RadialField, RadialGrid, make_grid
from .occupations import RANK_THRESHOLD, solve_chemical_potential
from .poisson import Potential, potential_energy, potential_from_density
from .spectral import Spectrum, channel_eigensolve, full_spectrum

log = logging.getLogger(__name__)

__all__ = [
    "SCFConfig",
    "MixedState",
    "FreeEnergyBreakdown",
    "SolveResult",
    "seed_density",
    "density_from_state",
    "build_state",
    "free_energy",
    "scf_step",
    "scf_solve",
    "zero_temperature_solve",
    "tail_mass",
    "dilation_gain",
    "energy_floor",
    "local_minimality_probe",
]


@dataclass(frozen=True)
class SCFConfig:
    """Iteration controls and discretisation.

    ``tol_density`` is relative to the mass; the energy tolerance is
    ``tol_energy_rel * |F| + tol_energy_abs``.
    """

    mixing: float = 0.5
    min_mixing: float = 0.05
    max_iterations: int = 500
    tol_density: float = 1e-8
    tol_energy_rel: float = 1e-10
    tol_energy_abs: float = 1e-12
    l_max: int = 8
    k_per_channel: int = 12
    r_max: float = 80.0
    n_points: int = 4000
    seed: str = "gaussian"

    def __post_init__(self):
        if not 0 < self.mixing <= 1:
            raise ValueError(f"mixing must lie in (0, 1], got {self.mixing}")
        if not 0 < self.min_mixing <= self.mixing:
            raise ValueError("min_mixing must lie in (0, mixing]")
        if self.tol_density <= 0 or self.tol_energy_rel < 0 or self.tol_energy_abs <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.seed not in ("gaussian",):
            raise ValueError(f"unknown seed density kind {self.seed!r}")

    @property
    def grid(self) -> RadialGrid:
        return make_grid(self.r_max, self.n_points)

    def energy_tolerance(self, F: float) -> float:
        return self.tol_energy_rel * abs(F) + self.tol_energy_abs


@dataclass(frozen=True, eq=False)
class MixedState:
    """Radial density operator ``ρ = Σ λ_j |ψ_j⟩⟨ψ_j|`` with shell-uniform occupations.

    ``lambdas[i]`` is the occupation of each of the ``2l+1`` substates of
    ``spectrum`` entry ``i``; ``spectrum.energies`` are the eigenvalues of the
    Hamiltonian the orbitals came from. ``density`` and ``potential`` are
    computed from the orbitals, so the state is self-contained.
    """

    spectrum: Spectrum
    lambdas: np.ndarray
    density: RadialField
    potential: Potential
    mu: float
    T: float
    entropy: EntropySpec | None
    M: float

    @property
    def grid(self) -> RadialGrid:
        return self.density.grid

    @property
    def weights(self) -> np.ndarray:
        """Occupation times degeneracy, i.e. the mass carried by each entry."""
        return self.spectrum.degeneracy * self.lambdas

    def rank(self, threshold: float | None = None) -> int:
        thr = RANK_THRESHOLD * self.M if threshold is None else threshold
        return int(np.sum(self.spectrum.degeneracy[self.lambdas > thr]))


@dataclass(frozen=True)
class FreeEnergyBreakdown:
    """Energy bookkeeping of one state.

    ``entropy_term`` is ``tr β(ρ) = Σ (2l+1) β(λ)`` (minus the entropy), so
    ``total = e_kin - e_pot + T * entropy_term``. ``virial_ratio`` is
    ``tr(Vρ)/tr(-Δρ) = 2 e_pot / e_kin``. ``multiplier_residual`` is
    ``|μM - Σ (2l+1) λ (⟨H⟩_j + T β'(λ))|`` with ``⟨H⟩_j`` evaluated in the
    state's own potential.
    """

    e_kin: float
    e_pot: float
    entropy_term: float
    total: float
    virial_ratio: float
    multiplier_residual: float
    temperature: float


@dataclass
class SolveResult:
    state: MixedState
    breakdown: FreeEnergyBreakdown
    iterations: int
    converged: bool
    rank: int
    diagnostics: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)

    @property
    def free_energy(self) -> float:
        return self.breakdown.total


def seed_density(grid: RadialGrid, M: float, width: float | None = None) -> RadialField:
    """Isotropic Gaussian of mass ``M``; default width ``r_max/10``."""
    width = grid.r_max / 10.0 if width is None else width
    values = np.exp(-((grid.r / width) ** 2))
    return _renormalize(RadialField(grid, values), M)


def _discrete_mass(n: RadialField) -> float:
    return float(np.sum(n.grid.shell_weights * n.values))


def _renormalize(n: RadialField, M: float) -> RadialField:
    # discrete shell sum, the same quadrature that makes Σ(2l+1)λ exact
    return RadialField(n.grid, n.values * (M / _discrete_mass(n)))


def density_from_state(spectrum: Spectrum, lambdas) -> RadialField:
    """``n(r) = Σ (2l+1) λ u(r)² / (4π r²)``."""
    grid = spectrum.grid
    lambdas = np.asarray(lambdas, dtype=float)
    if len(spectrum) == 0:
        return RadialField.zeros(grid)
    weights = spectrum.degeneracy * lambdas
    occupied = weights > 0
    u2 = np.einsum("i,ij->j", weights[occupied], spectrum.u[occupied] ** 2)
    return RadialField(grid, u2 / (4.0 * np.pi * grid.r**2))


def build_state(
    spectrum: Spectrum,
    lambdas,
    mu: float,
    T: float,
    entropy: EntropySpec | None,
    M: float,
) -> MixedState:
    n = density_from_state(spectrum, lambdas)
    return MixedState(spectrum, np.asarray(lambdas, dtype=float), n, potential_from_density(n), float(mu), float(T), entropy, float(M))


def _entropy_sums(state: MixedState) -> tuple[float, float]:
    """``Σ (2l+1) β(λ)`` and ``Σ (2l+1) λ β'(λ)``."""
    if state.entropy is None or state.T == 0:
        return 0.0, 0.0
    deg = state.spectrum.degeneracy
    lam = state.lambdas
    b = np.asarray(state.entropy.beta(lam), dtype=float)
    db = np.asarray(state.entropy.beta_prime(lam), dtype=float)
    return float(np.sum(deg * b)), float(np.sum(deg * lam * db))


def free_energy(state: MixedState) -> FreeEnergyBreakdown:
    spec = state.spectrum
    weights = state.weights
    h = state.grid.h
    kinetic = spec.kinetic
    e_kin = float(np.sum(weights * kinetic))
    e_pot = potential_energy(state.density, state.potential)
    s_beta, s_dbeta = _entropy_sums(state)
    total = e_kin - e_pot + state.T * s_beta
    # ⟨u_j, H_ρ u_j⟩ in the state's own potential
    if len(spec):
        levels = kinetic - np.sum(spec.u**2 * state.potential.values, axis=1) * h
        tr_h = float(np.sum(weights * levels))
    else:
        tr_h = 0.0
    residual = abs(state.mu * state.M - (tr_h + state.T * s_dbeta))
    virial = 2.0 * e_pot / e_kin if e_kin > 0 else float("nan")
    return FreeEnergyBreakdown(e_kin, e_pot, s_beta, total, virial, residual, state.T)


def _sweep(n_in: RadialField, M: float, T: float, entropy, l_max: int, k: int) -> MixedState:
    V = potential_from_density(n_in)
    if T == 0:
        # pure state on the lowest s-level
        energies, u = channel_eigensolve(V, 0, 1)
        spectrum = Spectrum(n_in.grid, np.zeros(1, int), np.zeros(1, int), energies, u)
        return build_state(spectrum, np.array([M]), float(energies[0]), 0.0, entropy, M)
    spectrum = full_spectrum(V, l_max, k)
    occ = solve_chemical_potential(spectrum, M, T, entropy)
    return build_state(spectrum, occ.lambdas, occ.mu, T, entropy, M)


def scf_step(
    density: RadialField,
    M: float,
    T: float,
    entropy: EntropySpec | None,
    config: SCFConfig,
    mixing: float | None = None,
) -> tuple[MixedState, RadialField]:
    """One fixed-point sweep.

    Returns the state built from the new orbitals and the mixed density
    ``(1 - α) n_in + α n_new`` rescaled to mass ``M``.
    """
    alpha = config.mixing if mixing is None else mixing
    if not 0 <= alpha <= 1:
        raise ValueError("mixing must lie in [0, 1]")
    if T < 0:
        raise InvalidTemperature("temperature must be nonnegative")
    state = _sweep(density, M, T, entropy, config.l_max, config.k_per_channel)
    if alpha == 0:
        return state, density
    mixed = RadialField(density.grid, (1 - alpha) * density.values + alpha * state.density.values)
    return state, _renormalize(mixed, M)


def _truncation_leak(state: MixedState, config: SCFConfig) -> float:
    """Largest occupation among entries at the edge of what was retained."""
    spec = state.spectrum
    if len(spec) == 0:
        return 0.0
    edge = (spec.n == config.k_per_channel - 1) | (spec.l == config.l_max)
    return float(np.max(state.lambdas[edge], initial=0.0))


def tail_mass(state: MixedState, R: float) -> float:
    """Mass outside radius ``R``, ``∫_{|x|>R} n dx``."""
    grid = state.grid
    mask = grid.r > R
    return float(np.sum(grid.shell_weights[mask] * state.density.values[mask]))


def dilation_gain(breakdown: FreeEnergyBreakdown) -> tuple[float, float]:
    """Best mass-preserving dilation ``x ↦ λx`` of a state and the energy it would save.

    Under dilation ``E_kin → λ² E_kin``, ``E_pot → λ E_pot`` and the
    entropy is unchanged, so the optimum is ``λ = E_pot/(2 E_kin)`` and the
    saving ``(E_pot - 2E_kin)² / (4 E_kin)``.
    """
    k, p = breakdown.e_kin, breakdown.e_pot
    lam = p / (2.0 * k)
    return lam, (p - 2.0 * k) ** 2 / (4.0 * k)


def _run(
    M: float,
    T: float,
    entropy: EntropySpec | None,
    config: SCFConfig,
    initial_density: RadialField | None,
    raise_on_failure: bool,
) -> SolveResult:
    if not M > 0:
        raise ValueError(f"mass must be positive, got {M!r}")
    grid = config.grid
    if initial_density is None:
        n_in = seed_density(grid, M)
    else:
        if initial_density.grid != grid:
            raise ValueError("initial density lives on a different grid than the config")
        n_in = _renormalize(initial_density, M)

    alpha = config.mixing
    history = []
    rises = 0
    F_prev = None
    converged = False
    state = None
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        state, n_next = scf_step(n_in, M, T, entropy, config, alpha)
        F = free_energy(state).total
        residual = float(np.sum(grid.shell_weights * np.abs(state.density.values - n_in.values)))
        history.append((F, residual, alpha))
        if F_prev is not None:
            dF = F - F_prev
            if residual <= config.tol_density * M and abs(dF) <= config.energy_tolerance(F):
                converged = True
                break
            rises = rises + 1 if dF > config.energy_tolerance(F) else 0
            if rises >= 2 and alpha > config.min_mixing:
                alpha = max(alpha / 2.0, config.min_mixing)
                rises = 0
                log.debug("free energy rose twice; mixing reduced to %g", alpha)
        F_prev = F
        n_in = n_next

    breakdown = free_energy(state)
    lam_opt, gain = dilation_gain(breakdown)
    diagnostics = {
        "tail_mass_half_radius": tail_mass(state, grid.r_max / 2.0),
        "truncation_leak": _truncation_leak(state, config),
        "final_density_residual": history[-1][1],
        "optimal_dilation": lam_opt,
        "dilation_gain": gain,
        "final_mixing": alpha,
        "rank_threshold": RANK_THRESHOLD * M,
    }
    # discretisation alone leaves gains of order 1e-8 |F|
    if converged and gain > 1e-6 * abs(breakdown.total):
        log.warning("a dilation by %.6f would lower F by %.3g; virial identity not met", lam_opt, gain)
    if diagnostics["truncation_leak"] > 1e-8 * M:
        log.warning(
            "highest retained state carries %.3g of the mass; increase l_max or k_per_channel",
            diagnostics["truncation_leak"],
        )
    result = SolveResult(state, breakdown, iterations, converged, state.rank(), diagnostics, history)
    if not converged:
        log.warning("SCF not converged after %d iterations (residual %.3g)", iterations, history[-1][1])
        if raise_on_failure:
            raise NotConverged(f"no convergence in {iterations} iterations", result)
    return result


def scf_solve(
    M: float,
    T: float,
    entropy: EntropySpec,
    config: SCFConfig | None = None,
    initial_density: RadialField | None = None,
    raise_on_failure: bool = True,
) -> SolveResult:
    """Minimise the free energy at mass ``M`` and temperature ``T > 0``.

    Parameters
    ----------
    initial_density
        Warm start; defaults to a Gaussian of width ``r_max/10``.
    raise_on_failure
        Raise :class:`NotConverged` (carrying the last iterate) instead of
        returning a result with ``converged=False``.

    Raises
    ------
    InvalidTemperature
        For ``T <= 0``; use :func:`zero_temperature_solve`.
    MassNotAttainable
        When the bound spectrum cannot hold the mass with ``μ < 0``.
    """
    if not T > 0:
        raise InvalidTemperature("scf_solve needs T > 0; use zero_temperature_solve for T = 0")
    config = SCFConfig() if config is None else config
    return _run(M, T, entropy, config, initial_density, raise_on_failure)


def zero_temperature_solve(
    M: float,
    config: SCFConfig | None = None,
    initial_density: RadialField | None = None,
    raise_on_failure: bool = True,
) -> SolveResult:
    """Pure-state minimiser of the Hartree energy (all mass on the lowest s-state).

    ``diagnostics["spectrum"]`` holds the bound spectrum of the converged
    Hamiltonian; its two lowest levels feed the critical-temperature formula.
    """
    config = SCFConfig() if config is None else config
    result = _run(M, 0.0, None, config, initial_density, raise_on_failure)
    spectrum = full_spectrum(result.state.potential, config.l_max, config.k_per_channel)
    result.diagnostics["spectrum"] = spectrum
    result.diagnostics["levels"] = spectrum.distinct_levels()
    return result


def energy_floor(M: float, i_10: float) -> float:
    """``-¼ C² M³`` with ``C = 2 sqrt(|i_{1,0}|)`` calibrated on the unit-mass ground state.

    ``C`` is the best constant in ``E_pot ≤ C sqrt(E_kin) M^{3/2}``, so every
    state of mass ``M`` has ``F_T ≥ E_H ≥`` this value, at any temperature.
    """
    if not i_10 < 0:
        raise ValueError("i_10 must be negative")
    C = 2.0 * np.sqrt(-i_10)
    return -0.25 * C**2 * M**3


def local_minimality_probe(
    result: SolveResult,
    n_trials: int = 5,
    ts=(1e-3, 1e-2),
    seed: int = 0,
) -> float:
    """Smallest ``F((1-t)ρ + tσ) - F(ρ)`` over random mass-preserving trial states ``σ``.

    Trials redistribute the mass over the retained orbitals, so the mixture
    stays diagonal in the same basis. A clearly negative value means the
    solver stopped away from a local minimum.
    """
    rng = np.random.default_rng(seed)
    state = result.state
    base = free_energy(state).total
    deg = state.spectrum.degeneracy
    worst = np.inf
    for _ in range(n_trials):
        w = rng.random(len(deg))
        sigma = w * state.M / np.sum(deg * w)
        for t in ts:
            lam = (1 - t) * state.lambdas + t * sigma
            trial = build_state(state.spectrum, lam, state.mu, state.T, state.entropy, state.M)
            worst = min(worst, free_energy(trial).total - base)
    return float(worst)
