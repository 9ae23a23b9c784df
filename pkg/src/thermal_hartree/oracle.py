"""Slow, independent reference computations.

Nothing here goes through the SCF path. The potential is a dense O(n²)
sum over the angle-averaged kernel ``1/max(r, s)``, and the pure-state minimiser
comes from imaginary-time descent instead of self-consistent diagonalisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .entropy import EntropySpec
from .errors import Stagnation
from .grid import RadialField, RadialGrid
from .spectral import full_spectrum

__all__ = [
    "DescentResult",
    "ReferenceValues",
    "direct_potential",
    "rank1_energy",
    "rank1_gradient",
    "rank1_descent",
    "reference_values",
    "write_reference_file",
    "read_reference_file",
    "frozen_free_energy",
    "brute_force_free_energy",
]


@lru_cache(maxsize=1)
def _kernel(grid: RadialGrid) -> np.ndarray:
    r = grid.r
    return 1.0 / np.maximum.outer(r, r)


def direct_potential(grid: RadialGrid, mass_weights: np.ndarray) -> np.ndarray:
    """``V(r_i) = Σ_j m_j / max(r_i, r_j)`` where ``m_j`` is the mass in shell ``j``.

    Dense kernel matrix, cached for the most recent grid (n² doubles).
    """
    return _kernel(grid) @ mass_weights


def _kinetic_sum(u: np.ndarray, h: float) -> float:
    return float(np.sum(np.diff(np.concatenate(([0.0], u, [0.0]))) ** 2) / h)


def rank1_energy(u: np.ndarray, M: float, grid: RadialGrid) -> tuple[float, float, float]:
    """Hartree energy of ``M |ψ⟩⟨ψ|`` with ``ψ = u(r)/(r√4π)``; returns ``(E, E_kin, E_pot)``.

    ``u`` need not be normalised; the formulas use it as given.
    """
    h = grid.h
    e_kin = M * _kinetic_sum(u, h)
    w = M * u**2 * h
    e_pot = 0.5 * float(w @ direct_potential(grid, w))
    return e_kin - e_pot, e_kin, e_pot


def rank1_gradient(u: np.ndarray, M: float, grid: RadialGrid) -> np.ndarray:
    """Gradient of :func:`rank1_energy` with respect to the nodal values of ``u``."""
    h = grid.h
    padded = np.concatenate(([0.0], u, [0.0]))
    lap = (2.0 * u - padded[:-2] - padded[2:]) / h**2
    V = direct_potential(grid, M * u**2 * h)
    return 2.0 * M * h * (lap - V * u)


@dataclass
class DescentResult:
    u: np.ndarray
    energy: float
    e_kin: float
    e_pot: float
    iterations: int
    grid: RadialGrid
    M: float
    energies: list

    @property
    def density(self) -> RadialField:
        return RadialField(self.grid, self.M * self.u**2 / (4.0 * np.pi * self.grid.r**2))

    @property
    def potential(self) -> RadialField:
        return RadialField(self.grid, direct_potential(self.grid, self.M * self.u**2 * self.grid.h))


def _normalize(u: np.ndarray, h: float) -> np.ndarray:
    return u / np.sqrt(np.sum(u**2) * h)


def rank1_descent(
    M: float,
    grid: RadialGrid,
    step: float = 50.0,
    iterations: int = 500,
    tol: float = 1e-14,
    min_step: float = 1e-8,
) -> DescentResult:
    """Minimise the pure-state Hartree energy by normalised imaginary-time descent.

    Each step is backward Euler in imaginary time with the potential frozen at
    the current iterate, ``(1 + τ H[u]) u' = u``, followed by renormalisation.
    ``τ`` is capped at ``0.9/|⟨u, H u⟩|`` so the lowest mode is always the
    most amplified; a step that raises the energy is retried with ``τ`` halved.

    Raises
    ------
    Stagnation
        If no energy-decreasing step is found down to ``min_step``.
    """
    h, r = grid.h, grid.r
    n = grid.n_points
    u = _normalize(r * np.exp(-r / (grid.r_max / 20.0)), h)
    energy = rank1_energy(u, M, grid)[0]
    energies = [energy]
    tau = step
    it = 0
    for it in range(1, iterations + 1):
        V = direct_potential(grid, M * u**2 * h)
        padded = np.concatenate(([0.0], u, [0.0]))
        rayleigh = float(np.sum(((2.0 * u - padded[:-2] - padded[2:]) / h**2 - V * u) * u) * h)
        cap = step if rayleigh >= 0 else min(step, 0.9 / abs(rayleigh))
        tau = min(tau, cap)
        while True:
            ab = np.empty((3, n))
            ab[0, :] = tau * (-1.0 / h**2)
            ab[1, :] = 1.0 + tau * (2.0 / h**2 - V)
            ab[2, :] = tau * (-1.0 / h**2)
            trial = _normalize(solve_banded((1, 1), ab, u), h)
            e_trial = rank1_energy(trial, M, grid)[0]
            if e_trial <= energy:
                break
            tau *= 0.5
            if tau < min_step:
                raise Stagnation(f"descent step fell below {min_step} at iteration {it}")
        change = energy - e_trial
        u, energy = trial, e_trial
        energies.append(energy)
        if change <= tol * abs(energy):
            break
        tau = tau * 2.0
    e, e_kin, e_pot = rank1_energy(u, M, grid)
    return DescentResult(u, e, e_kin, e_pot, it, grid, M, energies)


@dataclass(frozen=True)
class ReferenceValues:
    i_10: float
    mu0_0: float
    mu0_1: float
    r_max: float
    n_points: int

    def as_dict(self) -> dict:
        return {
            "i_10": self.i_10,
            "mu0_0": self.mu0_0,
            "mu0_1": self.mu0_1,
            "r_max": self.r_max,
            "n_points": self.n_points,
        }


def reference_values(grid: RadialGrid, descent: DescentResult | None = None) -> ReferenceValues:
    """Unit-mass pure-state energy and the two lowest levels of its Hamiltonian."""
    if descent is None:
        descent = rank1_descent(1.0, grid)
    if descent.M != 1.0:
        raise ValueError("reference values are defined at unit mass")
    levels = full_spectrum(descent.potential, l_max=4, k_per_channel=4).distinct_levels()
    if len(levels) < 2:
        raise ValueError("fewer than two bound levels; enlarge the grid")
    return ReferenceValues(descent.energy, float(levels[0]), float(levels[1]), grid.r_max, grid.n_points)


def write_reference_file(values: ReferenceValues, path: str | Path) -> None:
    lines = [f"{k} = {v!r}" for k, v in values.as_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_reference_file(path: str | Path) -> ReferenceValues:
    data = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        data[key.strip()] = value.strip()
    return ReferenceValues(
        float(data["i_10"]),
        float(data["mu0_0"]),
        float(data["mu0_1"]),
        float(data["r_max"]),
        int(data["n_points"]),
    )


def frozen_free_energy(lambdas, energies, degeneracy, T: float, spec: EntropySpec):
    """``Σ d (μ_j λ_j + T β(λ_j))``: free energy of occupations in a fixed Hamiltonian.

    Broadcasts over leading axes of ``lambdas`` (last axis indexes levels).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    energies = np.asarray(energies, dtype=float)
    degeneracy = np.asarray(degeneracy, dtype=float)
    return np.sum(degeneracy * (energies * lambdas + T * spec.beta(lambdas)), axis=-1)


def brute_force_free_energy(
    energies,
    M: float,
    T: float,
    spec: EntropySpec,
    degeneracy=None,
    n_grid: int = 801,
    zooms: int = 4,
) -> tuple[float, np.ndarray]:
    """Minimise :func:`frozen_free_energy` over occupations of a 1-3 level spectrum.

    Dense grid search on ``(λ_0, λ_1)`` with the last level fixed by the mass,
    then repeated zooms around the best node. Returns ``(F_min, λ)``.
    """
    energies = np.asarray(energies, dtype=float)
    k = len(energies)
    deg = np.ones(k) if degeneracy is None else np.asarray(degeneracy, dtype=float)
    if k == 1:
        lam = np.array([M / deg[0]])
        return float(frozen_free_energy(lam, energies, deg, T, spec)), lam
    if k > 3:
        raise ValueError("brute force search handles at most three levels")

    free = k - 1
    lo = np.zeros(free)
    hi = np.array([M / deg[j] for j in range(free)])
    best = None
    for _ in range(zooms + 1):
        axes = [np.linspace(lo[j], hi[j], n_grid) for j in range(free)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, free)
        last = (M - mesh @ deg[:free]) / deg[-1]
        ok = last >= 0
        lam = np.column_stack((mesh[ok], last[ok]))
        F = frozen_free_energy(lam, energies, deg, T, spec)
        i = int(np.argmin(F))
        best = (float(F[i]), lam[i])
        width = (hi - lo) / (n_grid - 1) * 4.0
        lo = np.maximum(best[1][:free] - width, 0.0)
        hi = np.minimum(best[1][:free] + width, M / deg[:free])
    return best
