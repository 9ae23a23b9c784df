"""Newtonian potential ``V = n * 1/|x|`` of a spherically symmetric density.

Uses the shell theorem

    V(r) = (4π/r) ∫_0^r s² n(s) ds + 4π ∫_r^∞ s n(s) ds

with both cumulative integrals done by the trapezoid rule in one O(n) pass.
On the grid this equals ``V_i = Σ_j w_j n_j / max(r_i, r_j)`` with the shell
weights ``w_j = 4π r_j² h``, a symmetric kernel, so ``½ Σ w n V`` is a
quadratic form whose gradient is exactly ``V``.
"""

from __future__ import annotations

import numpy as np

from .errors import GridMismatch, NegativeDensity
from .grid import RadialField, RadialGrid

__all__ = ["Potential", "potential_from_density", "potential_energy", "point_mass_potential"]


class Potential(RadialField):
    """Nonnegative potential ``V(r)``; the Hamiltonian is ``-Δ - V``."""


def potential_from_density(n: RadialField) -> Potential:
    values = n.values
    if np.any(values < 0):
        raise NegativeDensity("density has negative values")
    grid = n.grid
    r, h = grid.r, grid.h
    inner = np.cumsum(r * r * values) * h
    # outer[i] = Σ_{j>i} r_j n_j h
    tail = np.cumsum((r * values)[::-1])[::-1] * h
    outer = np.concatenate((tail[1:], [0.0]))
    return Potential(grid, 4.0 * np.pi * (inner / r + outer))


def potential_energy(n: RadialField, V: RadialField) -> float:
    """``½ ∫ n V dx``, the gravitational self-energy when ``V`` comes from ``n``."""
    if n.grid != V.grid:
        raise GridMismatch("density and potential live on different grids")
    return 0.5 * float(np.sum(n.grid.shell_weights * n.values * V.values))


def point_mass_potential(grid: RadialGrid, mass: float = 1.0) -> Potential:
    """``V(r) = mass / r``; with ``mass = 1`` the Hamiltonian is hydrogen-like."""
    return Potential(grid, mass / grid.r)
