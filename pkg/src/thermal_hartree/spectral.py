"""Bound states of ``H = -Δ - V`` channel by channel in angular momentum.

For a radial potential, ``ψ(x) = u(r)/r · Y_lm`` and ``u`` solves

    -u'' + (l(l+1)/r² - V(r)) u = μ u,    u(0) = u(r_max) = 0,

discretised with three-point differences into a symmetric tridiagonal matrix.
The lowest eigenvalues come from Sturm-sequence bisection and the vectors from
inverse iteration (LAPACK ``stebz``/``stein`` through scipy).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceFailure, GridMismatch
from .grid import RadialField, RadialGrid

__all__ = [
    "ChannelOperator",
    "SpectrumEntry",
    "Spectrum",
    "channel_operator",
    "channel_eigensolve",
    "full_spectrum",
    "kinetic_energy_of_entry",
    "sturm_count",
]

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ChannelOperator:
    """Tridiagonal matrix of ``-d²/dr² + l(l+1)/r² - V`` on the grid nodes."""

    l: int
    grid: RadialGrid
    diagonal: np.ndarray
    off_diagonal: float

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diagonal * u
        out[1:] += self.off_diagonal * u[:-1]
        out[:-1] += self.off_diagonal * u[1:]
        return out


def channel_operator(V: RadialField, l: int, grid: RadialGrid | None = None) -> ChannelOperator:
    grid = V.grid if grid is None else grid
    if grid != V.grid:
        raise GridMismatch("potential is not sampled on the requested grid")
    if l < 0 or int(l) != l:
        raise ValueError(f"angular momentum must be a nonnegative integer, got {l!r}")
    r, h = grid.r, grid.h
    diag = l * (l + 1) / r**2 - V.values + 2.0 / h**2
    return ChannelOperator(int(l), grid, diag, -1.0 / h**2)


def sturm_count(op: ChannelOperator, x: float) -> int:
    """Number of eigenvalues of ``op`` strictly below ``x`` (LDLᵀ inertia)."""
    e2 = op.off_diagonal**2
    count = 0
    q = 1.0
    for i, d in enumerate(op.diagonal):
        q = d - x if i == 0 else d - x - e2 / q
        if q == 0.0:
            q = -1e-300
        if q < 0:
            count += 1
    return count


def channel_eigensolve(V: RadialField, l: int, k: int, grid: RadialGrid | None = None):
    """Lowest ``k`` eigenpairs of one angular-momentum channel.

    Returns
    -------
    energies : ndarray, shape (k,)
        Ascending eigenvalues.
    u : ndarray, shape (k, n_points)
        Reduced radial functions normalised to ``Σ u² h = 1``, positive near
        the origin.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    op = channel_operator(V, l, grid)
    k = min(int(k), op.grid.n_points)
    e = np.full(op.grid.n_points - 1, op.off_diagonal)
    try:
        energies, vecs = eigh_tridiagonal(
            op.diagonal, e, select="i", select_range=(0, k - 1), lapack_driver="stebz"
        )
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"tridiagonal eigensolver failed in channel l={l}") from exc
    return energies, _finish_vectors(op, energies, vecs)


def _finish_vectors(op: ChannelOperator, energies: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Check residuals, fix signs (positive near the origin), rescale to ``Σ u² h = 1``."""
    for mu, vec in zip(energies, vecs.T):
        res = np.linalg.norm(op.matvec(vec) - mu * vec)
        if not res <= RESIDUAL_TOL:
            raise ConvergenceFailure(f"eigenpair residual {res:.3e} too large in channel l={op.l}")
    u = vecs.T / np.sqrt(op.grid.h)
    for row in u:
        lead = row[np.argmax(np.abs(row) > 1e-3 * np.max(np.abs(row)))]
        if lead < 0:
            row *= -1.0
    return u


@dataclass(frozen=True)
class SpectrumEntry:
    l: int
    n: int
    energy: float
    u: np.ndarray

    @property
    def degeneracy(self) -> int:
        return 2 * self.l + 1


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Bound states sorted by energy; ``u[i]`` is the reduced function of entry ``i``.

    Each entry stands for ``2l+1`` magnetic substates sharing one radial function.
    """

    grid: RadialGrid
    l: np.ndarray
    n: np.ndarray
    energies: np.ndarray
    u: np.ndarray

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def degeneracy(self) -> np.ndarray:
        return 2 * self.l + 1

    @property
    def entries(self) -> list[SpectrumEntry]:
        return [
            SpectrumEntry(int(l), int(n), float(e), u)
            for l, n, e, u in zip(self.l, self.n, self.energies, self.u)
        ]

    def distinct_levels(self, rtol: float = 1e-9) -> np.ndarray:
        """Eigenvalues with cross-channel coincidences merged."""
        levels: list[float] = []
        for e in self.energies:
            if not levels or abs(e - levels[-1]) > rtol * max(1.0, abs(e)):
                levels.append(float(e))
        return np.array(levels)

    @cached_property
    def kinetic(self) -> np.ndarray:
        """``∫ u'² dr + l(l+1) ∫ u²/r² dr`` for every entry."""
        h, r = self.grid.h, self.grid.r
        if len(self) == 0:
            return np.zeros(0)
        padded = np.pad(self.u, ((0, 0), (1, 1)))
        grad = np.sum(np.diff(padded, axis=1) ** 2, axis=1) / h
        centrifugal = self.l * (self.l + 1) * np.sum(self.u**2 / r**2, axis=1) * h
        return grad + centrifugal

    def take(self, index) -> "Spectrum":
        return Spectrum(self.grid, self.l[index], self.n[index], self.energies[index], self.u[index])


def _bound_states(V: RadialField, l: int, k: int, eps_bound: float):
    """Eigenpairs of one channel below ``-eps_bound`` (at most ``k``).

    Restricting the bisection window to negative energies is what keeps a
    sweep cheap: only bound states are ever located.
    """
    op = channel_operator(V, l)
    lower = float(np.min(op.diagonal + 2.0 * op.off_diagonal)) - 1.0
    if lower >= -eps_bound:
        return np.zeros(0), np.zeros((0, op.grid.n_points))
    e = np.full(op.grid.n_points - 1, op.off_diagonal)
    try:
        energies, vecs = eigh_tridiagonal(
            op.diagonal, e, select="v", select_range=(lower, -eps_bound), lapack_driver="stebz"
        )
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"tridiagonal eigensolver failed in channel l={l}") from exc
    energies, vecs = energies[:k], vecs[:, :k]
    return energies, _finish_vectors(op, energies, vecs)


def full_spectrum(
    V: RadialField, l_max: int = 8, k_per_channel: int = 12, eps_bound: float = 1e-12
) -> Spectrum:
    """Collect the bound states (``μ < -eps_bound``) of channels ``0..l_max``."""
    if l_max < 0:
        raise ValueError("l_max must be nonnegative")
    if k_per_channel < 1:
        raise ValueError("k_per_channel must be at least 1")
    grid = V.grid
    ls, ns, es, us = [], [], [], []
    for l in range(l_max + 1):
        energies, u = _bound_states(V, l, k_per_channel, eps_bound)
        if len(energies) == 0:
            # higher l only raises the centrifugal barrier
            break
        ls.extend([l] * len(energies))
        ns.extend(range(len(energies)))
        es.extend(energies)
        us.extend(u)
    if not es:
        return Spectrum(grid, np.zeros(0, int), np.zeros(0, int), np.zeros(0), np.zeros((0, grid.n_points)))
    es = np.asarray(es)
    order = np.argsort(es, kind="stable")
    return Spectrum(
        grid,
        np.asarray(ls, dtype=int)[order],
        np.asarray(ns, dtype=int)[order],
        es[order],
        np.asarray(us)[order],
    )


def kinetic_energy_of_entry(entry: SpectrumEntry, grid: RadialGrid) -> float:
    """Kinetic energy ``∫|∇ψ|² dx`` of one normalised substate."""
    h, r = grid.h, grid.r
    u = entry.u
    grad = np.sum(np.diff(np.concatenate(([0.0], u, [0.0]))) ** 2) / h
    return float(grad + entry.l * (entry.l + 1) * np.sum(u**2 / r**2) * h)
