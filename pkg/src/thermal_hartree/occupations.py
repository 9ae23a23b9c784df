"""Chemical potential and occupation numbers for a fixed spectrum.

Every magnetic substate of a level with energy ``μ_j`` carries

    λ_j = (β')⁻¹((μ - μ_j)/T)₊

and ``μ`` is fixed by ``Σ (2l+1) λ_j = M``. The map ``μ ↦ mass`` is monotone
but only piecewise smooth (kinks where ``μ`` crosses a level), so ``μ`` is
found by plain bisection on ``(μ_min - 1, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import EntropySpec
from .errors import EmptySpectrum, InvalidTemperature, MassNotAttainable
from .spectral import Spectrum

__all__ = [
    "OccupationSet",
    "occupations_at_mu",
    "mass_at_mu",
    "solve_chemical_potential",
    "rank_of",
    "RANK_THRESHOLD",
]

# relative to the mass
RANK_THRESHOLD = 1e-10
MU_CEILING = -1e-14


@dataclass(frozen=True, eq=False)
class OccupationSet:
    """Occupations per substate (``lambdas[i]`` for each of the ``2l+1`` copies of entry ``i``)."""

    spectrum: Spectrum
    lambdas: np.ndarray
    mu: float
    T: float
    M: float

    @property
    def degeneracy(self) -> np.ndarray:
        return self.spectrum.degeneracy

    @property
    def M_realized(self) -> float:
        return float(np.sum(self.degeneracy * self.lambdas))


def _check_temperature(T: float) -> None:
    if not T > 0 or not np.isfinite(T):
        raise InvalidTemperature(f"temperature must be positive and finite, got {T!r}")


def occupations_at_mu(spectrum: Spectrum, mu: float, T: float, spec: EntropySpec) -> np.ndarray:
    _check_temperature(T)
    return np.asarray(spec.beta_prime_inverse((mu - spectrum.energies) / T), dtype=float)


def mass_at_mu(spectrum: Spectrum, mu: float, T: float, spec: EntropySpec) -> float:
    """Total mass ``Σ (2l+1) (β')⁻¹((μ - μ_j)/T)₊`` carried at chemical potential ``mu``."""
    if len(spectrum) == 0:
        return 0.0
    return float(np.sum(spectrum.degeneracy * occupations_at_mu(spectrum, mu, T, spec)))


def solve_chemical_potential(
    spectrum: Spectrum,
    M: float,
    T: float,
    spec: EntropySpec,
    rtol: float = 1e-10,
    max_iter: int = 200,
) -> OccupationSet:
    """Bisect for the ``μ < 0`` that makes the occupations carry mass ``M``.

    Raises
    ------
    MassNotAttainable
        If even ``μ → 0⁻`` leaves the bound states short of ``M``.
    """
    _check_temperature(T)
    if not M > 0:
        raise ValueError(f"mass must be positive, got {M!r}")
    if len(spectrum) == 0:
        raise EmptySpectrum("no bound states to occupy")

    hi = MU_CEILING
    mass_hi = mass_at_mu(spectrum, hi, T, spec)
    if mass_hi < M * (1.0 - rtol):
        raise MassNotAttainable(
            f"bound states carry at most {mass_hi:.6g} < M = {M:.6g} with mu < 0 (T = {T:.6g})",
            mass_at_zero=mass_hi,
        )
    lo = float(spectrum.energies[0]) - 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if mass_at_mu(spectrum, mid, T, spec) < M:
            lo = mid
        else:
            hi = mid
    # mass is continuous in mu; take whichever bracket end is closer
    candidates = []
    for mu in (lo, hi):
        lam = occupations_at_mu(spectrum, mu, T, spec)
        candidates.append((abs(float(np.sum(spectrum.degeneracy * lam)) - M), mu, lam))
    _, mu, lambdas = min(candidates, key=lambda c: c[0])
    return OccupationSet(spectrum, lambdas, float(mu), float(T), float(M))


def rank_of(occ: OccupationSet, threshold: float | None = None) -> int:
    """Number of substates (degeneracy counted) with occupation above ``threshold``.

    The default threshold is ``1e-10 * M``.
    """
    if threshold is None:
        threshold = RANK_THRESHOLD * occ.M
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return int(np.sum(occ.degeneracy[occ.lambdas > threshold]))
