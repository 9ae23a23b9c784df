"""Quick self-checks behind ``thermal-hartree verify``.

Each check returns ``(name, passed, detail)``; the runner formats them as
``PASS``/``FAIL`` lines. The checks are cheap versions of the acceptance
suite and run on the grid of the given run configuration.
"""

from __future__ import annotations

import numpy as np

from .entropy import parse_entropy
from .grid import RadialField, make_grid
from .oracle import rank1_descent, read_reference_file
from .phase import critical_temperature_formula
from .poisson import point_mass_potential, potential_energy, potential_from_density
from .scf import scf_solve, zero_temperature_solve
from .spectral import channel_eigensolve

__all__ = ["check_hydrogen", "check_poisson_ball", "run_checks"]


def check_hydrogen(r_max: float = 60.0, n_points: int = 6000, rtol: float = 1e-4):
    grid = make_grid(r_max, n_points)
    V = point_mass_potential(grid)
    e0, _ = channel_eigensolve(V, 0, 2)
    e1, _ = channel_eigensolve(V, 1, 1)
    got = np.array([e0[0], e0[1], e1[0]])
    want = np.array([-1 / 4, -1 / 16, -1 / 16])
    err = float(np.max(np.abs(got / want - 1)))
    return "hydrogen levels 1s 2s 2p", err <= rtol, f"max rel err {err:.2e}"


def check_poisson_ball(R: float = 5.0, M: float = 1.0, rtol: float = 1e-5):
    # 4k+1 nodes put the edge of the ball midway between two nodes
    grid = make_grid(4 * R, 4001)
    r = grid.r
    n = RadialField(grid, np.where(r <= R, 3 * M / (4 * np.pi * R**3), 0.0))
    V = potential_from_density(n)
    exact = np.where(r <= R, M * (3 * R**2 - r**2) / (2 * R**3), M / r)
    err_v = float(np.max(np.abs(V.values / exact - 1)))
    err_e = abs(potential_energy(n, V) / (3 * M**2 / (5 * R)) - 1)
    err = max(err_v, err_e)
    return "uniform ball potential and self-energy", err <= rtol, f"max rel err {err:.2e}"


def run_checks(cfg) -> tuple[list[str], bool]:
    config = cfg.scf_config()
    spec = parse_entropy(cfg.entropy)
    checks = [check_hydrogen(), check_poisson_ball()]

    zero = zero_temperature_solve(1.0, config, raise_on_failure=False)
    b = zero.breakdown
    checks.append(("zero-T virial E_pot = 2 E_kin", abs(b.e_pot / b.e_kin - 2) <= 1e-3, f"ratio {b.e_pot / b.e_kin:.6f}"))
    if cfg.reference:
        ref = read_reference_file(cfg.reference)
        i_ref, where = ref.i_10, f"fixture {cfg.reference}"
    else:
        i_ref, where = rank1_descent(1.0, config.grid).energy, "descent oracle"
    rel = abs(zero.free_energy - i_ref) / abs(i_ref)
    checks.append((f"zero-T energy vs {where}", rel <= 1e-3, f"rel diff {rel:.2e}"))

    t_c = critical_temperature_formula(1.0, spec, zero)
    T = 0.5 * t_c
    warm = scf_solve(1.0, T, spec, config, zero.state.density, raise_on_failure=False)
    affine = zero.free_energy + T * float(spec.beta(1.0))
    rel = abs(warm.free_energy - affine) / abs(affine)
    checks.append(("pure regime F = i_0 + T beta(M) at T_c/2", warm.rank == 1 and rel <= 1e-4, f"rank {warm.rank}, rel diff {rel:.2e}"))

    lines = [f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in checks]
    return lines, all(ok for _, ok, _ in checks)
