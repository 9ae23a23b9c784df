"""Acceptance criteria, one test per criterion.

Every test records a ``PASS``/``FAIL`` line in ``REPORT``; the lines are
printed at the end of the pytest run and by ``python tests/test_acceptance.py``.
Runs on the default grid (r_max = 80, 4000 nodes) and takes several minutes.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest

from thermal_hartree.entropy import PowerLaw
from thermal_hartree.errors import MassNotAttainable
from thermal_hartree.grid import make_grid
from thermal_hartree.oracle import (
    brute_force_free_energy,
    frozen_free_energy,
    rank1_descent,
    read_reference_file,
    reference_values,
)
from thermal_hartree.occupations import solve_chemical_potential
from thermal_hartree.phase import (
    find_critical_temperature,
    find_max_temperature,
    scaling_check,
    subadditivity_check,
    tail_profile,
    temperature_scan,
    transform_state,
    tstar_lower_bound,
)
from thermal_hartree.poisson import point_mass_potential
from thermal_hartree.scf import SCFConfig, free_energy, scf_solve, zero_temperature_solve
from thermal_hartree.spectral import channel_eigensolve
from thermal_hartree.verify import check_poisson_ball

FIXTURE = Path(__file__).parent / "fixtures" / "reference_r80_n4000.txt"
CONFIG = SCFConfig()
REPORT: dict[int, str] = {}


def record(number: int, title: str, passed: bool, detail: str) -> bool:
    REPORT[number] = f"{'PASS' if passed else 'FAIL'}  [{number:2d}] {title}: {detail}"
    print(REPORT[number])
    return passed


_cache: dict = {}


def cached(key, factory):
    if key not in _cache:
        _cache[key] = factory()
    return _cache[key]


def zero_state():
    return cached("zero", lambda: zero_temperature_solve(1.0, CONFIG))


def critical(p):
    def run():
        t0 = time.perf_counter()
        tc = find_critical_temperature(1.0, PowerLaw(p), CONFIG)
        return tc, time.perf_counter() - t0

    return cached(("tc", p), run)


def t_c_formula(p):
    levels = zero_state().diagnostics["levels"]
    return float(levels[1] - levels[0]) / float(PowerLaw(p).beta_prime(1.0))


def solve_p2(factor):
    T = factor * t_c_formula(2)
    return cached(("p2", factor), lambda: scf_solve(1.0, T, PowerLaw(2), CONFIG))


def test_criterion_01_hydrogen_calibration():
    grid = make_grid(60.0, 6000)
    V = point_mass_potential(grid)
    t0 = time.perf_counter()
    s_levels, _ = channel_eigensolve(V, 0, 3)
    p_levels, _ = channel_eigensolve(V, 1, 1)
    elapsed = time.perf_counter() - t0
    exact = np.array([-1 / 4, -1 / 16, -1 / 36, -1 / 16])
    got = np.concatenate((s_levels, p_levels))
    rel = np.abs(got / exact - 1)
    ok = bool(np.all(rel <= 1e-4) and elapsed < 5.0)
    detail = "rel err 1s {:.1e}, 2s {:.1e}, 3s {:.1e}, 2p {:.1e}; {:.2f} s".format(*rel, elapsed)
    assert record(1, "hydrogen levels on r_max=60, n=6000", ok, detail)


def test_criterion_02_poisson_calibration():
    t0 = time.perf_counter()
    _, ok, detail = check_poisson_ball(R=5.0, M=1.0, rtol=1e-5)
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 1.0
    assert record(2, "uniform ball potential and 3M^2/(5R)", ok, f"{detail}; {elapsed:.3f} s")


def test_criterion_03_zero_temperature_cross_validation():
    t0 = time.perf_counter()
    zero = zero_temperature_solve(1.0, CONFIG)
    elapsed_scf = time.perf_counter() - t0
    t0 = time.perf_counter()
    descent = rank1_descent(1.0, CONFIG.grid)
    elapsed_oracle = time.perf_counter() - t0
    rel = abs(zero.free_energy - descent.energy) / abs(descent.energy)
    virial = abs(zero.breakdown.e_pot / zero.breakdown.e_kin - 2.0)
    virial_oracle = abs(descent.e_pot / descent.e_kin - 2.0)
    fixture = read_reference_file(FIXTURE)
    rel_fixture = abs(zero.free_energy - fixture.i_10) / abs(fixture.i_10)
    # reduced resolution recomputation of the fixture, widened tolerance
    coarse = make_grid(40.0, 2000)
    coarse_values = reference_values(coarse)
    rel_coarse = abs(coarse_values.i_10 - fixture.i_10) / abs(fixture.i_10)
    ok = (
        rel <= 1e-3
        and virial <= 1e-3
        and virial_oracle <= 1e-3
        and rel_fixture <= 1e-3
        and rel_coarse <= 1e-2
        and elapsed_scf < 60
        and elapsed_oracle < 60
    )
    detail = (
        f"i_10 scf {zero.free_energy:.10f} oracle {descent.energy:.10f} rel {rel:.1e}; "
        f"|Epot/Ekin-2| {virial:.1e}; fixture rel {rel_fixture:.1e}; coarse rel {rel_coarse:.1e}; "
        f"{elapsed_scf:.1f} s + {elapsed_oracle:.1f} s"
    )
    assert record(3, "zero-T SCF vs descent oracle", ok, detail)


def test_criterion_04_cubic_scaling():
    i1 = zero_state().free_energy
    errors = {}
    for M in (0.5, 2.0):
        iM = zero_temperature_solve(M, CONFIG).free_energy
        errors[M] = abs(iM / i1 / M**3 - 1)
    ok = all(e <= 5e-3 for e in errors.values())
    detail = ", ".join(f"M={M}: rel dev {e:.1e}" for M, e in errors.items())
    assert record(4, "i_{M,0} = M^3 i_{1,0}", ok, detail)


def test_criterion_05_virial_at_positive_temperature():
    ratios = {f: solve_p2(f).breakdown.virial_ratio for f in (0.5, 1.5)}
    ranks = {f: solve_p2(f).rank for f in (0.5, 1.5)}
    ok = all(abs(r - 4.0) <= 5e-3 for r in ratios.values())
    detail = ", ".join(f"T={f} T_c: ratio {r:.6f} (rank {ranks[f]})" for f, r in ratios.items())
    assert record(5, "tr(V rho)/tr(-Delta rho) = 4 at T > 0", ok, detail)


def test_criterion_06_multiplier_identity_and_sign():
    cases = {("p=2", f): solve_p2(f) for f in (0.5, 1.5)}
    cases[("p=3", 1.5)] = scf_solve(1.0, 1.5 * t_c_formula(3), PowerLaw(3), CONFIG)
    worst_res = 0.0
    ok = True
    parts = []
    for (label, f), res in cases.items():
        p = res.state.entropy.p
        mu, M, F = res.state.mu, res.state.M, res.free_energy
        rel = res.breakdown.multiplier_residual / abs(mu * M)
        worst_res = max(worst_res, rel)
        ok &= rel <= 1e-6 and mu < 0 and M * mu <= p * F
        parts.append(f"{label} T={f}T_c: M mu {M * mu:.5f} <= p F {p * F:.5f}")
    detail = f"max residual/|mu M| {worst_res:.1e}; " + "; ".join(parts)
    assert record(6, "multiplier identity, mu < 0, M mu <= p F", ok, detail)


def test_criterion_07_affine_pure_regime():
    i0 = zero_state().free_energy
    worst = 0.0
    ranks = set()
    for p in (2, 3):
        spec = PowerLaw(p)
        for f in (0.25, 0.5, 0.75, 0.9):
            T = f * t_c_formula(p)
            res = scf_solve(1.0, T, spec, CONFIG, zero_state().state.density)
            affine = i0 + T * float(spec.beta(1.0))
            worst = max(worst, abs(res.free_energy - affine) / abs(affine))
            ranks.add(res.rank)
    ok = worst <= 1e-4 and ranks == {1}
    assert record(7, "i_{M,T} = i_{M,0} + T beta(M) below 0.9 T_c", ok, f"max rel dev {worst:.1e}, ranks {sorted(ranks)}")


def test_criterion_08_critical_temperature():
    parts, ok, total = [], True, 0.0
    for p in (2, 3):
        tc, elapsed = critical(p)
        total += elapsed
        ok &= tc.relative_difference <= 0.02
        parts.append(f"p={p}: scan {tc.t_c_scan:.6f} formula {tc.t_c_formula:.6f} rel {tc.relative_difference:.1e}")
    ok &= total < 15 * 60
    assert record(8, "rank transition vs (mu1-mu0)/beta'(M)", ok, "; ".join(parts) + f"; {total:.0f} s")


def test_criterion_09_concavity_and_monotonicity():
    t_c = t_c_formula(2)
    temps = t_c * np.linspace(0.05, 1.95, 20)
    scan1 = temperature_scan(1.0, PowerLaw(2), temps, CONFIG)
    scan2 = temperature_scan(2.0, PowerLaw(2), temps, CONFIG)
    converged = sum(p.converged for p in scan1.points)
    concave = scan1.concavity_violations(1e-8)
    mono = scan1.monotonicity_violations()
    F1, F2 = scan1.free_energies, scan2.free_energies
    both = np.array([a.converged and b.converged for a, b in zip(scan1.points, scan2.points)])
    heavier_lower = bool(np.all(F2[both] <= F1[both]))
    ok = converged == 20 and not concave and not mono and heavier_lower and both.sum() == 20
    F = F1
    d2 = F[2:] - 2 * F[1:-1] + F[:-2]
    worst = float(np.max(d2 / np.abs(F[1:-1])))
    detail = (
        f"{converged}/20 converged; max second difference/|i| {worst:.1e}; "
        f"concavity violations {concave}; monotonicity violations {mono}; i(2,T) <= i(1,T): {heavier_lower}"
    )
    assert record(9, "T -> i concave, nondecreasing; nonincreasing in M", ok, detail)


def test_criterion_10_finite_max_temperature():
    spec = PowerLaw(1.2)
    t0 = time.perf_counter()
    ts = find_max_temperature(1.0, spec, CONFIG)
    above = []
    density = zero_state().state.density
    for f in (1.01, 1.2, 1.5, 2.0):
        try:
            res = scf_solve(1.0, f * ts.t_star, spec, CONFIG, density, raise_on_failure=False)
            above.append((f, res.free_energy, res.converged))
        except MassNotAttainable:
            above.append((f, float("nan"), False))
    elapsed = time.perf_counter() - t0
    below = [(T, F) for T, F, status in ts.evaluations if T < ts.t_star]
    bound = tstar_lower_bound(1.0, spec, zero_state().free_energy)
    negative_below = all(F < 0 for _, F in below)
    fail_or_nonneg = all((not conv) or F >= 0 for _, F, conv in above)
    # estimate and bound coincide analytically here; allow the SCF energy tolerance
    ok = (
        np.isfinite(ts.t_star)
        and negative_below
        and fail_or_nonneg
        and ts.t_star >= bound * (1 - 1e-9)
        and elapsed < 20 * 60
    )
    detail = (
        f"T* {ts.t_star:.10f}, lower bound {bound:.10f}; {len(below)} points below all negative: {negative_below}; "
        f"above: " + ", ".join(f"{f}T*: F={F:.2e}" for f, F, _ in above) + f"; {elapsed:.1f} s"
    )
    assert record(10, "finite T* for p=1.2", ok, detail)


def test_criterion_11_scaling_inequality_and_transform():
    t_c = t_c_formula(2)
    report = scaling_check(1.0, 0.5 * t_c, 2.0, 2.0, CONFIG, atol=1e-8)
    mixed = solve_p2(1.5)
    moved = transform_state(mixed.state, 1.5, 1.5 ** (3 - 2) * mixed.state.T)
    F_moved = free_energy(moved).total
    rel_mixed = abs(F_moved - 1.5**3 * mixed.free_energy) / abs(1.5**3 * mixed.free_energy)
    ok = report.holds and report.transform_relative_error <= 1e-6 and rel_mixed <= 1e-6
    detail = (
        f"i(2M,2T) {report.i_scaled:.12f} <= 8 i(M,T) {report.bound:.12f} (slack {report.slack:.1e}); "
        f"transform rel err {report.transform_relative_error:.1e} (pure), {rel_mixed:.1e} (mixed, lambda=1.5)"
    )
    assert record(11, "i(lam M, lam^(3-p) T) <= lam^3 i(M,T)", ok, detail)


def test_criterion_12_subadditivity():
    T = 0.5 * t_c_formula(2)
    parts, ok = [], True
    for m in (0.25, 0.5):
        rep = subadditivity_check(1.0, m, T, PowerLaw(2), CONFIG)
        ok &= rep.holds
        parts.append(f"m={m}: i(1) {rep.i_M:.6f} <= {rep.i_rest + rep.i_m:.6f}, strict gap {rep.gap:.2e}")
        parts.extend(rep.notes)
    assert record(12, "i(1) <= i(1-m) + i(m) at T = T_c/2", ok, "; ".join(parts))


def test_criterion_13_frozen_spectrum_oracle():
    spectrum = zero_state().diagnostics["spectrum"].take(slice(0, 3))
    spec = PowerLaw(2)
    T = 3.0 * t_c_formula(2)
    occ = solve_chemical_potential(spectrum, 1.0, T, spec)
    F_formula = float(frozen_free_energy(occ.lambdas, spectrum.energies, spectrum.degeneracy, T, spec))
    F_grid, lam_grid = brute_force_free_energy(spectrum.energies, 1.0, T, spec, spectrum.degeneracy)
    gap = F_grid - F_formula
    ok = abs(gap) <= 1e-4 and gap >= -1e-12
    detail = (
        f"levels {np.round(spectrum.energies, 5).tolist()} deg {spectrum.degeneracy.tolist()}; "
        f"F formula {F_formula:.10f} grid {F_grid:.10f}; occupations {np.round(occ.lambdas, 5).tolist()} "
        f"vs {np.round(lam_grid, 5).tolist()}"
    )
    assert record(13, "occupation formula vs dense grid search", ok, detail)


def test_criterion_14_tail_bound():
    states = {"p=2 T=0.5T_c": solve_p2(0.5).state, "p=2 T=1.5T_c": solve_p2(1.5).state}
    spec = PowerLaw(1.2)
    T_near = 0.99 * abs(zero_state().free_energy)
    states["p=1.2 T=0.99T*"] = scf_solve(1.0, T_near, spec, CONFIG, zero_state().state.density).state
    radii = np.linspace(CONFIG.r_max / 4, CONFIG.r_max / 2, 50)
    parts, ok = [], True
    for label, state in states.items():
        g = tail_profile(state, radii)
        bounded = bool(np.all(np.isfinite(g)) and np.max(g) <= g[0] * (1 + 1e-9))
        ok &= bounded
        parts.append(f"{label}: max R^2 tail {np.max(g):.2e} (at R=r_max/4 {g[0]:.2e})")
    assert record(14, "R^2 tail(R) bounded on [r_max/4, r_max/2]", ok, "; ".join(parts))


def main() -> int:
    tests = [obj for name, obj in sorted(globals().items()) if name.startswith("test_criterion_")]
    failed = 0
    for test in tests:
        try:
            test()
        except AssertionError:
            failed += 1
    print()
    for key in sorted(REPORT):
        print(REPORT[key])
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
