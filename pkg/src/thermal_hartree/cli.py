"""``thermal-hartree`` command line entry point.

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 solver did not converge, 4 mass not attainable with a negative multiplier.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .entropy import parse_entropy
from .errors import MassNotAttainable, NoRootFound, NotConverged
from .io import COMMANDS, ParseError, ValidationError, dumps, parse_config, scan_csv_text, solve_payload
from .oracle import rank1_descent, reference_values, write_reference_file
from .phase import (
    critical_temperature_formula,
    find_critical_temperature,
    find_max_temperature,
    temperature_scan,
    tstar_lower_bound,
)
from .scf import scf_solve, zero_temperature_solve

log = logging.getLogger("thermal_hartree")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_MASS = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermal-hartree", description="Thermal gravitational Hartree solver")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--mass", type=float)
    parser.add_argument("--temperature", type=float)
    parser.add_argument("--t-min", type=float)
    parser.add_argument("--t-max", type=float)
    parser.add_argument("--points", type=int)
    parser.add_argument("--entropy", help="power:<p> or custom:<path>")
    parser.add_argument("--r-max", type=float)
    parser.add_argument("--n-points", type=int)
    parser.add_argument("--out", help="output file (stdout when omitted)")
    parser.add_argument("--parallel", type=int, help="worker processes for cold-start scans")
    parser.add_argument("--cold-start", action="store_true", help="solve scan points independently")
    parser.add_argument("--reference", help="reference fixture for verify")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_config(args):
    text = Path(args.config).read_text() if args.config else ""
    overrides = {
        "command": args.command,
        "mass": args.mass,
        "temperature": args.temperature,
        "t_min": args.t_min,
        "t_max": args.t_max,
        "points": args.points,
        "entropy": args.entropy,
        "r_max": args.r_max,
        "n_points": args.n_points,
        "out": args.out,
        "parallel": args.parallel,
        "reference": args.reference,
    }
    if args.cold_start:
        overrides["warm_start"] = False
    return parse_config(text, overrides)


def _solve(cfg) -> int:
    spec = parse_entropy(cfg.entropy)
    if cfg.temperature is None:
        raise ValidationError("temperature", "solve needs a temperature")
    if cfg.temperature == 0:
        result = zero_temperature_solve(cfg.mass, cfg.scf_config(), raise_on_failure=False)
    else:
        result = scf_solve(cfg.mass, cfg.temperature, spec, cfg.scf_config(), raise_on_failure=False)
    _emit(dumps(solve_payload(result, cfg.entropy)) + "\n", cfg.out)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _solve_zero(cfg) -> int:
    result = zero_temperature_solve(cfg.mass, cfg.scf_config(), raise_on_failure=False)
    _emit(dumps(solve_payload(result, cfg.entropy)) + "\n", cfg.out)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _scan_t_star(scan) -> float | None:
    """Secant root through the two hottest negative points, if a later point is not negative."""
    F = scan.free_energies
    ok = np.array([p.converged for p in scan.points])
    neg = np.flatnonzero(ok & (F < 0))
    if len(neg) < 2 or neg[-1] == len(F) - 1:
        return None
    (T1, F1), (T2, F2) = [(scan.points[k].T, F[k]) for k in neg[-2:]]
    return float(T2 - F2 * (T2 - T1) / (F2 - F1))


def _scan(cfg) -> int:
    spec = parse_entropy(cfg.entropy)
    config = cfg.scf_config()
    scan = temperature_scan(cfg.mass, spec, cfg.temperatures(), config, cfg.warm_start, cfg.parallel)
    zero = zero_temperature_solve(cfg.mass, config, raise_on_failure=False)
    if zero.converged:
        scan.t_c_formula = critical_temperature_formula(cfg.mass, spec, zero)
    ranks = scan.ranks
    for k in range(1, len(scan)):
        if ranks[k - 1] == 1 and ranks[k] > 1:
            scan.t_c_scan = 0.5 * (scan.points[k - 1].T + scan.points[k].T)
            break
    scan.t_star = _scan_t_star(scan)
    _emit(scan_csv_text(scan), cfg.out)
    return EXIT_OK if all(p.converged for p in scan.points) else EXIT_NOT_CONVERGED


def _find_tc(cfg) -> int:
    spec = parse_entropy(cfg.entropy)
    tc = find_critical_temperature(cfg.mass, spec, cfg.scf_config())
    payload = {
        "mass": cfg.mass,
        "entropy": cfg.entropy,
        "t_c_scan": tc.t_c_scan,
        "t_c_formula": tc.t_c_formula,
        "relative_difference": tc.relative_difference,
        "bracket": list(tc.bracket),
    }
    _emit(dumps(payload) + "\n", cfg.out)
    return EXIT_OK


def _find_tstar(cfg) -> int:
    spec = parse_entropy(cfg.entropy)
    payload = {"mass": cfg.mass, "entropy": cfg.entropy}
    try:
        ts = find_max_temperature(cfg.mass, spec, cfg.scf_config())
    except NoRootFound as exc:
        payload.update({"t_star": None, "note": str(exc)})
    else:
        i_10 = ts.i_0 / cfg.mass**3
        payload.update(
            {
                "t_star": ts.t_star,
                "bracket": list(ts.bracket),
                "lower_bound": tstar_lower_bound(cfg.mass, spec, i_10),
                "evaluations": [{"T": T, "free_energy": F, "status": s} for T, F, s in ts.evaluations],
            }
        )
    _emit(dumps(payload) + "\n", cfg.out)
    return EXIT_OK


def _oracle(cfg) -> int:
    config = cfg.scf_config()
    descent = rank1_descent(1.0, config.grid)
    values = reference_values(config.grid, descent)
    if cfg.out is None:
        sys.stdout.write("".join(f"{k} = {v!r}\n" for k, v in values.as_dict().items()))
    else:
        write_reference_file(values, cfg.out)
    return EXIT_OK


def _verify(cfg) -> int:
    from .verify import run_checks

    lines, ok = run_checks(cfg)
    _emit("".join(line + "\n" for line in lines), cfg.out)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


_HANDLERS = {
    "solve": _solve,
    "solve-zero": _solve_zero,
    "scan": _scan,
    "find-tc": _find_tc,
    "find-tstar": _find_tstar,
    "verify": _verify,
    "oracle": _oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _HANDLERS[cfg.command](cfg)
    except ValidationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MassNotAttainable as exc:
        print(f"mass not attainable: {exc}", file=sys.stderr)
        return EXIT_MASS
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
