import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermal_hartree.cli import main
from thermal_hartree.io import (
    SCAN_HEADER,
    ParseError,
    RunConfig,
    ValidationError,
    dumps,
    parse_config,
    read_scan_csv,
    serialize_config,
    solve_payload,
    write_scan_csv,
)
from thermal_hartree.oracle import read_reference_file
from thermal_hartree.phase import ScanPoint, ScanResult

SMALL_ARGS = ["--r-max", "40", "--n-points", "800"]

EXAMPLE = """
# unit mass at half the critical temperature
command = solve
mass = 1.0
temperature = 0.008   # trailing comment
entropy = power:2
r_max = 40
n_points = 800
warm_start = no
"""


def test_parse_example():
    cfg = parse_config(EXAMPLE)
    assert cfg.command == "solve" and cfg.temperature == 0.008
    assert cfg.r_max == 40.0 and cfg.n_points == 800 and cfg.warm_start is False
    assert cfg.scf_config().grid.n_points == 800


def test_overrides_win_unless_none():
    cfg = parse_config(EXAMPLE, {"mass": 2.0, "temperature": None})
    assert cfg.mass == 2.0 and cfg.temperature == 0.008


@pytest.mark.parametrize(
    "text, line",
    [
        ("mass = 1\nfoo = 2\n", 2),
        ("mass = 1\nmass = 2\n", 2),
        ("just words\n", 1),
        ("\n\npoints = many\n", 3),
        ("warm_start = maybe\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as err:
        parse_config(text)
    assert err.value.line == line


@pytest.mark.parametrize(
    "text, field",
    [
        ("mass = -1", "mass"),
        ("mass = nan", "mass"),
        ("mixing = 0", "mixing"),
        ("n_points = 3", "n_points"),
        ("entropy = power:0.5", "entropy"),
        ("command = dance", "command"),
        ("t_min = 0.2\nt_max = 0.1", "t_max"),
        ("temperature = -0.1", "temperature"),
    ],
)
def test_validation_names_the_field(text, field):
    with pytest.raises(ValidationError) as err:
        parse_config(text)
    assert err.value.field == field


@settings(max_examples=50, deadline=None)
@given(
    mass=st.floats(1e-3, 1e3),
    temperature=st.one_of(st.none(), st.floats(0, 1)),
    points=st.integers(1, 200),
    p=st.floats(1.01, 3.0),
    warm=st.booleans(),
)
def test_config_round_trip(mass, temperature, points, p, warm):
    cfg = RunConfig(mass=mass, temperature=temperature, points=points, entropy=f"power:{p!r}", warm_start=warm)
    assert parse_config(serialize_config(cfg)) == cfg


def test_dumps_formatting():
    text = dumps({"a": 0.1, "b": float("nan"), "c": [1, np.float64(1 / 3)], "d": None, "e": True})
    data = json.loads(text)
    assert data["a"] == 0.1 and data["b"] is None and data["d"] is None and data["e"] is True
    assert data["c"][1] == 1 / 3


def test_solve_payload_fields(zero_small):
    payload = solve_payload(zero_small, "power:2")
    for key in ("free_energy", "e_kin", "e_pot", "mu", "rank", "converged", "occupations", "grid"):
        assert key in payload
    assert payload["rank"] == 1
    assert len(payload["occupations"]) == 1 and payload["occupations"][0]["lambda"] == 1.0
    # bytes are reproducible
    assert dumps(payload) == dumps(solve_payload(zero_small, "power:2"))
    json.loads(dumps(payload))


def test_scan_csv_round_trip(tmp_path):
    pts = [ScanPoint(0.01 * k, -0.02 + 0.001 * k, 0.1, 0.2, 1.0, -0.05, 1, 0.0, True) for k in (1, 2, 3)]
    pts.append(ScanPoint.failed(0.5, RuntimeError("boom")))
    scan = ScanResult(1.0, "power:2", pts, t_c_scan=0.015, t_c_formula=1 / 60, t_star=None)
    path = tmp_path / "scan.csv"
    write_scan_csv(scan, path)
    assert path.read_text().splitlines()[0] == ",".join(SCAN_HEADER)
    rows, summary = read_scan_csv(path)
    assert len(rows) == 4
    assert float(rows[1]["free_energy"]) == pts[1].free_energy
    assert rows[3]["converged"] == "false" and math.isnan(float(rows[3]["free_energy"]))
    assert summary == {"t_c_scan": 0.015, "t_c_formula": 1 / 60, "t_star": None}
    with pytest.raises(ValueError):
        write_scan_csv(ScanResult(1.0, "power:2"), path)


def test_cli_solve_writes_json(tmp_path, tc_small):
    out = tmp_path / "solve.json"
    code = main(["solve", "--temperature", repr(1.5 * tc_small), *SMALL_ARGS, "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["converged"] and data["rank"] > 1 and data["mu"] < 0
    assert sum(o["degeneracy"] * o["lambda"] for o in data["occupations"]) == pytest.approx(1.0)


def test_cli_solve_zero_and_zero_temperature_agree(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve-zero", *SMALL_ARGS, "--out", str(a)]) == 0
    assert main(["solve", "--temperature", "0", *SMALL_ARGS, "--out", str(b)]) == 0
    assert json.loads(a.read_text())["free_energy"] == json.loads(b.read_text())["free_energy"]


def test_cli_config_errors(tmp_path, capsys):
    assert main(["solve", "--mass", "-1", "--temperature", "0.01"]) == 2
    bad = tmp_path / "bad.conf"
    bad.write_text("mass = 1\ncolour = red\n")
    assert main(["solve", "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.conf")]) == 2
    # solve without a temperature
    assert main(["solve", *SMALL_ARGS]) == 2


def test_cli_nonconvergence_exit_code(tmp_path, tc_small):
    conf = tmp_path / "short.conf"
    conf.write_text("max_iterations = 2\n")
    out = tmp_path / "x.json"
    code = main(["solve", "--config", str(conf), "--temperature", repr(tc_small), *SMALL_ARGS, "--out", str(out)])
    assert code == 3
    assert json.loads(out.read_text())["converged"] is False


def test_cli_mass_not_attainable():
    assert main(["solve", "--temperature", "0.2", *SMALL_ARGS]) == 4


def test_cli_scan(tmp_path, tc_small):
    out = tmp_path / "scan.csv"
    args = ["scan", "--t-min", repr(0.5 * tc_small), "--t-max", repr(1.5 * tc_small), "--points", "3"]
    assert main([*args, *SMALL_ARGS, "--out", str(out)]) == 0
    rows, summary = read_scan_csv(out)
    assert [int(r["rank"]) for r in rows][0] == 1 and int(rows[-1]["rank"]) > 1
    assert summary["t_c_formula"] == pytest.approx(tc_small, rel=1e-6)
    assert tc_small * 0.5 < summary["t_c_scan"] < tc_small * 1.5


def test_cli_oracle(tmp_path):
    out = tmp_path / "ref.txt"
    assert main(["oracle", *SMALL_ARGS, "--out", str(out)]) == 0
    ref = read_reference_file(out)
    assert (ref.r_max, ref.n_points) == (40.0, 800)
    assert ref.mu0_0 < ref.mu0_1 < 0


def test_cli_verify(tmp_path):
    out = tmp_path / "verify.txt"
    assert main(["verify", *SMALL_ARGS, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 5 and all(line.startswith("PASS") for line in lines)
