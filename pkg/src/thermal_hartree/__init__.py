"""Free-energy minimisers of the thermal gravitational Hartree model.

The state of mass ``M`` at temperature ``T`` minimises

    F_T[ρ] = tr(-Δρ) - ½ ∬ n(x) n(y)/|x-y| dx dy + T tr β(ρ)

over radially symmetric density operators. The package provides the radial
discretisation, a self-consistent field solver, temperature sweeps for the
critical and maximal temperatures, and an independent reference oracle.
"""

from .entropy import Custom, PowerLaw, parse_entropy
from .errors import (
    MassNotAttainable,
    NoRootFound,
    NotConverged,
    ThermalHartreeError,
)
from .grid import RadialField, RadialGrid, make_grid
from .phase import (
    find_critical_temperature,
    find_max_temperature,
    scaling_check,
    subadditivity_check,
    temperature_scan,
)
from .scf import SCFConfig, SolveResult, scf_solve, zero_temperature_solve

__version__ = "0.1.0"

__all__ = [
    "Custom",
    "PowerLaw",
    "parse_entropy",
    "MassNotAttainable",
    "NoRootFound",
    "NotConverged",
    "ThermalHartreeError",
    "RadialField",
    "RadialGrid",
    "make_grid",
    "SCFConfig",
    "SolveResult",
    "scf_solve",
    "zero_temperature_solve",
    "temperature_scan",
    "find_critical_temperature",
    "find_max_temperature",
    "scaling_check",
    "subadditivity_check",
]
