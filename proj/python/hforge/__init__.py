"""Python access to the hforge core library."""

from ._hforge import (
    ConvergenceError,
    ParseError,
    PreconditionError,
    Scenario,
    command_names,
    generators,
    holonomy_residuals,
    linear_interpolation_check,
    load_scenario,
    parse_scenario,
    pfaffian,
    run,
    scan_latitudes,
)

__all__ = [
    "ConvergenceError",
    "ParseError",
    "PreconditionError",
    "Scenario",
    "command_names",
    "generators",
    "holonomy_residuals",
    "linear_interpolation_check",
    "load_scenario",
    "parse_scenario",
    "pfaffian",
    "run",
    "scan_latitudes",
]
