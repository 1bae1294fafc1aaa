"""Density-to-potential inversion on a 1D lattice.

Thin wrapper over the C++ core. Reports and diagnostics come back as dicts.
"""

import json

from ._core import (
    ConfigError,
    Grid,
    NumericalError,
    build_grid,
    config_hash,
    divergence,
    evaluate,
    gradient,
    ground_state_density,
    poincare_constant,
    run_config_file,
    version,
)
from . import _core

__version__ = version()


def solve_sturm(grid, n, zeta, tol=1e-10, floor=1e-8):
    """Solve div(n grad v) = zeta with v = 0 on the walls. Returns (v, diagnostics)."""
    v, diag = _core.solve_sturm(grid, n, zeta, tol, floor)
    return v, json.loads(diag)


def validate(text):
    """Parse a config (JSON text) and return the effective document."""
    return json.loads(_core.validate_text(text))


def run(config, seed=None):
    """Run the experiment described by a config dict or JSON text; returns the report."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_core.run_text(text, seed))


__all__ = [
    "ConfigError",
    "Grid",
    "NumericalError",
    "build_grid",
    "config_hash",
    "divergence",
    "evaluate",
    "gradient",
    "ground_state_density",
    "poincare_constant",
    "run",
    "run_config_file",
    "solve_sturm",
    "validate",
    "version",
]
