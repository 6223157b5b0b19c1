"""Particle laboratory for a planar stochastic system with singular pairwise
attraction: seeded simulation, diagnostics, persistence, and the squared
Bessel reference oracle.

The compiled extension does the work; this package just re-exports it.
"""

from ._kslab import (
    bessel_path,
    diagnostics,
    dimension_table,
    min_population,
    run,
    simulate,
    verify,
    version,
    zero_hitting_fraction,
)

__version__ = version
__all__ = [
    "bessel_path",
    "diagnostics",
    "dimension_table",
    "min_population",
    "run",
    "simulate",
    "verify",
    "zero_hitting_fraction",
]
