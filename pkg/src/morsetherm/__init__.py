"""morsetherm: critical-point topology and configurational entropy of
potential energy landscapes.

The package catalogs the critical points of smooth N degree-of-freedom
potentials, computes the geometry of chart neighborhoods around them
(slice integrals, their recursions, and the derived topological
coefficients), estimates configuration-space volumes and microcanonical
quantities by counter-based Monte Carlo, and verifies numerically that
the sub-level volume decomposes into an excised bulk plus the
topological neighborhood terms.
"""

__version__ = "0.1.0"

from . import decompose, errors, measure, morse, neckgeom, potentials, thermo

__all__ = [
    "__version__",
    "decompose",
    "errors",
    "measure",
    "morse",
    "neckgeom",
    "potentials",
    "thermo",
]
