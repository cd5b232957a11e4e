"""Numerical laboratory for space-time resonances of quadratic dispersive PDEs.

Submodules
----------
dispersion   scalar dispersion relations, diagonal systems, Strauss exponent
resonance    interaction phases, resonant sets T/S/R and structural diagnostics
spectral     periodic grids, transforms, pseudo-products and oscillatory operators
solver       profile-form Duhamel integrator and integration-by-parts identities
experiments  desk-scale experiments, reports and the command line interface
"""

from .errors import (
    GridMismatch,
    InvalidParameter,
    OriginSingular,
    ResonanceLabError,
    SolverDiverged,
    UnsupportedMode,
)

__version__ = "0.1.0"

__all__ = [
    "GridMismatch",
    "InvalidParameter",
    "OriginSingular",
    "ResonanceLabError",
    "SolverDiverged",
    "UnsupportedMode",
    "__version__",
]
