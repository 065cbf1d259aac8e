"""Temporal-entanglement barriers of monitored dual-unitary Clifford circuits.

Stabilizer Monte Carlo for the space-time-rotated influence state, exact
transfer-operator spectra for the measurement-averaged dynamics, and
closed-form barrier predictors, with a compiled kernel core and a pure
numpy fallback.
"""

from . import analytics, gates, hopping, sim, tableau, transfer
from .kernels import backend_name

__version__ = "0.1.0"

__all__ = [
    "analytics",
    "gates",
    "hopping",
    "sim",
    "tableau",
    "transfer",
    "backend_name",
    "__version__",
]
