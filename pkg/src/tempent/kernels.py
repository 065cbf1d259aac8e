"""Engine selection: compiled tableau core with pure-Python fallback.

The compiled extension (tempent._kernels_cy) packs tableau rows into
uint64 words and runs the hot loops in C.  When it is missing, or when
TEMPENT_FORCE_PY is set to a non-empty value, the numpy reference engine
is used instead.  Both expose the same methods and are interchangeable
in every consumer; the benchmark suite compares them head to head.
"""

from __future__ import annotations

import os

from ._kernels_py import DeterministicConflictError, PyTableau

try:
    from ._kernels_cy import CyTableau
except ImportError:
    CyTableau = None


def backend_name() -> str:
    if os.environ.get("TEMPENT_FORCE_PY"):
        return "python"
    return "compiled" if CyTableau is not None else "python"


def tableau_class():
    return PyTableau if backend_name() == "python" else CyTableau


def new_tableau(n: int):
    return tableau_class()(n)


def new_bell_chain(n: int, pairs):
    return tableau_class().bell_chain(n, pairs)


__all__ = [
    "DeterministicConflictError",
    "PyTableau",
    "CyTableau",
    "backend_name",
    "tableau_class",
    "new_tableau",
    "new_bell_chain",
]
