"""Public stabilizer-tableau API with 1-based site labels.

Thin wrapper over the selected kernel engine.  Sites are numbered
1..n to match the lattice conventions used everywhere else in the
package; the engines index qubits from 0.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from . import gates, kernels
from .kernels import DeterministicConflictError

__all__ = ["StabilizerTableau", "DeterministicConflictError"]


class StabilizerTableau:
    """Pure stabilizer state of n qubits under Clifford/forced-Bell updates."""

    def __init__(self, n: int, _engine=None):
        self.n = n
        self._eng = _engine if _engine is not None else kernels.new_tableau(n)

    @classmethod
    def new_bell_chain(cls, n: int, bonds: Sequence[tuple[int, int]]) -> "StabilizerTableau":
        """Bell pairs on the given (1-based) site pairs, |0> elsewhere."""
        pairs0 = [(a - 1, b - 1) for a, b in bonds]
        return cls(n, _engine=kernels.tableau_class().bell_chain(n, pairs0))

    def apply_clifford2(self, gate, a: int, b: int) -> "StabilizerTableau":
        """Conjugate the state by a two-site Clifford on sites (a, b).

        The gate may be a gates.TwoQubitClifford, a raw 4x4 matrix, or a
        prebuilt (images, signs) table pair.  The gate's first tensor
        factor acts on site a.
        """
        if isinstance(gate, gates.TwoQubitClifford):
            images, signs = gate.images, gate.signs
        elif isinstance(gate, tuple):
            images, signs = gate
        else:
            images, signs = gates.conjugation_table(np.asarray(gate))
        self._eng.apply_table(a - 1, b - 1, images, signs)
        return self

    def forced_bell_measurement(self, a: int, b: int) -> "StabilizerTableau":
        """Project sites (a, b) onto the Bell pair (forced XX=+1, ZZ=+1)."""
        self._eng.forced_bell(a - 1, b - 1)
        return self

    def prefix_cut_entropies(self, site_order: Sequence[int] | None = None) -> dict[int, int]:
        """Entropies of all prefix cuts of site_order (default natural order).

        Returns {t_i: S} for 1 <= t_i <= n-1, where the prefix holds the
        first t_i sites of site_order and S is in bits.
        """
        if site_order is None:
            ent = self._eng.prefix_entropies()
        else:
            order = list(site_order)
            if sorted(order) != list(range(1, self.n + 1)):
                raise ValueError("site_order must be a permutation of 1..n")
            eng = self._eng.copy()
            perm = np.array([s - 1 for s in order], dtype=np.intp)
            eng.permute_qubits(perm)
            ent = eng.prefix_entropies()
        return {t_i: int(ent[t_i - 1]) for t_i in range(1, self.n)}

    def validate(self):
        self._eng.validate()
        return self

    def stabilizer_bits(self):
        return self._eng.stabilizer_bits()
