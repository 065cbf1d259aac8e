"""Reference stabilizer-tableau engine in plain numpy.

Rows 0..n-1 hold destabilizers, rows n..2n-1 the stabilizer generators.
Bits are kept unpacked as uint8 matrices so every update is a short
vectorized expression over rows; the compiled engine packs the same data
into machine words.  Sign convention: a row with bits (x, z) and sign bit
r represents (-1)^r times the Pauli with literal Y on x=z=1 sites.
"""

from __future__ import annotations

import numpy as np


class DeterministicConflictError(RuntimeError):
    """A forced +1 measurement hit an operator stabilized with sign -1.

    Projection would annihilate the state.  The monitored-circuit
    protocol never produces this situation, so seeing it means the
    caller wired up the wrong projector.
    """


class PyTableau:
    """Aaronson-Gottesman tableau over n qubits, numpy uint8 storage."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1          # destabilizer i = X_i
        self.z[n + idx, idx] = 1      # stabilizer i = Z_i

    @classmethod
    def bell_chain(cls, n: int, pairs: list[tuple[int, int]]) -> "PyTableau":
        """State with Bell pairs on the given 0-based qubit pairs.

        Unpaired qubits start in |0>.  For a pair (a, b) the stabilizer
        rows at a and b become X_aX_b and Z_aZ_b; the matching
        destabilizers are Z_a and X_b.
        """
        tab = cls(n)
        used = np.zeros(n, dtype=bool)
        for a, b in pairs:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ValueError(f"bad pair ({a}, {b})")
            if used[a] or used[b]:
                raise ValueError(f"overlapping pair ({a}, {b})")
            used[a] = used[b] = True
            for row in (a, b, tab.n + a, tab.n + b):
                tab.x[row, :] = 0
                tab.z[row, :] = 0
            tab.x[tab.n + a, a] = tab.x[tab.n + a, b] = 1   # X_a X_b
            tab.z[tab.n + b, a] = tab.z[tab.n + b, b] = 1   # Z_a Z_b
            tab.z[a, a] = 1                                  # destab Z_a
            tab.x[b, b] = 1                                  # destab X_b
        return tab

    def copy(self) -> "PyTableau":
        out = object.__new__(PyTableau)
        out.n = self.n
        out.x = self.x.copy()
        out.z = self.z.copy()
        out.r = self.r.copy()
        return out

    # -- Clifford application ------------------------------------------------

    def apply_table(self, a: int, b: int, images: np.ndarray, signs: np.ndarray):
        """Conjugate every row by a two-site Clifford given as a code table.

        images/signs are the length-16 arrays from
        gates.conjugation_table; codes pack as x_a + 2 z_a + 4 x_b + 8 z_b.
        """
        xa, za = self.x[:, a], self.z[:, a]
        xb, zb = self.x[:, b], self.z[:, b]
        codes = xa | (za << 1) | (xb << 2) | (zb << 3)
        img = images[codes]
        self.r ^= signs[codes]
        self.x[:, a] = img & 1
        self.z[:, a] = (img >> 1) & 1
        self.x[:, b] = (img >> 2) & 1
        self.z[:, b] = (img >> 3) & 1

    # -- measurement ---------------------------------------------------------

    def _rowsum_into_many(self, targets: np.ndarray, src: int):
        """row_t <- row_t * row_src for each t in targets, with phase."""
        x1, z1 = self.x[src], self.z[src]
        x2, z2 = self.x[targets], self.z[targets]
        xo1, yo1, zo1 = x1 & (z1 ^ 1), x1 & z1, (x1 ^ 1) & z1
        xo2, yo2, zo2 = x2 & (z2 ^ 1), x2 & z2, (x2 ^ 1) & z2
        plus = (yo1 & zo2) | (xo1 & yo2) | (zo1 & xo2)
        minus = (yo1 & xo2) | (xo1 & zo2) | (zo1 & yo2)
        g = plus.sum(axis=1).astype(np.int64) - minus.sum(axis=1).astype(np.int64)
        phase = (2 * self.r[targets].astype(np.int64) + 2 * int(self.r[src]) + g) % 4
        if np.any(phase & 1):
            raise AssertionError("odd phase in rowsum; sign bookkeeping broken")
        self.r[targets] = (phase >> 1).astype(np.uint8)
        self.x[targets] ^= x1
        self.z[targets] ^= z1

    def _rowsum_scratch(self, sx, sz, sr: int, src: int) -> int:
        x1, z1 = self.x[src], self.z[src]
        xo1, yo1, zo1 = x1 & (z1 ^ 1), x1 & z1, (x1 ^ 1) & z1
        xo2, yo2, zo2 = sx & (sz ^ 1), sx & sz, (sx ^ 1) & sz
        g = int(((yo1 & zo2) | (xo1 & yo2) | (zo1 & xo2)).sum()) - int(
            ((yo1 & xo2) | (xo1 & zo2) | (zo1 & yo2)).sum()
        )
        phase = (2 * sr + 2 * int(self.r[src]) + g) % 4
        if phase & 1:
            raise AssertionError("odd phase in rowsum; sign bookkeeping broken")
        sx ^= x1
        sz ^= z1
        return phase >> 1

    def forced_pauli2(self, a: int, b: int, xza: tuple[int, int], xzb: tuple[int, int]):
        """Measure a two-site Pauli with the outcome forced to +1.

        (xza, xzb) are the (x, z) bits on sites a and b.  Raises
        DeterministicConflictError when the state stabilizes the operator
        with sign -1.
        """
        n = self.n
        xa_p, za_p = xza
        xb_p, zb_p = xzb
        anti = np.zeros(2 * n, dtype=np.uint8)
        if za_p:
            anti ^= self.x[:, a]
        if xa_p:
            anti ^= self.z[:, a]
        if zb_p:
            anti ^= self.x[:, b]
        if xb_p:
            anti ^= self.z[:, b]
        stab_hits = np.nonzero(anti[n:])[0]
        if stab_hits.size:
            p = n + int(stab_hits[0])
            targets = np.nonzero(anti)[0]
            # skip the pivot and its paired destabilizer: the latter is
            # overwritten below, and its product with the pivot would carry
            # an imaginary phase (they anticommute by construction)
            targets = targets[(targets != p) & (targets != p - n)]
            if targets.size:
                self._rowsum_into_many(targets, p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.x[p, a], self.z[p, a] = xa_p, za_p
            self.x[p, b], self.z[p, b] = xb_p, zb_p
            self.r[p] = 0
            return
        # Determinate outcome: the operator is in +-(stabilizer group).
        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        sr = 0
        for i in np.nonzero(anti[:n])[0]:
            sr = self._rowsum_scratch(sx, sz, sr, n + int(i))
        want_x = np.zeros(n, dtype=np.uint8)
        want_z = np.zeros(n, dtype=np.uint8)
        want_x[a], want_z[a] = xa_p, za_p
        want_x[b], want_z[b] = xb_p, zb_p
        if not (np.array_equal(sx, want_x) and np.array_equal(sz, want_z)):
            raise AssertionError("destabilizer accumulation missed the target Pauli")
        if sr:
            raise DeterministicConflictError(
                f"forced +1 on qubits ({a}, {b}) but the state stabilizes the "
                f"operator with sign -1"
            )

    def forced_bell(self, a: int, b: int):
        """Project qubits (a, b) onto the Bell pair: force XX=+1 then ZZ=+1."""
        self.forced_pauli2(a, b, (1, 0), (1, 0))
        self.forced_pauli2(a, b, (0, 1), (0, 1))

    def permute_qubits(self, perm: np.ndarray):
        """Reorder qubit columns so new column j is old column perm[j]."""
        self.x = np.ascontiguousarray(self.x[:, perm])
        self.z = np.ascontiguousarray(self.z[:, perm])

    # -- entropies -----------------------------------------------------------

    def prefix_entropies(self) -> np.ndarray:
        """Entanglement entropy (bits) of every prefix cut, one GF(2) sweep.

        Entry c-1 is the entropy of the first c qubits in the current
        qubit order, equal to the rank of the stabilizer matrix restricted
        to those columns minus c.
        """
        n = self.n
        m = np.empty((n, 2 * n), dtype=np.uint8)
        m[:, 0::2] = self.x[n:]
        m[:, 1::2] = self.z[n:]
        is_pivot = np.zeros(n, dtype=bool)
        rank = 0
        ent = np.empty(n, dtype=np.int64)
        for q in range(n):
            for col in (2 * q, 2 * q + 1):
                cand = (m[:, col] == 1) & ~is_pivot
                hits = np.nonzero(cand)[0]
                if hits.size == 0:
                    continue
                p = int(hits[0])
                is_pivot[p] = True
                rank += 1
                elim = m[:, col] == 1
                elim[p] = False
                if elim.any():
                    m[elim] ^= m[p]
            ent[q] = rank - (q + 1)
        return ent

    # -- validation helpers (tests and debugging) ----------------------------

    def validate(self):
        """Check symplectic pairing of the full tableau; raises on breakage."""
        n = self.n
        xz = np.concatenate([self.x, self.z], axis=1).astype(np.uint8)
        zx = np.concatenate([self.z, self.x], axis=1).astype(np.uint8)
        gram = (xz @ zx.T) & 1
        want = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        want[:n, n:] = np.eye(n, dtype=np.uint8)
        want[n:, :n] = np.eye(n, dtype=np.uint8)
        if not np.array_equal(gram, want):
            raise AssertionError("tableau lost symplectic pairing")

    def stabilizer_bits(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return self.x[n:].copy(), self.z[n:].copy(), self.r[n:].copy()
