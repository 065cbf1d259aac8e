"""Shared test fixtures: a dense statevector oracle for small systems.

The oracle is deliberately independent of the tableau engines: states
are full complex vectors, gates act by tensor contraction, forced Bell
measurements act by projection and renormalization, and entropies come
from singular values.  Anything the stabilizer code computes on <= 12
qubits can be cross-checked here.
"""

from __future__ import annotations

import numpy as np
import pytest

from tempent import gates


class StatevectorOracle:
    def __init__(self, n: int):
        if n > 14:
            raise ValueError("oracle is for small systems only")
        self.n = n
        psi = np.zeros((2,) * n, dtype=complex)
        psi[(0,) * n] = 1.0
        self.psi = psi

    @classmethod
    def bell_chain(cls, n: int, pairs0) -> "StatevectorOracle":
        o = cls(n)
        for a, b in pairs0:
            o.apply_one(gates.H, a)
            o.apply_two(gates.CNOT, a, b)
        return o

    def apply_one(self, u: np.ndarray, a: int):
        t = np.tensordot(u, self.psi, axes=[[1], [a]])
        self.psi = np.moveaxis(t, 0, a)

    def apply_two(self, u: np.ndarray, a: int, b: int):
        """Apply a 4x4 matrix, first tensor factor on qubit a."""
        t = np.tensordot(
            np.asarray(u, dtype=complex).reshape(2, 2, 2, 2),
            self.psi,
            axes=[[2, 3], [a, b]],
        )
        self.psi = np.moveaxis(t, [0, 1], [a, b])

    def forced_bell(self, a: int, b: int):
        """Project onto the Bell pair on (a, b); raises if amplitude is 0.

        Transactional: the state is only replaced if both projections
        survive, so a caller that skips on failure stays in sync.
        """
        psi = self.psi
        for p in (np.kron(gates.X, gates.X), np.kron(gates.Z, gates.Z)):
            proj = psi.copy()
            t = np.tensordot(p.reshape(2, 2, 2, 2), psi, axes=[[2, 3], [a, b]])
            proj += np.moveaxis(t, [0, 1], [a, b])
            proj *= 0.5
            norm = np.linalg.norm(proj)
            if norm < 1e-9:
                raise RuntimeError("forced Bell projection annihilated the state")
            psi = proj / norm
        self.psi = psi

    def prefix_entropy(self, c: int) -> float:
        """Von Neumann entropy (bits) of the first c qubits."""
        m = self.psi.reshape(2**c, -1)
        s2 = np.linalg.svd(m, compute_uv=False) ** 2
        s2 = s2[s2 > 1e-12]
        return float(-(s2 * np.log2(s2)).sum())

    def prefix_entropies_int(self) -> np.ndarray:
        """Integer entropies for every prefix; asserts near-integrality."""
        out = np.empty(self.n, dtype=np.int64)
        for c in range(1, self.n + 1):
            s = self.prefix_entropy(c) if c < self.n else 0.0
            r = round(s)
            assert abs(s - r) < 1e-7, f"non-integer entropy {s} at prefix {c}"
            out[c - 1] = r
        return out


@pytest.fixture
def oracle_cls():
    return StatevectorOracle


def oracle_influence_trajectory(cfg, traj_index: int = 0) -> np.ndarray:
    """Replay run_trajectory's exact op stream on the statevector oracle.

    Returns the per-cut entropies at the recorded steps, rounded to
    integers.  Only workable for small T (the folded chain plus the
    trace site is 2(T+1) qubits).
    """
    from tempent import sim

    T = cfg.T
    n = 2 * (T + 1)
    pairs = []
    for k in range(1, T, 2):
        a, b = 2 * (k - 1), 2 * k
        pairs.append((a, b))
        pairs.append((a + 1, b + 1))
    pairs.append((2 * T, 2 * T + 1))
    orc = StatevectorOracle.bell_chain(n, pairs)
    steps = set(int(s) for s in cfg.recorded_steps())
    rec = []

    def record():
        rec.append([orc.prefix_entropy(2 * c) for c in range(1, T)])

    if 1 in steps:
        record()
    for ell in range(1, cfg.L_max):
        bonds = sim.column_bonds(T, ell)
        flags, draws = sim._draw_column(cfg, traj_index, ell, bonds.size)
        for i, t in enumerate(bonds):
            if flags[i]:
                continue
            fa, fb = 2 * t, 2 * (t - 1)
            ba, bb = 2 * t + 1, 2 * t - 1
            if cfg.family == "identity":
                orc.forced_bell(fa, fb)
                orc.forced_bell(ba, bb)
                continue
            if cfg.family == "sdki-r":
                m = gates.sdki_r_from_indices(*(int(d) for d in draws[i]))
            elif cfg.family == "random-du":
                m = gates.random_du_from_indices(*(int(d) for d in draws[i]))
            else:
                m = gates.family_matrix(cfg.family)
            rot = gates.spacetime_rotate(m)
            orc.apply_two(rot, fa, fb)
            orc.apply_two(rot.conj(), ba, bb)
        if ell % 2 == 1:
            orc.forced_bell(2 * T, 2 * T + 1)
        if ell + 1 in steps:
            record()
    return np.rint(np.array(rec)).astype(np.int64)


def random_clifford_drive(tab, oracle, rng, n_steps: int = 30):
    """Drive a tableau and the oracle with the same random Clifford ops."""
    n = tab.n
    one_q = [("H", gates.H), ("S", gates.S)]
    two_q = [
        ("CZ", gates.CZ),
        ("CNOT", gates.CNOT),
        ("SWAP", gates.SWAP),
        ("ISWAP", gates.ISWAP),
        ("SDKI_F", gates.SDKI_F),
        ("SDKI_S", gates.SDKI_S),
    ]
    for _ in range(n_steps):
        kind = rng.integers(3)
        if kind == 0:
            _, u = one_q[rng.integers(len(one_q))]
            a = int(rng.integers(n))
            m = np.kron(u, gates.I2)
            b = int((a + 1) % n)
            img, sg = gates.conjugation_table(m)
            tab.apply_table(a, b, img, sg)
            oracle.apply_two(m, a, b)
        elif kind == 1:
            _, u = two_q[rng.integers(len(two_q))]
            a, b = rng.choice(n, size=2, replace=False)
            img, sg = gates.conjugation_table(u)
            tab.apply_table(int(a), int(b), img, sg)
            oracle.apply_two(u, int(a), int(b))
        else:
            a, b = rng.choice(n, size=2, replace=False)
            try:
                oracle.forced_bell(int(a), int(b))
            except RuntimeError:
                continue
            tab.forced_bell(int(a), int(b))
