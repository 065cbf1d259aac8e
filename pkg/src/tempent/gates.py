"""Two-qubit Clifford gate zoo, space-time rotation, and random-gate samplers.

Every gate used by the simulator lives here as an explicit 4x4 complex
matrix together with its Pauli conjugation table.  The matrix is the
source of truth (rotation and property checks need it); the table is the
fast path consumed by the stabilizer tableau.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-12
CLIFFORD_ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)

CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
# exp[-i pi/4 (XX + YY)]: identity on the even-parity block, -i*flip on the
# odd-parity block.
ISWAP = np.array(
    [[1, 0, 0, 0], [0, 0, -1j, 0], [0, -1j, 0, 0], [0, 0, 0, 1]], dtype=complex
)

SDKI_F = CZ @ np.kron(H, H) @ CZ
SDKI_S = np.kron(S, I2) @ SDKI_F @ np.kron(S, I2)
SDKI_H = np.kron(H, I2) @ SDKI_F @ np.kron(H, I2)

# Single-site Paulis indexed by the (x, z) bit pair, with (1,1) the literal Y.
_PAULI_1Q = {(0, 0): I2, (1, 0): X, (0, 1): Z, (1, 1): Y}
_PAULI_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_LETTER_BITS = {v: k for k, v in _PAULI_LETTER.items()}


class NotCliffordError(ValueError):
    """Conjugation by the matrix does not map Paulis to signed Paulis."""


def spacetime_rotate(matrix: np.ndarray) -> np.ndarray:
    """Exchange the roles of the two lattice axes of a two-site gate.

    With matrix elements written U[(a,b),(c,d)], the rotated gate has
    elements Urot[(b,d),(a,c)] = U[(a,b),(c,d)].  The result need not be
    unitary; that is exactly the dual-unitarity question.
    """
    t = np.asarray(matrix, dtype=complex).reshape(2, 2, 2, 2)
    return np.transpose(t, (1, 3, 0, 2)).reshape(4, 4)


def is_unitary(matrix: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(matrix, dtype=complex)
    return bool(np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=atol))


def is_dual_unitary(matrix: np.ndarray, atol: float = ATOL) -> bool:
    """A gate is dual-unitary when it stays unitary under rotation."""
    return is_unitary(matrix, atol) and is_unitary(spacetime_rotate(matrix), atol)


def is_self_dual_real(matrix: np.ndarray, atol: float = ATOL) -> bool:
    """True when the gate equals both its rotation and its conjugate."""
    m = np.asarray(matrix, dtype=complex)
    return bool(
        np.allclose(m, spacetime_rotate(m), atol=atol)
        and np.allclose(m, m.conj(), atol=atol)
    )


def _two_site_pauli(code: int) -> np.ndarray:
    xa, za, xb, zb = code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1
    return np.kron(_PAULI_1Q[(xa, za)], _PAULI_1Q[(xb, zb)])


def pauli_label(code: int) -> str:
    """Two-letter label for a 4-bit Pauli code; first letter = first site."""
    xa, za, xb, zb = code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1
    return _PAULI_LETTER[(xa, za)] + _PAULI_LETTER[(xb, zb)]


def pauli_code(label: str) -> int:
    xa, za = _LETTER_BITS[label[0]]
    xb, zb = _LETTER_BITS[label[1]]
    return xa | (za << 1) | (xb << 2) | (zb << 3)


_PAULI_STACK = np.stack([_two_site_pauli(c) for c in range(16)])


def conjugation_table(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tabulate P -> U P U^dag over all 16 two-site Paulis.

    Returns (images, signs): uint8 arrays of length 16 where images[c] is
    the 4-bit code of the image Pauli and signs[c] is 1 for a minus sign.
    Codes pack as x_a + 2 z_a + 4 x_b + 8 z_b.

    Raises NotCliffordError if any image fails to be a signed Pauli.
    """
    m = np.asarray(matrix, dtype=complex)
    conj_all = (m @ _PAULI_STACK) @ m.conj().T
    # overlap of every image with every candidate Pauli: row k must have a
    # single entry of absolute value 1 (the signed image), rest zero
    coef = np.einsum("lab,kab->kl", _PAULI_STACK.conj(), conj_all) / 4.0
    out = np.argmax(np.abs(coef), axis=1)
    picked = coef[np.arange(16), out]
    clean = (
        (np.abs(np.abs(picked) - 1.0) < CLIFFORD_ATOL)
        & (np.abs(picked.imag) < CLIFFORD_ATOL)
    )
    residual = conj_all - picked.real[:, None, None] * _PAULI_STACK[out]
    clean &= np.abs(residual).max(axis=(1, 2)) < CLIFFORD_ATOL
    if not clean[1:].all():
        bad = int(np.nonzero(~clean[1:])[0][0]) + 1
        raise NotCliffordError(
            f"conjugation of {pauli_label(bad)} is not a signed Pauli"
        )
    images = out.astype(np.uint8)
    signs = (picked.real < 0).astype(np.uint8)
    images[0], signs[0] = 0, 0
    return images, signs


def is_clifford(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the conjugation table, or raise NotCliffordError."""
    return conjugation_table(matrix)


def conjugation_lines(matrix: np.ndarray) -> dict[str, str]:
    """Human-readable conjugation map, unsigned: {'ZI': 'XZ', ...}."""
    images, _ = conjugation_table(matrix)
    return {pauli_label(c): pauli_label(int(images[c])) for c in range(1, 16)}


def _canonical_phase(matrix: np.ndarray) -> np.ndarray:
    flat = matrix.ravel()
    idx = int(np.argmax(np.abs(flat) > 1e-8))
    return matrix * (abs(flat[idx]) / flat[idx])


_CLIFFORD_1Q_CACHE: list[np.ndarray] | None = None


def single_qubit_clifford_group() -> list[np.ndarray]:
    """The 24 single-site Clifford gates, enumerated by closure from H and S.

    Phases are canonicalized (first nonzero entry positive real) and the
    list is sorted deterministically so that random sampling is exactly
    reproducible across runs.
    """
    global _CLIFFORD_1Q_CACHE
    if _CLIFFORD_1Q_CACHE is not None:
        return _CLIFFORD_1Q_CACHE

    def key(m: np.ndarray) -> tuple:
        return tuple(np.round(m.ravel().view(float), 9))

    seen: dict[tuple, np.ndarray] = {}
    frontier = [_canonical_phase(I2)]
    seen[key(frontier[0])] = frontier[0]
    while frontier:
        nxt = []
        for g in frontier:
            for gen in (H, S):
                cand = _canonical_phase(gen @ g)
                k = key(cand)
                if k not in seen:
                    seen[k] = cand
                    nxt.append(cand)
        frontier = nxt
    group = sorted(seen.values(), key=key)
    if len(group) != 24:
        raise RuntimeError(f"closure produced {len(group)} elements, expected 24")
    _CLIFFORD_1Q_CACHE = group
    return group


@dataclass(frozen=True)
class TwoQubitClifford:
    """A two-site Clifford gate plus its derived conjugation data."""

    matrix: np.ndarray
    label: str = ""
    images: np.ndarray = field(default=None, repr=False)
    signs: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if not is_unitary(m):
            raise ValueError(f"gate {self.label!r} is not unitary")
        images, signs = conjugation_table(m)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "signs", signs)

    @property
    def conj_table(self) -> dict[str, tuple[str, int]]:
        """Images of the generators as {label: (image label, sign bit)}."""
        out = {}
        for lab in ("XI", "IX", "ZI", "IZ"):
            c = pauli_code(lab)
            out[lab] = (pauli_label(int(self.images[c])), int(self.signs[c]))
        return out


FAMILY_NAMES = (
    "swap",
    "iswap",
    "sdki-f",
    "sdki-s",
    "sdki-r",
    "sdki-h",
    "random-du",
    "identity",
)

_FIXED = {
    "swap": SWAP,
    "iswap": ISWAP,
    "sdki-f": SDKI_F,
    "sdki-s": SDKI_S,
    "sdki-h": SDKI_H,
    "identity": np.eye(4, dtype=complex),
}

RANDOM_FAMILIES = ("sdki-r", "random-du")


def family_matrix(family: str) -> np.ndarray:
    if family not in _FIXED:
        raise ValueError(f"{family!r} has no fixed matrix; use sample_gate")
    return _FIXED[family].copy()


def sdki_r_from_indices(i1: int, i2: int) -> np.ndarray:
    """The randomly dressed free kicked-Ising gate for group indices i1, i2."""
    group = single_qubit_clifford_group()
    return np.kron(group[i1], I2) @ SDKI_F @ np.kron(group[i2], I2)


def random_du_from_indices(core: int, w1: int, w2: int, w3: int, w4: int) -> np.ndarray:
    """A random dual-unitary Clifford: SWAP (core=0) or iSWAP (core=1)
    dressed with four single-site Cliffords."""
    group = single_qubit_clifford_group()
    c = SWAP if core == 0 else ISWAP
    return np.kron(group[w1], group[w2]) @ c @ np.kron(group[w3], group[w4])


def sample_gate(family: str, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw one gate matrix for the family.

    Fixed families ignore the rng.  sdki-r dresses the free kicked-Ising
    gate with independent uniform single-site Cliffords on the first
    factor; random-du dresses a uniform choice of SWAP or iSWAP on both
    sides with four independent single-site Cliffords.
    """
    if family in _FIXED:
        return _FIXED[family].copy()
    if rng is None:
        raise ValueError(f"family {family!r} needs a random generator")
    if family == "sdki-r":
        return sdki_r_from_indices(int(rng.integers(24)), int(rng.integers(24)))
    if family == "random-du":
        return random_du_from_indices(
            int(rng.integers(2)),
            *(int(rng.integers(24)) for _ in range(4)),
        )
    raise ValueError(f"unknown gate family {family!r}")
