"""Exact measurement-averaged spatial transfer operator and contractions.

Averaging the folded influence-state dynamics over the Bernoulli
gate-vs-measurement choices turns one spatial period of the circuit
into a dense transfer operator acting on the chain of temporal sites.
Two representations are built here.  The single-flavor occupation
picture (dimension 2**T) tracks which temporal sites carry a
non-vacuum Bell label; each time bond applies SWAP with the gate
probability and the identity with the measurement probability, and the
trace boundary is the hard projector that annihilates a particle at
the top site.  The reduced three-state picture (dimension 3**T) keeps
the minimal local space needed to evaluate averaged purities exactly;
contracting the trace vector through the mixed top bond there yields
the composite boundary weight diag(1, p, p) instead of the hard
projector, which is the boundary the Monte Carlo engine actually
realizes.  Both operators are block-diagonal in the number of
non-vacuum labels, and the single-particle block of the occupation
operator is the non-Hermitian hopping matrix of :mod:`tempent.hopping`.

The same three-state machinery also powers the exact averaged-entropy
contraction: evolve the folded boundary state column by column with
the (1-p, p) mixed bond tensors and read off annealed or quenched
per-cut averages against the calibrated cut covectors, with no
sampling error at any measurement rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sim import column_bonds

__all__ = [
    "BoundaryVectors",
    "TransferOperator",
    "boundary_vectors",
    "build_mixed_transfer",
    "sector_matrix",
    "leading_spectrum",
    "decay_scale",
    "pt_scan",
    "exact_average_entropy_q3",
    "q3_entropy_curve",
]

OCCUPATION = "occupation_single_flavor"
REDUCED_Q3 = "reduced_q3"

_REPS = (OCCUPATION, REDUCED_Q3)
_DENSE_SITES = {OCCUPATION: 14, REDUCED_Q3: 10}
_FULL_MATRIX_SITES = {OCCUPATION: 12, REDUCED_Q3: 8}
_TABLE_TOL = 1e-12
_OFF_SECTOR_TOL = 1e-12
_RESIDUAL_TOL = 1e-8


# --------------------------------------------------------------------------
# boundary vectors of the reduced three-state space


@dataclass(frozen=True)
class BoundaryVectors:
    """Calibrated boundary (co)vectors of the three-state local space.

    ``circle`` and ``square`` are the cut covectors contracted on the
    two sides of a temporal cut, ``triangle`` is the trace-boundary
    vector on the auxiliary top site, and ``bell`` is the equal-label
    pair seeding every within-pair temporal bond.  All inner products
    are plain bilinear dots of the component tuples; the constructor
    checks the full table, so a successful build certifies the
    normalization the averaged contractions rely on.
    """

    mode: str
    eps: float | None
    circle: np.ndarray
    square: np.ndarray
    triangle: np.ndarray
    bell: np.ndarray


def boundary_vectors(mode: str = "annealed", eps: float | None = None) -> BoundaryVectors:
    """Build the boundary vectors for ``mode`` in {"annealed", "quenched"}.

    The annealed pair satisfies circle.square = 1/4 (one uncut Bell
    pair contributes a purity factor 1/4) with unit self-overlaps.
    The quenched pair satisfies circle.square = 1 + 2*eps with unit
    self-overlaps, so the O(eps) coefficient of a contraction counts
    crossings; ``eps`` must lie in (0, 1e-3].
    """
    tri = np.array([1.0, 0.0, 0.0], dtype=complex)
    if mode == "annealed":
        if eps is not None:
            raise ValueError("eps only applies to the quenched vectors")
        r = np.sqrt(3.0 / 8.0)
        circle = np.array([1.0, -r, 1j * r])
        square = np.array([1.0, r, 1j * r])
        expected_cross = 0.25
    elif mode == "quenched":
        if eps is None or not 0.0 < eps <= 1e-3:
            raise ValueError("quenched mode needs eps in (0, 1e-3]")
        circle = np.array([1.0, eps, 1j * eps])
        square = np.array([1.0, 1.0, -1j])
        expected_cross = 1.0 + 2.0 * eps
    else:
        raise ValueError(f"unknown boundary mode {mode!r}")

    table = {
        "circle.square": (circle @ square, expected_cross),
        "circle.circle": (circle @ circle, 1.0),
        "square.square": (square @ square, 1.0),
        "circle.triangle": (circle @ tri, 1.0),
        "square.triangle": (square @ tri, 1.0),
    }
    for name, (got, want) in table.items():
        if abs(got - want) > _TABLE_TOL:
            raise AssertionError(f"{mode} overlap {name} = {got}, expected {want}")
    bell = np.eye(3, dtype=complex).reshape(9)
    return BoundaryVectors(mode=mode, eps=eps, circle=circle, square=square,
                           triangle=tri, bell=bell)


# --------------------------------------------------------------------------
# transfer operator


@dataclass
class TransferOperator:
    """One averaged spatial period in a fixed representation.

    ``sectors`` caches the particle-number blocks (label count n maps
    to the basis index list and the dense block) as they are built;
    ``matrix`` materializes the full dense operator on demand for the
    sizes where that is sane.
    """

    T: int
    p: float
    rep: str
    sectors: dict[int, tuple[np.ndarray, np.ndarray]] = field(
        default_factory=dict, repr=False)
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return (2 if self.rep == OCCUPATION else 3) ** self.T

    @property
    def matrix(self) -> np.ndarray:
        """Full dense operator (small T only; sectors scale further)."""
        if self._matrix is None:
            if self.T > _FULL_MATRIX_SITES[self.rep]:
                raise ValueError(
                    f"dense {self.rep} matrix at T={self.T} exceeds the "
                    f"supported range (T <= {_FULL_MATRIX_SITES[self.rep]}); "
                    "use sector_matrix")
            self._matrix = _apply_period(np.eye(self.dim), self.T, self.p, self.rep)
        return self._matrix

    def max_label_count(self) -> int:
        return self.T


def build_mixed_transfer(T: int, p: float, rep: str = OCCUPATION) -> TransferOperator:
    """Average one spatial period at measurement rate ``p``.

    Every time bond applies the two-label SWAP with weight 1-p and the
    identity with weight p, staggered exactly as the simulator's gate
    columns (within-pair bonds, then straddling bonds).  The trace
    boundary closes the period: the occupation representation uses the
    hard projector (a particle at the top site is annihilated), while
    the reduced three-state representation carries the exact composite
    weight diag(1, p, p) obtained by threading the trace vector
    through the mixed top bond.
    """
    if rep not in _REPS:
        raise ValueError(f"unknown representation {rep!r}")
    if T % 2 != 0 or T < 2:
        raise ValueError(f"time extent {T} must be even and at least 2")
    if T > _DENSE_SITES[rep]:
        raise ValueError(
            f"T={T} overflows the dense {rep} range (T <= {_DENSE_SITES[rep]})")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"measurement rate {p} outside [0, 1]")
    return TransferOperator(T=T, p=p, rep=rep)


def _occupation_bond_perm(T: int, i: int, j: int) -> np.ndarray:
    """Index permutation swapping the occupation bits of sites i and j."""
    idx = np.arange(1 << T, dtype=np.int64)
    bi = (idx >> (i - 1)) & 1
    bj = (idx >> (j - 1)) & 1
    mask = (bi ^ bj).astype(bool)
    flip = (1 << (i - 1)) | (1 << (j - 1))
    out = idx.copy()
    out[mask] ^= flip
    return out


def _apply_period_occupation(block: np.ndarray, T: int, p: float) -> np.ndarray:
    out = np.array(block, dtype=float, copy=True)
    for t in range(1, T, 2):
        perm = _occupation_bond_perm(T, t, t + 1)
        out = p * out + (1.0 - p) * out[perm]
    for t in range(2, T - 1, 2):
        perm = _occupation_bond_perm(T, t, t + 1)
        out = p * out + (1.0 - p) * out[perm]
    top = 1 << (T - 1)
    out[(np.arange(out.shape[0]) & top) != 0] = 0.0
    return out


def _mixed_gate_q3(p: float) -> np.ndarray:
    eye = np.eye(3)
    swap = np.einsum("il,jk->ijkl", eye, eye)
    iden = np.einsum("ik,jl->ijkl", eye, eye)
    return (1.0 - p) * swap + p * iden


def _apply_bond_q3(tensor: np.ndarray, gate: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(gate, tensor, axes=([2, 3], [axis, axis + 1]))
    return np.moveaxis(out, [0, 1], [axis, axis + 1])


def _apply_period_q3(block: np.ndarray, T: int, p: float) -> np.ndarray:
    """Top-composite period on a (3**T, m) block of chain states."""
    m = block.shape[1]
    gate = _mixed_gate_q3(p)
    tensor = np.array(block, dtype=float).reshape((3,) * T + (m,))
    for t in range(1, T, 2):
        tensor = _apply_bond_q3(tensor, gate, t - 1)
    for t in range(2, T - 1, 2):
        tensor = _apply_bond_q3(tensor, gate, t - 1)
    weight = np.array([1.0, p, p]).reshape((1,) * (T - 1) + (3, 1))
    tensor = tensor * weight
    return tensor.reshape(3 ** T, m)


def _apply_period(block: np.ndarray, T: int, p: float, rep: str) -> np.ndarray:
    if rep == OCCUPATION:
        return _apply_period_occupation(block, T, p)
    return _apply_period_q3(block, T, p)


def _sector_indices(T: int, n: int, rep: str) -> np.ndarray:
    if rep == OCCUPATION:
        idx = np.arange(1 << T, dtype=np.int64)
        return idx[np.bitwise_count(idx) == n]
    digits = np.indices((3,) * T).reshape(T, -1)
    labels = np.count_nonzero(digits, axis=0)
    return np.flatnonzero(labels == n).astype(np.int64)


def sector_matrix(op: TransferOperator, n: int) -> np.ndarray:
    """Dense block of ``op`` on the states with exactly n non-vacuum labels.

    The block is built by acting on the sector's basis columns in the
    full space; rows outside the sector are checked to vanish, which
    certifies label-count conservation of the averaged period.
    """
    if not 0 <= n <= op.max_label_count():
        raise ValueError(f"label count {n} outside 0..{op.max_label_count()}")
    if n in op.sectors:
        return op.sectors[n][1]
    idx = _sector_indices(op.T, n, op.rep)
    dim = op.dim
    cols = np.zeros((dim, idx.size))
    cols[idx, np.arange(idx.size)] = 1.0
    image = _apply_period(cols, op.T, op.p, op.rep)
    block = image[idx, :]
    off = image.copy()
    off[idx, :] = 0.0
    worst = float(np.abs(off).max()) if off.size else 0.0
    if worst > _OFF_SECTOR_TOL:
        raise AssertionError(
            f"period leaks out of the {n}-label sector by {worst:.3e}")
    op.sectors[n] = (idx, block)
    return block


def leading_spectrum(matrix: np.ndarray, k: int = 4) -> np.ndarray:
    """Top-k eigenvalues, sorted by |lambda| then Re then Im, descending.

    Every returned pair is residual-checked: ||A v - lambda v|| must
    not exceed 1e-8 for the unit eigenvector the dense solver reports.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("leading_spectrum needs a square matrix")
    vals, vecs = np.linalg.eig(a)
    norms = np.linalg.norm(vecs, axis=0)
    residuals = np.linalg.norm(a @ vecs - vecs * vals, axis=0) / norms
    if residuals.size and residuals.max() > _RESIDUAL_TOL:
        raise ArithmeticError(
            f"eigenpair residual {residuals.max():.3e} exceeds {_RESIDUAL_TOL}")
    order = np.lexsort((-vals.imag, -vals.real, -np.abs(vals)))
    return vals[order][: min(k, vals.size)]


def decay_scale(op: TransferOperator) -> float:
    """Spatial decay scale -1/ln(lambda_2), in periods of the circuit.

    lambda_2 is the leading eigenvalue of the two-label sector, the
    slowest mode the folded boundary state can relax through.  Use the
    reduced three-state representation when comparing against sampled
    tails; its composite trace boundary is the one the Monte Carlo
    engine realizes, and its two-label eigenvalue is the rate the
    sampled curves approach.  A scale is undefined when the sector
    does not decay (lambda_2 >= 1) or degenerates to zero.
    """
    lam = leading_spectrum(sector_matrix(op, 2), k=1)[0]
    mod = abs(lam)
    if mod >= 1.0 or mod <= 0.0:
        raise ValueError(f"decay scale undefined for |lambda_2| = {mod}")
    return -1.0 / np.log(mod)


def pt_scan(T: int, n: int, p_grid, rep: str = OCCUPATION):
    """Scan a sector for eigenvalue pairs leaving the real axis.

    Returns (max |Im lambda| per grid point, p_c estimate).  The
    estimate is the midpoint of the highest adjacent grid cell where
    the maximal imaginary part crosses 1e-8 coming down from the
    complex side; None when the whole grid stays on one side.
    """
    ps = np.sort(np.asarray(list(p_grid), dtype=float))
    imax = np.empty(ps.size)
    for i, p in enumerate(ps):
        block = sector_matrix(build_mixed_transfer(T, p, rep), n)
        vals = np.linalg.eigvals(block)
        imax[i] = float(np.abs(vals.imag).max()) if vals.size else 0.0
    complex_side = imax > 1e-8
    p_c = None
    for i in range(ps.size - 1):
        if complex_side[i] and not complex_side[i + 1]:
            p_c = 0.5 * (ps[i] + ps[i + 1])
    return imax, p_c


# --------------------------------------------------------------------------
# exact averaged entropies from the three-state contraction


def _cut_list(T: int, cuts: str) -> np.ndarray:
    if cuts == "all":
        return np.arange(1, T, dtype=np.int64)
    if cuts == "odd":
        return np.arange(1, T, 2, dtype=np.int64)
    raise ValueError(f"unknown cut convention {cuts!r}")


def _contract_cuts(state: np.ndarray, T: int, cut_ids: np.ndarray,
                   circle: np.ndarray, square: np.ndarray,
                   triangle: np.ndarray) -> np.ndarray:
    """Overlap of the evolved state with each cut covector."""
    out = np.empty(cut_ids.size, dtype=complex)
    for w, t_i in enumerate(cut_ids):
        covers = [circle if site <= t_i else square for site in range(1, T + 1)]
        covers.append(triangle.astype(complex))
        vec = state.reshape(-1).astype(complex)
        for cov in reversed(covers):
            vec = vec.reshape(-1, 3) @ cov
        out[w] = vec[0]
    return out


def _evolve_overlaps(T: int, p: float, L_values, vectors: BoundaryVectors,
                     cuts: str) -> dict[int, np.ndarray]:
    """Cut overlaps of the averaged folded state at each requested size."""
    want = sorted(set(int(L) for L in L_values))
    if want[0] < 1 or want[-1] > 10 ** 4:
        raise ValueError("bath sizes must lie in 1..10**4")
    cut_ids = _cut_list(T, cuts)
    tri = vectors.triangle.real
    gate = _mixed_gate_q3(p)
    state = vectors.bell.real.reshape(3, 3)
    for _ in range(T // 2 - 1):
        state = np.tensordot(state, vectors.bell.real.reshape(3, 3), axes=0)
    state = np.tensordot(state, tri, axes=0)

    out: dict[int, np.ndarray] = {}
    if want[0] == 1:
        out[1] = _contract_cuts(state, T, cut_ids, vectors.circle,
                                vectors.square, vectors.triangle)
    for ell in range(1, want[-1]):
        for t in column_bonds(T, ell):
            state = _apply_bond_q3(state, gate, t - 1)
        if ell % 2 == 1:
            amp = np.tensordot(state, tri, axes=([T], [0]))
            state = np.tensordot(amp, tri, axes=0)
        if ell + 1 in want:
            out[ell + 1] = _contract_cuts(state, T, cut_ids, vectors.circle,
                                          vectors.square, vectors.triangle)
    return out


def q3_entropy_curve(T: int, p: float, L_values, mode: str = "annealed",
                     eps: float = 1e-4, cuts: str = "all") -> dict[int, np.ndarray]:
    """Exact averaged per-cut entropies at several bath sizes in one pass.

    Evolves the averaged folded state once and contracts at every
    requested size, so a whole decay curve costs one evolution.
    ``mode`` "annealed" gives -log2 of the averaged purity per cut;
    "quenched" extracts the mean entropy itself through the small-eps
    boundary vectors, Richardson-corrected to kill the O(eps) bias.
    Entropies are in bits; keys of the result are the bath sizes.
    """
    if T % 2 != 0 or not 2 <= T <= 12:
        raise ValueError(f"time extent {T} must be even and within 2..12")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"measurement rate {p} outside [0, 1]")
    if mode == "annealed":
        vec = boundary_vectors("annealed")
        raw = _evolve_overlaps(T, p, L_values, vec, cuts)
        out = {}
        for L, vals in raw.items():
            if np.abs(vals.imag).max(initial=0.0) > 1e-9:
                raise ArithmeticError("annealed purity came out non-real")
            out[L] = -np.log2(np.maximum(vals.real, 1e-300))
        return out
    if mode == "quenched":
        if not 0.0 < eps <= 1e-3:
            raise ValueError("quenched mode needs eps in (0, 1e-3]")
        halves = []
        for e in (0.5 * eps, eps):
            vec = boundary_vectors("quenched", eps=e)
            raw = _evolve_overlaps(T, p, L_values, vec, cuts)
            halves.append({L: (vals.real - 1.0) / e for L, vals in raw.items()})
        return {L: 2.0 * halves[0][L] - halves[1][L] for L in halves[0]}
    raise ValueError(f"unknown averaging mode {mode!r}")


def exact_average_entropy_q3(T: int, L: int, p: float, mode: str = "annealed",
                             eps: float = 1e-4, cuts: str = "all") -> np.ndarray:
    """Exact averaged per-cut entropy profile at one bath size.

    Thin wrapper over :func:`q3_entropy_curve` for a single size; see
    there for modes and units.
    """
    return q3_entropy_curve(T, p, [L], mode=mode, eps=eps, cuts=cuts)[int(L)]
