# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Packed stabilizer-tableau engine.

Same contract as _kernels_py.PyTableau, with rows packed 64 qubits per
uint64 word so the conjugation, forced-measurement, and prefix-rank
loops run over machine words.  Row layout matches the reference engine:
rows 0..n-1 destabilizers, rows n..2n-1 stabilizer generators.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint64_t

from ._kernels_py import DeterministicConflictError

cnp.import_array()

cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #define TE_POPCOUNT(x) __builtin_popcountll(x)
    #else
    static int TE_POPCOUNT(unsigned long long v) {
        int c = 0;
        while (v) { v &= v - 1; ++c; }
        return c;
    }
    #endif
    """
    int TE_POPCOUNT(uint64_t v) nogil


cdef inline int _bit(uint64_t[:, ::1] m, Py_ssize_t row, Py_ssize_t q) nogil:
    return <int>((m[row, q >> 6] >> (q & 63)) & 1)


cdef inline void _put(uint64_t[:, ::1] m, Py_ssize_t row, Py_ssize_t q, uint64_t v) nogil:
    cdef Py_ssize_t w = q >> 6
    cdef int s = <int>(q & 63)
    m[row, w] = (m[row, w] & ~((<uint64_t>1) << s)) | (v << s)


cdef class CyTableau:
    """Aaronson-Gottesman tableau over n qubits, bit-packed storage."""

    cdef public Py_ssize_t n
    cdef Py_ssize_t W
    cdef object _x, _z, _r          # owning numpy arrays
    cdef uint64_t[:, ::1] x, z
    cdef uint8_t[::1] r

    def __init__(self, Py_ssize_t n):
        if n < 1:
            raise ValueError("need at least one qubit")
        self._alloc(n)
        cdef Py_ssize_t i
        for i in range(n):
            _put(self.x, i, i, 1)          # destabilizer i = X_i
            _put(self.z, n + i, i, 1)      # stabilizer i = Z_i

    cdef void _alloc(self, Py_ssize_t n):
        self.n = n
        self.W = (n + 63) >> 6
        self._x = np.zeros((2 * n, self.W), dtype=np.uint64)
        self._z = np.zeros((2 * n, self.W), dtype=np.uint64)
        self._r = np.zeros(2 * n, dtype=np.uint8)
        self.x = self._x
        self.z = self._z
        self.r = self._r

    @classmethod
    def bell_chain(cls, n, pairs):
        """State with Bell pairs on the given 0-based qubit pairs.

        Unpaired qubits start in |0>; matches the reference engine's
        generator choice exactly (X_aX_b / Z_aZ_b stabilizers, Z_a / X_b
        destabilizers).
        """
        cdef CyTableau tab = cls(n)
        used = np.zeros(n, dtype=bool)
        cdef Py_ssize_t a, b, row
        for a_, b_ in pairs:
            a = a_
            b = b_
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ValueError(f"bad pair ({a}, {b})")
            if used[a] or used[b]:
                raise ValueError(f"overlapping pair ({a}, {b})")
            used[a] = used[b] = True
            for row in (a, b, tab.n + a, tab.n + b):
                tab._x[row, :] = 0
                tab._z[row, :] = 0
            _put(tab.x, tab.n + a, a, 1)
            _put(tab.x, tab.n + a, b, 1)
            _put(tab.z, tab.n + b, a, 1)
            _put(tab.z, tab.n + b, b, 1)
            _put(tab.z, a, a, 1)
            _put(tab.x, b, b, 1)
        return tab

    def copy(self):
        cdef CyTableau out = CyTableau.__new__(CyTableau)
        out.n = self.n
        out.W = self.W
        out._x = self._x.copy()
        out._z = self._z.copy()
        out._r = self._r.copy()
        out.x = out._x
        out.z = out._z
        out.r = out._r
        return out

    # -- Clifford application ------------------------------------------------

    def apply_table(self, Py_ssize_t a, Py_ssize_t b, images, signs):
        """Conjugate every row by a two-site Clifford given as a code table.

        images/signs are the length-16 arrays from
        gates.conjugation_table; codes pack as x_a + 2 z_a + 4 x_b + 8 z_b.
        """
        cdef uint8_t[16] img
        cdef uint8_t[16] sg
        cdef Py_ssize_t k
        for k in range(16):
            img[k] = <uint8_t>images[k]
            sg[k] = <uint8_t>signs[k]
        cdef Py_ssize_t wa = a >> 6, wb = b >> 6
        cdef int sa = <int>(a & 63), sb = <int>(b & 63)
        cdef uint64_t ma = ~((<uint64_t>1) << sa), mb = ~((<uint64_t>1) << sb)
        cdef uint64_t[:, ::1] x = self.x, z = self.z
        cdef uint8_t[::1] r = self.r
        cdef Py_ssize_t i, rows = 2 * self.n
        cdef uint64_t xa, za, xb, zb, im
        cdef int code
        with nogil:
            for i in range(rows):
                xa = (x[i, wa] >> sa) & 1
                za = (z[i, wa] >> sa) & 1
                xb = (x[i, wb] >> sb) & 1
                zb = (z[i, wb] >> sb) & 1
                code = <int>(xa | (za << 1) | (xb << 2) | (zb << 3))
                im = img[code]
                r[i] ^= sg[code]
                x[i, wa] = (x[i, wa] & ma) | ((im & 1) << sa)
                z[i, wa] = (z[i, wa] & ma) | (((im >> 1) & 1) << sa)
                x[i, wb] = (x[i, wb] & mb) | (((im >> 2) & 1) << sb)
                z[i, wb] = (z[i, wb] & mb) | (((im >> 3) & 1) << sb)

    # -- measurement ---------------------------------------------------------

    cdef int _rowsum_into(self, Py_ssize_t t, Py_ssize_t src) except -1:
        """row_t <- row_t * row_src with phase tracking."""
        cdef uint64_t x1, z1, x2, z2, xo1, yo1, zo1, xo2, yo2, zo2
        cdef int64_t g = 0
        cdef Py_ssize_t w
        cdef int phase
        for w in range(self.W):
            x1 = self.x[src, w]
            z1 = self.z[src, w]
            x2 = self.x[t, w]
            z2 = self.z[t, w]
            xo1 = x1 & ~z1
            yo1 = x1 & z1
            zo1 = ~x1 & z1
            xo2 = x2 & ~z2
            yo2 = x2 & z2
            zo2 = ~x2 & z2
            g += TE_POPCOUNT((yo1 & zo2) | (xo1 & yo2) | (zo1 & xo2))
            g -= TE_POPCOUNT((yo1 & xo2) | (xo1 & zo2) | (zo1 & yo2))
            self.x[t, w] = x2 ^ x1
            self.z[t, w] = z2 ^ z1
        phase = <int>((2 * <int64_t>self.r[t] + 2 * <int64_t>self.r[src] + g) & 3)
        if phase & 1:
            raise AssertionError("odd phase in rowsum; sign bookkeeping broken")
        self.r[t] = <uint8_t>(phase >> 1)
        return 0

    def forced_pauli2(self, Py_ssize_t a, Py_ssize_t b, xza, xzb):
        """Measure a two-site Pauli with the outcome forced to +1.

        (xza, xzb) are the (x, z) bits on sites a and b.  Raises
        DeterministicConflictError when the state stabilizes the operator
        with sign -1.
        """
        cdef Py_ssize_t n = self.n
        cdef int xa_p = xza[0], za_p = xza[1]
        cdef int xb_p = xzb[0], zb_p = xzb[1]
        cdef cnp.ndarray[cnp.uint8_t, ndim=1] anti = np.zeros(2 * n, dtype=np.uint8)
        cdef uint8_t[::1] av = anti
        cdef Py_ssize_t i
        cdef int bit
        for i in range(2 * n):
            bit = 0
            if za_p:
                bit ^= _bit(self.x, i, a)
            if xa_p:
                bit ^= _bit(self.z, i, a)
            if zb_p:
                bit ^= _bit(self.x, i, b)
            if xb_p:
                bit ^= _bit(self.z, i, b)
            av[i] = <uint8_t>bit
        cdef Py_ssize_t p = -1
        for i in range(n, 2 * n):
            if av[i]:
                p = i
                break
        cdef Py_ssize_t w
        if p >= 0:
            for i in range(2 * n):
                # skip the pivot and its paired destabilizer: the latter is
                # overwritten below, and its product with the pivot would
                # carry an imaginary phase (they anticommute by construction)
                if av[i] and i != p and i != p - n:
                    self._rowsum_into(i, p)
            for w in range(self.W):
                self.x[p - n, w] = self.x[p, w]
                self.z[p - n, w] = self.z[p, w]
                self.x[p, w] = 0
                self.z[p, w] = 0
            self.r[p - n] = self.r[p]
            _put(self.x, p, a, xa_p)
            _put(self.z, p, a, za_p)
            _put(self.x, p, b, xb_p)
            _put(self.z, p, b, zb_p)
            self.r[p] = 0
            return
        # Determinate outcome: the operator is in +-(stabilizer group).
        cdef cnp.ndarray[cnp.uint64_t, ndim=1] sx = np.zeros(self.W, dtype=np.uint64)
        cdef cnp.ndarray[cnp.uint64_t, ndim=1] sz = np.zeros(self.W, dtype=np.uint64)
        cdef uint64_t[::1] sxv = sx, szv = sz
        cdef int sr = 0
        for i in range(n):
            if av[i]:
                sr = self._rowsum_scratch(sxv, szv, sr, n + i)
        cdef cnp.ndarray[cnp.uint64_t, ndim=1] wx = np.zeros(self.W, dtype=np.uint64)
        cdef cnp.ndarray[cnp.uint64_t, ndim=1] wz = np.zeros(self.W, dtype=np.uint64)
        cdef uint64_t[::1] wxv = wx, wzv = wz
        if xa_p:
            wxv[a >> 6] |= (<uint64_t>1) << (a & 63)
        if za_p:
            wzv[a >> 6] |= (<uint64_t>1) << (a & 63)
        if xb_p:
            wxv[b >> 6] |= (<uint64_t>1) << (b & 63)
        if zb_p:
            wzv[b >> 6] |= (<uint64_t>1) << (b & 63)
        for w in range(self.W):
            if sxv[w] != wxv[w] or szv[w] != wzv[w]:
                raise AssertionError("destabilizer accumulation missed the target Pauli")
        if sr:
            raise DeterministicConflictError(
                f"forced +1 on qubits ({a}, {b}) but the state stabilizes the "
                f"operator with sign -1"
            )

    cdef int _rowsum_scratch(self, uint64_t[::1] sx, uint64_t[::1] sz,
                             int sr, Py_ssize_t src) except -1:
        cdef uint64_t x1, z1, x2, z2, xo1, yo1, zo1, xo2, yo2, zo2
        cdef int64_t g = 0
        cdef Py_ssize_t w
        cdef int phase
        for w in range(self.W):
            x1 = self.x[src, w]
            z1 = self.z[src, w]
            x2 = sx[w]
            z2 = sz[w]
            xo1 = x1 & ~z1
            yo1 = x1 & z1
            zo1 = ~x1 & z1
            xo2 = x2 & ~z2
            yo2 = x2 & z2
            zo2 = ~x2 & z2
            g += TE_POPCOUNT((yo1 & zo2) | (xo1 & yo2) | (zo1 & xo2))
            g -= TE_POPCOUNT((yo1 & xo2) | (xo1 & zo2) | (zo1 & yo2))
            sx[w] = x2 ^ x1
            sz[w] = z2 ^ z1
        phase = <int>((2 * <int64_t>sr + 2 * <int64_t>self.r[src] + g) & 3)
        if phase & 1:
            raise AssertionError("odd phase in rowsum; sign bookkeeping broken")
        return phase >> 1

    def forced_bell(self, Py_ssize_t a, Py_ssize_t b):
        """Project qubits (a, b) onto the Bell pair: force XX=+1 then ZZ=+1."""
        self.forced_pauli2(a, b, (1, 0), (1, 0))
        self.forced_pauli2(a, b, (0, 1), (0, 1))

    def permute_qubits(self, perm):
        """Reorder qubit columns so new column j is old column perm[j]."""
        cdef cnp.ndarray[cnp.int64_t, ndim=1] pm = np.ascontiguousarray(perm, dtype=np.int64)
        cdef Py_ssize_t n = self.n
        if pm.shape[0] != n:
            raise ValueError("permutation length mismatch")
        nx = np.zeros_like(self._x)
        nz = np.zeros_like(self._z)
        cdef uint64_t[:, ::1] nxv = nx, nzv = nz
        cdef Py_ssize_t i, j, src
        with nogil:
            for j in range(n):
                src = pm[j]
                for i in range(2 * n):
                    if _bit(self.x, i, src):
                        _put(nxv, i, j, 1)
                    if _bit(self.z, i, src):
                        _put(nzv, i, j, 1)
        self._x = nx
        self._z = nz
        self.x = self._x
        self.z = self._z

    # -- entropies -----------------------------------------------------------

    def prefix_entropies(self):
        """Entanglement entropy (bits) of every prefix cut, one GF(2) sweep.

        Entry c-1 is the entropy of the first c qubits in the current
        qubit order, equal to the rank of the stabilizer matrix restricted
        to those columns minus c.
        """
        cdef Py_ssize_t n = self.n, W = self.W
        mx = self._x[n:, :].copy()
        mz = self._z[n:, :].copy()
        cdef uint64_t[:, ::1] ax = mx, az = mz
        cdef cnp.ndarray[cnp.uint8_t, ndim=1] piv = np.zeros(n, dtype=np.uint8)
        cdef uint8_t[::1] pv = piv
        cdef cnp.ndarray[cnp.int64_t, ndim=1] ent = np.empty(n, dtype=np.int64)
        cdef int64_t[::1] ev = ent
        cdef Py_ssize_t q, w, row, p, k
        cdef int s, rank = 0, half
        cdef uint64_t mask
        with nogil:
            for q in range(n):
                w = q >> 6
                s = <int>(q & 63)
                mask = (<uint64_t>1) << s
                for half in range(2):
                    p = -1
                    if half == 0:
                        for row in range(n):
                            if not pv[row] and (ax[row, w] & mask):
                                p = row
                                break
                    else:
                        for row in range(n):
                            if not pv[row] and (az[row, w] & mask):
                                p = row
                                break
                    if p < 0:
                        continue
                    pv[p] = 1
                    rank += 1
                    if half == 0:
                        for row in range(n):
                            if row != p and (ax[row, w] & mask):
                                for k in range(W):
                                    ax[row, k] ^= ax[p, k]
                                    az[row, k] ^= az[p, k]
                    else:
                        for row in range(n):
                            if row != p and (az[row, w] & mask):
                                for k in range(W):
                                    ax[row, k] ^= ax[p, k]
                                    az[row, k] ^= az[p, k]
                ev[q] = rank - (q + 1)
        return ent

    # -- validation helpers (tests and debugging) ----------------------------

    cdef object _unpack(self, object packed):
        cdef Py_ssize_t n = self.n
        arr = np.asarray(packed)
        cols = np.arange(n)
        shifts = (cols & 63).astype(np.uint64)
        return ((arr[:, cols >> 6] >> shifts) & 1).astype(np.uint8)

    def validate(self):
        """Check symplectic pairing of the full tableau; raises on breakage."""
        n = self.n
        ux = self._unpack(self._x)
        uz = self._unpack(self._z)
        xz = np.concatenate([ux, uz], axis=1)
        zx = np.concatenate([uz, ux], axis=1)
        gram = (xz @ zx.T) & 1
        want = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        want[:n, n:] = np.eye(n, dtype=np.uint8)
        want[n:, :n] = np.eye(n, dtype=np.uint8)
        if not np.array_equal(gram, want):
            raise AssertionError("tableau lost symplectic pairing")

    def stabilizer_bits(self):
        n = self.n
        return (
            self._unpack(self._x)[n:].copy(),
            self._unpack(self._z)[n:].copy(),
            np.asarray(self._r)[n:].copy(),
        )
