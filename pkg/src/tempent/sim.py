"""Spatial evolution of the influence state for monitored brickwork circuits.

The influence state of a depth-T brickwork circuit lives on the legs of
the temporal chain: forward-contour sites f_1..f_T interleaved with
backward-contour sites b_1..b_T, plus one auxiliary top site T+1 whose
forward and backward legs hold the trace boundary as a Bell pair.
Spatial steps apply the space-time-rotated gates column by column; a
Bernoulli flag per active bond decides between the rotated gate (both
contours, locked) and the identity wire left behind by a forced Bell
measurement, whose rotated form is proportional to the identity.

Column conventions, frozen by calibration against the exact
measurement-free profile and documented here once:

* spatial step L records the state after L-1 gate columns, so L=1 is
  the initial boundary state itself;
* odd columns act on the straddling time bonds (2,3), (4,5), ..., (T,T+1)
  and then re-project the trace pair on (f_{T+1}, b_{T+1}); the bottom
  site 1 idles because the solvable initial state rotates to a wire;
* even columns act within the initial pairing, bonds (1,2), ..., (T-1,T);
* the rotated gate's first tensor factor acts on the upper leg t+1;
* the backward contour carries the rotated complex conjugate.

This phase assignment is the unique one (given the pairing of the
initial state) for which the measurement-free barrier is family
independent; starting with the within-pair column lets dressed gates
act inside a Bell pair and break the exact staircase.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import gates, kernels

FOLDED = "folded_two_contour"
SINGLE = "single_contour"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one trajectory ensemble needs, hashable and immutable."""

    T: int
    L_max: int
    p: float = 0.0
    family: str = "sdki-f"
    n_traj: int = 1
    master_seed: int = 0
    cut_parity: str = "odd"
    contours: str = FOLDED
    record_every: int = 1
    record_steps: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.T < 2 or self.T % 2:
            raise ValueError("T must be even and at least 2")
        if self.L_max < 1:
            raise ValueError("L_max must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.family not in gates.FAMILY_NAMES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_traj < 1:
            raise ValueError("n_traj must be at least 1")
        if self.cut_parity not in ("odd", "all"):
            raise ValueError("cut_parity must be 'odd' or 'all'")
        if self.contours not in (FOLDED, SINGLE):
            raise ValueError(f"contours must be {FOLDED!r} or {SINGLE!r}")
        if self.contours == SINGLE and self.family not in ("swap", "identity"):
            raise ValueError(
                "single-contour fast path only supports swap and identity"
            )
        if self.record_every < 1:
            raise ValueError("record_every must be positive")

    def recorded_steps(self) -> np.ndarray:
        if self.record_steps is not None:
            steps = np.asarray(sorted(set(self.record_steps)), dtype=np.int64)
            if steps.size == 0 or steps[0] < 1 or steps[-1] > self.L_max:
                raise ValueError("record_steps out of range")
            return steps
        return np.arange(self.record_every, self.L_max + 1, self.record_every,
                         dtype=np.int64)

    def admissible_cuts(self) -> np.ndarray:
        """Temporal cut positions entering the barrier maximum."""
        if self.cut_parity == "odd":
            return np.arange(1, self.T, 2, dtype=np.int64)
        return np.arange(1, self.T, dtype=np.int64)


@dataclass
class TEProfile:
    """Per-cut entropies and the barrier for one trajectory (or p=0 run)."""

    steps: np.ndarray          # recorded spatial steps, shape (R,)
    per_cut: np.ndarray        # entropies, shape (R, T-1), cut index t_i-1
    barrier: np.ndarray        # max over admissible cuts, shape (R,)
    peak: tuple[int, int]      # (S_T at the peak, smallest step attaining it)

    @classmethod
    def from_per_cut(cls, steps, per_cut, cuts) -> "TEProfile":
        barrier = per_cut[:, cuts - 1].max(axis=1) if per_cut.size else np.zeros(0, np.int64)
        if barrier.size:
            s_peak = int(barrier.max())
            l_c = int(steps[int(np.argmax(barrier))])
        else:
            s_peak, l_c = 0, 0
        return cls(steps=steps, per_cut=per_cut, barrier=barrier, peak=(s_peak, l_c))


def column_bonds(T: int, ell: int) -> np.ndarray:
    """Left sites t of the bonds (t, t+1) active in gate column ell.

    Odd columns straddle the initial pairing and reach the trace site:
    t = 2, 4, ..., T.  Even columns act within the pairing: t = 1, 3,
    ..., T-1.
    """
    if ell % 2 == 1:
        return np.arange(2, T + 1, 2, dtype=np.int64)
    return np.arange(1, T, 2, dtype=np.int64)


def column_rng(master_seed: int, traj_index: int, ell: int) -> np.random.Generator:
    """Counter-based stream for one (trajectory, column): bond draws are
    positions in this stream, so the derivation is keyed by
    (master_seed, trajectory, column, bond) and independent of scheduling."""
    key = np.array(
        [master_seed & _MASK64, ((traj_index << 24) ^ ell) & _MASK64],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def conjugate_table(images: np.ndarray, signs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Conjugation table of conj(M) given the table of M.

    Complex conjugation fixes every Pauli up to (-1)^(number of Y
    factors), so the images are unchanged and each sign flips when the
    input and output Y-counts differ in parity.
    """
    codes = np.arange(16, dtype=np.uint8)

    def n_y(c):
        return ((c & 1) & ((c >> 1) & 1)) + (((c >> 2) & 1) & ((c >> 3) & 1))

    flip = (n_y(codes) + n_y(images)) & 1
    return images.copy(), (signs ^ flip.astype(np.uint8))


class _BondTables:
    """Forward/backward rotated conjugation tables for one gate family."""

    def __init__(self, family: str):
        self.family = family
        self.random = family in gates.RANDOM_FAMILIES
        self._cache: dict[tuple, tuple] = {}
        if not self.random and family != "identity":
            m = gates.spacetime_rotate(gates.family_matrix(family))
            img_f, sg_f = gates.conjugation_table(m)
            img_b, sg_b = conjugate_table(img_f, sg_f)
            self._fixed = (img_f, sg_f, img_b, sg_b)

    def fixed(self) -> tuple:
        return self._fixed

    def from_draws(self, draws: tuple[int, ...]) -> tuple:
        hit = self._cache.get(draws)
        if hit is not None:
            return hit
        if self.family == "sdki-r":
            m = gates.sdki_r_from_indices(*draws)
        else:
            m = gates.random_du_from_indices(*draws)
        img_f, sg_f = gates.conjugation_table(gates.spacetime_rotate(m))
        img_b, sg_b = conjugate_table(img_f, sg_f)
        val = (img_f, sg_f, img_b, sg_b)
        if self.family == "sdki-r" or len(self._cache) < 4096:
            self._cache[draws] = val
        return val


def _draw_column(cfg: ExperimentConfig, traj_index: int, ell: int, n_bonds: int):
    """Measurement flags and gate draws for one column, in frozen order:
    one uniform per bond for the flags, then the family's index draws for
    every bond (drawn regardless of flags, to keep the stream aligned)."""
    rng = column_rng(cfg.master_seed, traj_index, ell)
    flags = rng.random(n_bonds) < cfg.p
    draws = None
    if cfg.family == "sdki-r":
        draws = rng.integers(0, 24, size=(n_bonds, 2))
    elif cfg.family == "random-du":
        core = rng.integers(0, 2, size=(n_bonds, 1))
        ws = rng.integers(0, 24, size=(n_bonds, 4))
        draws = np.concatenate([core, ws], axis=1)
    return flags, draws


def run_trajectory(cfg: ExperimentConfig, traj_index: int = 0) -> TEProfile:
    """Evolve one trajectory and record per-cut entropies.

    The influence state starts as Bell pairs on (f_{2k-1}, f_{2k}) and
    (b_{2k-1}, b_{2k}) with the trace pair on the auxiliary top site.
    Cut t_i reads the entropy of the first 2 t_i qubits in the
    interleaved order f_1, b_1, ..., f_{T+1}, b_{T+1}; the auxiliary
    site always stays on the right of every cut.
    """
    if cfg.contours == SINGLE:
        return _run_trajectory_single(cfg, traj_index)
    T = cfg.T
    n = 2 * (T + 1)
    pairs = []
    for k in range(1, T, 2):
        a, b = 2 * (k - 1), 2 * k  # f_k, f_{k+1}
        pairs.append((a, b))
        pairs.append((a + 1, b + 1))  # b_k, b_{k+1}
    pairs.append((2 * T, 2 * T + 1))  # trace pair on the top site
    eng = kernels.tableau_class().bell_chain(n, pairs)

    tables = _BondTables(cfg.family)
    steps = cfg.recorded_steps()
    rec_set = set(int(s) for s in steps)
    per_cut = np.zeros((steps.size, T - 1), dtype=np.int64)
    row = 0
    identity_family = cfg.family == "identity"

    def record():
        nonlocal row
        ent = eng.prefix_entropies()
        per_cut[row] = ent[1 : 2 * T - 1 : 2]  # prefixes of 2*t_i qubits
        row += 1

    if 1 in rec_set:
        record()
    for ell in range(1, cfg.L_max):
        bonds = column_bonds(T, ell)
        flags, draws = _draw_column(cfg, traj_index, ell, bonds.size)
        for i, t in enumerate(bonds):
            if flags[i]:
                continue  # measured bond: identity wire on both contours
            fa, fb = 2 * t, 2 * (t - 1)       # f_{t+1}, f_t
            ba, bb = 2 * t + 1, 2 * t - 1     # b_{t+1}, b_t
            if identity_family:
                # rotated identity is the Bell projector on each contour
                eng.forced_bell(fa, fb)
                eng.forced_bell(ba, bb)
                continue
            if tables.random:
                img_f, sg_f, img_b, sg_b = tables.from_draws(tuple(int(d) for d in draws[i]))
            else:
                img_f, sg_f, img_b, sg_b = tables.fixed()
            eng.apply_table(fa, fb, img_f, sg_f)
            eng.apply_table(ba, bb, img_b, sg_b)
        if ell % 2 == 1:
            eng.forced_bell(2 * T, 2 * T + 1)  # re-project the trace pair
        if ell + 1 in rec_set:
            record()

    return TEProfile.from_per_cut(steps, per_cut, cfg.admissible_cuts())


class PairTracker:
    """Symbolic influence state for the swap and identity families.

    For these families every operation maps Bell pairs of legs to Bell
    pairs of legs, so the folded state stays a perfect matching of the
    2(T+1) contour legs and entropies are crossing counts.  Legs are
    indexed like the tableau qubits: f_t = 2(t-1), b_t = 2(t-1)+1.
    """

    def __init__(self, T: int):
        self.T = T
        n = 2 * (T + 1)
        self.partner = np.zeros(n, dtype=np.int64)
        for k in range(1, T, 2):
            fa, fb = 2 * (k - 1), 2 * k
            self._pair(fa, fb)
            self._pair(fa + 1, fb + 1)
        self._pair(2 * T, 2 * T + 1)

    def _pair(self, u: int, v: int):
        self.partner[u] = v
        self.partner[v] = u

    def swap_legs(self, u: int, v: int):
        """Exchange what the two legs connect to (rotated swap gate)."""
        a, b = self.partner[u], self.partner[v]
        if a == v:  # partnered with each other: nothing moves
            return
        self._pair(u, b)
        self._pair(v, a)

    def bell_project(self, u: int, v: int):
        """Forced Bell measurement on two legs: teleport their partners."""
        a, b = self.partner[u], self.partner[v]
        if a == v:
            return
        self._pair(u, v)
        self._pair(a, b)

    def cut_entropies(self) -> np.ndarray:
        """Pairs crossing each temporal cut t_i = 1..T-1 (prefix of 2 t_i legs)."""
        n = 2 * (self.T + 1)
        diff = np.zeros(n + 1, dtype=np.int64)
        for u in range(n):
            v = self.partner[u]
            if v > u:
                diff[u + 1] += 1
                diff[v + 1] -= 1
        crossings = np.cumsum(diff)[1:]  # after each leg prefix
        return crossings[1 : 2 * self.T - 1 : 2]


def _run_trajectory_single(cfg: ExperimentConfig, traj_index: int) -> TEProfile:
    T = cfg.T
    state = PairTracker(T)
    steps = cfg.recorded_steps()
    rec_set = set(int(s) for s in steps)
    per_cut = np.zeros((steps.size, T - 1), dtype=np.int64)
    row = 0

    def record():
        nonlocal row
        per_cut[row] = state.cut_entropies()
        row += 1

    if 1 in rec_set:
        record()
    for ell in range(1, cfg.L_max):
        bonds = column_bonds(T, ell)
        flags, _ = _draw_column(cfg, traj_index, ell, bonds.size)
        for i, t in enumerate(bonds):
            if flags[i]:
                continue
            fa, fb = 2 * t, 2 * (t - 1)
            ba, bb = 2 * t + 1, 2 * t - 1
            if cfg.family == "swap":
                state.swap_legs(fa, fb)
                state.swap_legs(ba, bb)
            else:
                state.bell_project(fa, fb)
                state.bell_project(ba, bb)
        if ell % 2 == 1:
            state.bell_project(2 * T, 2 * T + 1)
        if ell + 1 in rec_set:
            record()
    return TEProfile.from_per_cut(steps, per_cut, cfg.admissible_cuts())


class _Kahan:
    """Compensated accumulator over a fixed-shape float64 array."""

    def __init__(self, shape):
        self.hi = np.zeros(shape)
        self.lo = np.zeros(shape)

    def add(self, v):
        y = v - self.lo
        t = self.hi + y
        self.lo = (t - self.hi) - y
        self.hi = t

    @property
    def total(self):
        return self.hi


MODES = ("q-ef", "q-af", "a-ef", "a-af")


@dataclass
class EnsembleResult:
    """Trajectory-averaged barriers under the four averaging orders."""

    config: ExperimentConfig
    steps: np.ndarray
    barrier: dict          # mode -> (mean, stderr), arrays over steps
    peaks: dict            # mode -> (S_T_peak, L_c)
    per_cut_mean: np.ndarray
    per_cut_stderr: np.ndarray
    per_cut_purity_mean: np.ndarray
    per_cut_purity_stderr: np.ndarray
    n_traj: int


def default_threads() -> int:
    env = os.environ.get("TEMPENT_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def run_ensemble(cfg: ExperimentConfig, threads: int | None = None) -> EnsembleResult:
    """Average run_trajectory over cfg.n_traj trajectories.

    Averaging orders (S is the per-cut entropy, max over admissible cuts):
    q-ef = mean over trajectories of the max; q-af = max of the mean;
    a-ef and a-af replace the mean by -log2(mean 2^-S) before/after the
    max.  Purity averages are compensated sums with entropies capped at T.
    """
    threads = default_threads() if threads is None else max(1, threads)
    steps = cfg.recorded_steps()
    cuts = cfg.admissible_cuts()
    R, C = steps.size, cfg.T - 1
    n = cfg.n_traj

    sum_s = _Kahan((R, C))
    sum_s2 = _Kahan((R, C))
    sum_pur = _Kahan((R, C))
    sum_pur2 = _Kahan((R, C))
    sum_max = _Kahan(R)
    sum_max2 = _Kahan(R)
    sum_pmax = _Kahan(R)
    sum_pmax2 = _Kahan(R)

    def fold(profile: TEProfile):
        s = profile.per_cut.astype(np.float64)
        pur = np.exp2(-np.minimum(s, cfg.T))
        m = profile.per_cut[:, cuts - 1].max(axis=1).astype(np.float64)
        pm = np.exp2(-np.minimum(m, cfg.T))
        sum_s.add(s)
        sum_s2.add(s * s)
        sum_pur.add(pur)
        sum_pur2.add(pur * pur)
        sum_max.add(m)
        sum_max2.add(m * m)
        sum_pmax.add(pm)
        sum_pmax2.add(pm * pm)

    if threads > 1 and n > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(threads) as pool:
            for prof in pool.imap(
                _traj_star, ((cfg, j) for j in range(n)),
                chunksize=max(1, n // (8 * threads)),
            ):
                fold(prof)
    else:
        for j in range(n):
            fold(run_trajectory(cfg, j))

    def mean_stderr(kah_s, kah_s2):
        mean = kah_s.total / n
        if n > 1:
            var = np.maximum(kah_s2.total / n - mean**2, 0.0) * n / (n - 1)
            err = np.sqrt(var / n)
        else:
            err = np.zeros_like(mean)
        return mean, err

    mean_s, err_s = mean_stderr(sum_s, sum_s2)
    mean_pur, err_pur = mean_stderr(sum_pur, sum_pur2)
    mean_max, err_max = mean_stderr(sum_max, sum_max2)
    mean_pmax, err_pmax = mean_stderr(sum_pmax, sum_pmax2)

    barrier = {}
    # quenched, extreme-value first: mean over trajectories of the max
    barrier["q-ef"] = (mean_max, err_max)
    # quenched, average first: max over cuts of the per-cut mean
    am = np.argmax(mean_s[:, cuts - 1], axis=1)
    rows = np.arange(R)
    barrier["q-af"] = (
        mean_s[:, cuts - 1][rows, am],
        err_s[:, cuts - 1][rows, am],
    )
    # annealed: purity average, then -log2
    with np.errstate(divide="ignore"):
        a_ef = -np.log2(mean_pmax)
        a_ef_err = err_pmax / (mean_pmax * math.log(2))
        pur_cuts = mean_pur[:, cuts - 1]
        am_a = np.argmin(pur_cuts, axis=1)
        pmin = pur_cuts[rows, am_a]
        a_af = -np.log2(pmin)
        a_af_err = err_pur[:, cuts - 1][rows, am_a] / (pmin * math.log(2))
    barrier["a-ef"] = (a_ef, a_ef_err)
    barrier["a-af"] = (a_af, a_af_err)

    peaks = {}
    for mode, (curve, _) in barrier.items():
        if curve.size:
            k = int(np.argmax(curve))
            peaks[mode] = (float(curve[k]), int(steps[k]))
        else:
            peaks[mode] = (0.0, 0)

    return EnsembleResult(
        config=cfg,
        steps=steps,
        barrier=barrier,
        peaks=peaks,
        per_cut_mean=mean_s,
        per_cut_stderr=err_s,
        per_cut_purity_mean=mean_pur,
        per_cut_purity_stderr=err_pur,
        n_traj=n,
    )


def _traj_star(args):
    return run_trajectory(*args)


def te_barrier_curve(cfg: ExperimentConfig, mode: str = "q-ef",
                     threads: int | None = None):
    """Barrier S_T(L) over recorded steps plus (S_T_peak, L_c).

    L_c is the smallest recorded step attaining the peak.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    res = run_ensemble(cfg, threads=threads)
    curve, err = res.barrier[mode]
    return res.steps, curve, err, res.peaks[mode]


# -- operator-front spreading (butterfly velocity) -----------------------------


def front_trajectory(
    cfg: ExperimentConfig,
    traj_index: int = 0,
    seed_site: int | None = None,
    seed_pauli: str = "X",
) -> np.ndarray:
    """Upper-front position of one conjugated Pauli string, per column.

    The string lives on the forward contour of the time chain and is
    pushed through the same staggered columns (same streams, same flags,
    same gate draws) as the state sampler: unmeasured bonds conjugate by
    the rotated gate, measured bonds are identity wires and leave the
    string alone.  The front is the largest chain site carrying a
    non-identity factor; its drift per column is the butterfly velocity
    of the monitored circuit, since every stabilizer string's endpoints
    move this way.

    Entry ell of the result is the front displacement (in sites) after
    column ell, entry 0 is 0.  The walk is only meaningful while the
    front stays below the top of the chain; the caller picks cfg.T,
    cfg.L_max, and the seed site so the light cone fits.
    """
    T = cfg.T
    t0 = (T // 4) if seed_site is None else seed_site
    if not 1 <= t0 <= T:
        raise ValueError(f"seed site {t0} outside 1..T")
    if cfg.family == "identity":
        raise ValueError("the identity family has no spreading front")
    bits = {"X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
    if seed_pauli not in bits:
        raise ValueError(f"seed Pauli must be X, Y, or Z, not {seed_pauli!r}")
    x = np.zeros(T + 2, dtype=np.uint8)  # chain sites 1..T+1, index = site
    z = np.zeros(T + 2, dtype=np.uint8)
    x[t0], z[t0] = bits[seed_pauli]

    tables = _BondTables(cfg.family)
    pos = np.zeros(cfg.L_max, dtype=np.int64)
    for ell in range(1, cfg.L_max):
        bonds = column_bonds(T, ell)
        flags, draws = _draw_column(cfg, traj_index, ell, bonds.size)
        for i, t in enumerate(bonds):
            if flags[i]:
                continue
            code = x[t + 1] | (z[t + 1] << 1) | (x[t] << 2) | (z[t] << 3)
            if code == 0:
                continue
            if tables.random:
                img = tables.from_draws(tuple(int(d) for d in draws[i]))[0]
            else:
                img = tables.fixed()[0]
            im = int(img[code])
            x[t + 1], z[t + 1] = im & 1, (im >> 1) & 1
            x[t], z[t] = (im >> 2) & 1, (im >> 3) & 1
        sup = np.nonzero(x | z)[0]
        pos[ell] = (int(sup[-1]) - t0) if sup.size else pos[ell - 1]
    return pos


def front_ensemble(
    cfg: ExperimentConfig,
    seed_site: int | None = None,
    seed_pauli: str = "X",
) -> tuple[np.ndarray, np.ndarray]:
    """Mean upper-front curve over cfg.n_traj walks: (mean, stderr)."""
    n = cfg.n_traj
    acc = np.zeros(cfg.L_max)
    acc2 = np.zeros(cfg.L_max)
    for j in range(n):
        posf = front_trajectory(cfg, j, seed_site, seed_pauli).astype(float)
        acc += posf
        acc2 += posf**2
    mean = acc / n
    var = np.maximum(acc2 / n - mean**2, 0.0)
    stderr = np.sqrt(var / max(n - 1, 1))
    return mean, stderr
