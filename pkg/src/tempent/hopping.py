"""Single-particle block of the averaged transfer operator, solved.

The one-label sector of the occupation-basis transfer operator is a
T-site non-Hermitian hopping matrix: symmetric nearest-neighbor
amplitude J1 = p(1-p), unidirectional next-nearest amplitude
J2 = (1-p)**2 whose direction alternates with sublattice, a reflecting
weight at the first site and an absorbing last row from the trace
boundary.  This module builds that matrix in closed form, carries its
two-band bulk dispersion to complex momenta, quantizes momenta through
the boundary self-consistency condition, reconstructs eigenstates from
the bulk ansatz, and locates the two spectral transitions: the
real-to-complex momentum swap of the leading eigenvalue at small p and
the spectrum-wide departure from the real axis at p = 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HoppingModel",
    "MomentumSolution",
    "build_hamiltonian",
    "dispersion",
    "selfconsistent_residual",
    "solve_momenta",
    "leading_transition",
    "pt_transition_hopping",
]

_RESIDUAL_TOL = 1e-8
_TRIVIAL_TOL = 1e-10


@dataclass(frozen=True)
class HoppingModel:
    """Dense hopping matrix with its coupling constants."""

    T: int
    p: float
    J1: float
    J2: float
    matrix: np.ndarray


@dataclass(frozen=True)
class MomentumSolution:
    """One quantized momentum with its eigenvalue and bulk amplitudes.

    ``k`` satisfies the boundary self-consistency condition to
    ``residual``; the eigenstate on sites j = 0..T-1 is
    alpha_plus*e^{ikj} + alpha_minus*e^{-ikj} on even sites and
    beta_plus*e^{ikj} + beta_minus*e^{-ikj} on odd sites.
    """

    k: complex
    branch: int
    lam: complex
    alpha_plus: complex
    alpha_minus: complex
    beta_plus: complex
    beta_minus: complex
    residual: float


def build_hamiltonian(T: int, p: float) -> HoppingModel:
    """Closed-form T-site hopping matrix at measurement rate p.

    Row and column indices are 1-based sites mapped to 0-based array
    slots.  The first row carries the reflecting boundary (p on site 1,
    1-p onto site 2), interior rows carry p**2 on the diagonal, J1 to
    both neighbors and J2 two sites rightward from even sites or
    leftward from odd sites, and the last row is zero because the
    trace boundary absorbs a particle reaching the top site.
    """
    if T < 2:
        raise ValueError(f"need at least two sites, got T={T}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"measurement rate {p} outside [0, 1]")
    J1 = p * (1.0 - p)
    J2 = (1.0 - p) ** 2
    h = np.zeros((T, T))
    h[0, 0] = p
    h[0, 1] = 1.0 - p
    for j in range(2, T):
        h[j - 1, j - 1] = p * p
        h[j - 1, j - 2] = J1
        if j < T:
            h[j - 1, j] = J1
        if j % 2 == 0 and j <= T - 2:
            h[j - 1, j + 1] = J2
        if j % 2 == 1 and j >= 3:
            h[j - 1, j - 3] = J2
    h[T - 1, :] = 0.0
    return HoppingModel(T=T, p=p, J1=J1, J2=J2, matrix=h)


def dispersion(k, p: float, branch: int = +1):
    """Bulk two-band eigenvalue at (complex) momentum k.

    lambda_pm = 1 - 2 J1 - 2 J2 sin^2 k pm 2 cos k sqrt(J1^2 - J2^2 sin^2 k),
    with the principal square root; the two branches map into each
    other under k -> pi - k.
    """
    if branch not in (+1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch}")
    k = np.asarray(k, dtype=complex)
    J1 = p * (1.0 - p)
    J2 = (1.0 - p) ** 2
    s2 = np.sin(k) ** 2
    root = np.sqrt(J1 * J1 - J2 * J2 * s2 + 0j)
    lam = 1.0 - 2.0 * J1 - 2.0 * J2 * s2 + branch * 2.0 * np.cos(k) * root
    return complex(lam) if lam.ndim == 0 else lam


def _boundary_ratio(k: complex, T: int) -> complex:
    """sin(k(T-3)) / sin(k(T-1)) with the removable poles filled in."""
    den = np.sin(k * (T - 1))
    if abs(den) >= 1e-6:
        return np.sin(k * (T - 3)) / den
    m = round(float(np.real(k)) / np.pi)
    delta = k - m * np.pi
    a, b = T - 3, T - 1
    return (a / b) * (1.0 - delta * delta * (a * a - b * b) / 6.0)


def selfconsistent_residual(k, p: float, T: int, branch: int = +1) -> complex:
    """Defect of the boundary quantization condition at momentum k.

    Zero residual means the bulk eigenvalue at k also satisfies the
    two-boundary matching, i.e. k is one of the T-1 quantized
    momenta.  The T-dependent pole structure enters through the ratio
    sin(k(T-3))/sin(k(T-1)), continued through its removable points.
    """
    k = complex(k)
    lam = dispersion(k, p, branch)
    J2 = (1.0 - p) ** 2
    num = p * (lam - p * p + J2)
    den = lam - p * p - J2 * _boundary_ratio(k, T)
    return lam - num / den


def _eigenstate_coefficients(k: complex, lam: complex, p: float, T: int):
    J1 = p * (1.0 - p)
    J2 = (1.0 - p) ** 2
    phase = np.exp(-1j * k * (T - 1))
    beta_plus = phase
    beta_minus = -1.0 / phase
    cosk = np.cos(k)
    alpha_plus = -phase * (p * p - lam + J2 * np.exp(2j * k)) / (2.0 * J1 * cosk)
    alpha_minus = (1.0 / phase) * (p * p - lam + J2 * np.exp(-2j * k)) / (2.0 * J1 * cosk)
    return alpha_plus, alpha_minus, beta_plus, beta_minus


def _eigenstate_vector(sol_k: complex, lam: complex, p: float, T: int) -> np.ndarray:
    ap, am, bp, bm = _eigenstate_coefficients(sol_k, lam, p, T)
    j = np.arange(T)
    up = np.exp(1j * sol_k * j)
    dn = np.exp(-1j * sol_k * j)
    psi = np.where(j % 2 == 0, ap * up + am * dn, bp * up + bm * dn)
    return psi


def _momentum_candidates(lam: complex, p: float) -> list[complex]:
    """Closed-form inversion of the dispersion at eigenvalue lam."""
    J1 = p * (1.0 - p)
    J2 = (1.0 - p) ** 2
    mu = lam - p * p
    den = 4.0 * (J1 * J1 + J2 * mu)
    if abs(den) < 1e-300:
        return []
    cos2 = (mu + J2) ** 2 / den
    cosk = np.sqrt(cos2 + 0j)
    out = []
    for c in (cosk, -cosk):
        k0 = np.arccos(complex(c))
        for k in (k0, -k0, np.pi - k0, np.pi + k0):
            out.append(complex(k))
            out.append(complex(np.conj(k)))
    return out


def _newton_polish(k: complex, p: float, T: int, branch: int) -> complex:
    h = 1e-7
    for _ in range(40):
        f = selfconsistent_residual(k, p, T, branch)
        if abs(f) < 1e-13:
            break
        df = (selfconsistent_residual(k + h, p, T, branch)
              - selfconsistent_residual(k - h, p, T, branch)) / (2.0 * h)
        if abs(df) < 1e-300:
            break
        step = f / df
        if abs(step) > 0.5:
            step *= 0.5 / abs(step)
        k = k - step
    return k


def _bracket_real_roots(p: float, T: int, n_grid: int = 4000) -> list[complex]:
    """Fallback real-momentum search between the boundary-ratio poles."""
    from scipy.optimize import brentq

    def f(x: float) -> float:
        return float(np.real(selfconsistent_residual(x, p, T, +1)))

    ks = np.linspace(1e-6, np.pi - 1e-6, n_grid)
    poles = np.array([m * np.pi / (T - 1) for m in range(T)])
    good = np.abs(ks[:, None] - poles[None, :]).min(axis=1) > 2e-3
    ks = ks[good]
    vals = np.array([f(x) for x in ks])
    roots = []
    for i in range(ks.size - 1):
        if np.sign(vals[i]) * np.sign(vals[i + 1]) < 0:
            roots.append(complex(brentq(f, ks[i], ks[i + 1], xtol=1e-14)))
    return roots


def solve_momenta(T: int, p: float, check_states: bool = True) -> list[MomentumSolution]:
    """Quantized momenta of every nontrivial eigenvalue.

    Dense-diagonalizes the hopping matrix, inverts the dispersion in
    closed form for each eigenvalue, polishes the momentum on the
    boundary condition, and keeps the candidate with the smallest
    self-consistency defect on the canonical branch (+, with k mapped
    into Re k in [0, pi]).  Eigenstates are rebuilt from the bulk
    amplitudes and verified against the matrix.  The trivial zero
    eigenvalue from the absorbing last row carries no momentum and is
    skipped.
    """
    model = build_hamiltonian(T, p)
    vals = np.linalg.eigvals(model.matrix)
    vals = vals[np.abs(vals) > _TRIVIAL_TOL]
    order = np.lexsort((-vals.imag, -vals.real, -np.abs(vals)))
    vals = vals[order]
    out: list[MomentumSolution] = []
    for lam in vals:
        best: tuple[float, complex, int] | None = None
        for branch in (+1, -1):
            for cand in _momentum_candidates(lam, p):
                if abs(dispersion(cand, p, branch) - lam) > 1e-9:
                    continue
                k = _newton_polish(cand, p, T, branch)
                if abs(dispersion(k, p, branch) - lam) > 1e-6:
                    continue
                res = abs(selfconsistent_residual(k, p, T, branch))
                if best is None or res < best[0]:
                    best = (res, k, branch)
        if best is not None and best[0] > _RESIDUAL_TOL and p > 0.5:
            for k in _bracket_real_roots(p, T):
                for branch in (+1, -1):
                    if abs(dispersion(k, p, branch) - lam) > 1e-8:
                        continue
                    res = abs(selfconsistent_residual(k, p, T, branch))
                    if res < best[0]:
                        best = (res, k, branch)
        if best is None:
            raise ArithmeticError(f"no momentum found for eigenvalue {lam}")
        res, k, branch = best
        if branch == -1:
            k = np.pi - k
            branch = +1
            res = abs(selfconsistent_residual(k, p, T, branch))
        if k.real < 0 or (abs(k.real) < 1e-12 and k.imag < 0):
            k = -k
        lam_k = dispersion(k, p, branch)
        ap, am, bp, bm = _eigenstate_coefficients(k, lam_k, p, T)
        if check_states:
            psi = _eigenstate_vector(k, lam_k, p, T)
            defect = np.linalg.norm(model.matrix @ psi - lam * psi)
            scale = np.linalg.norm(psi)
            if scale > 0 and defect / scale > 1e-6:
                raise ArithmeticError(
                    f"reconstructed state at k={k} misses H psi = lam psi "
                    f"by {defect / scale:.3e}")
        out.append(MomentumSolution(k=k, branch=branch, lam=complex(lam),
                                    alpha_plus=ap, alpha_minus=am,
                                    beta_plus=bp, beta_minus=bm,
                                    residual=res))
    return out


def _leading_momentum(T: int, p: float) -> complex:
    sols = solve_momenta(T, p, check_states=False)
    k = max(sols, key=lambda s: abs(s.lam)).k
    alt = np.pi - k
    return alt if abs(alt.real) < abs(k.real) else k


def leading_transition(T: int, tol: float = 1e-4) -> float:
    """Rate where the leading eigenvalue's momentum turns real.

    Below the transition the leading state is boundary-bound with an
    imaginary momentum; above it the momentum is real.  The character
    is judged on the branch representative nearest k = 0 (the two
    dispersion branches mirror at k -> pi - k).  The crossover sits at
    p = 1/(2T), located by bisecting the sign of |Im k| - |Re k|.
    """
    lo, hi = 1.0 / (8.0 * T), 2.0 / T

    def character(p: float) -> float:
        k = _leading_momentum(T, p)
        return abs(k.imag) - abs(k.real)

    c_lo, c_hi = character(lo), character(hi)
    if not (c_lo > 0 > c_hi):
        raise ArithmeticError(
            f"bisection bracket [{lo}, {hi}] does not straddle the transition")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if character(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pt_transition_hopping(T: int, p_grid) -> float | None:
    """Highest rate whose spectrum has left the real axis.

    Scans the grid downward, reports the midpoint between the first
    grid point with a nonreal eigenvalue and its real-spectrum
    neighbor above, and cross-checks each nonreal point against the
    bulk criterion J1 < J2 (possible only below p = 1/2).
    """
    ps = np.sort(np.asarray(list(p_grid), dtype=float))[::-1]
    previous_real = None
    for p in ps:
        vals = np.linalg.eigvals(build_hamiltonian(T, p).matrix)
        vals = vals[np.abs(vals) > _TRIVIAL_TOL]
        nonreal = bool(np.abs(vals.imag).max(initial=0.0) > 1e-8)
        if nonreal:
            J1 = p * (1.0 - p)
            J2 = (1.0 - p) ** 2
            if J1 >= J2:
                raise AssertionError(
                    f"nonreal spectrum at p={p} contradicts J1 < J2")
            return 0.5 * (p + previous_real) if previous_real is not None else p
        previous_real = p
    return None
