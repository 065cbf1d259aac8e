"""Hopping model: closed form, dispersion, momentum quantization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempent import hopping

# Entry-exact matrix at (T=6, p=0.3): J1 = 0.21, J2 = 0.49.
GOLDEN_6_03 = [
    [0.30, 0.70, 0.00, 0.00, 0.00, 0.00],
    [0.21, 0.09, 0.21, 0.49, 0.00, 0.00],
    [0.49, 0.21, 0.09, 0.21, 0.00, 0.00],
    [0.00, 0.00, 0.21, 0.09, 0.21, 0.49],
    [0.00, 0.00, 0.49, 0.21, 0.09, 0.21],
    [0.00, 0.00, 0.00, 0.00, 0.00, 0.00],
]


def test_golden_matrix_entries():
    model = hopping.build_hamiltonian(6, 0.3)
    assert np.abs(model.matrix - np.array(GOLDEN_6_03)).max() < 1e-12
    assert abs(model.J1 - 0.21) < 1e-15
    assert abs(model.J2 - 0.49) < 1e-15


def test_couplings_at_half():
    model = hopping.build_hamiltonian(4, 0.5)
    assert model.J1 == pytest.approx(0.25)
    assert model.J2 == pytest.approx(0.25)


def test_zero_mode_from_absorbing_row():
    for T, p in ((4, 0.3), (6, 0.55), (10, 0.8)):
        model = hopping.build_hamiltonian(T, p)
        assert abs(np.linalg.det(model.matrix)) < 1e-12


def test_spectrum_at_p1():
    vals = np.sort(np.linalg.eigvals(hopping.build_hamiltonian(4, 1.0).matrix).real)
    assert np.allclose(vals, [0.0, 1.0, 1.0, 1.0], atol=1e-12)


def test_nilpotent_at_p0():
    for T in (4, 6, 8):
        h = hopping.build_hamiltonian(T, 0.0).matrix
        assert np.abs(np.linalg.matrix_power(h, T)).max() < 1e-14


def test_dispersion_endpoints():
    for p in (0.2, 0.5, 0.8):
        assert hopping.dispersion(0.0, p, +1) == pytest.approx(1.0, abs=1e-12)
        assert hopping.dispersion(0.0, p, -1) == pytest.approx(
            (1.0 - 2.0 * p) ** 2, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    re=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
    im=st.floats(min_value=-1.5, max_value=1.5, allow_nan=False),
    p=st.floats(min_value=0.05, max_value=0.95, allow_nan=False),
)
def test_branch_mirror_identity(re, im, p):
    k = complex(re, im)
    a = hopping.dispersion(k, p, +1)
    b = hopping.dispersion(np.pi - k, p, -1)
    assert abs(a - b) < 1e-12 * max(1.0, abs(a))


@pytest.mark.parametrize("T,p", [(6, 0.3), (6, 0.6), (6, 0.8),
                                 (10, 0.3), (10, 0.6), (10, 0.8)])
def test_momenta_solve_every_eigenvalue(T, p):
    model = hopping.build_hamiltonian(T, p)
    dense = np.linalg.eigvals(model.matrix)
    dense = np.sort_complex(dense[np.abs(dense) > 1e-10])
    sols = hopping.solve_momenta(T, p)
    assert len(sols) == dense.size == T - 1
    got = np.sort_complex(np.array([s.lam for s in sols]))
    assert np.abs(got - dense).max() < 1e-10
    for s in sols:
        assert s.residual <= 1e-8
        assert abs(hopping.dispersion(s.k, p, s.branch) - s.lam) < 1e-6


def test_real_root_count_above_half():
    for p in (0.55, 0.7, 0.9):
        sols = hopping.solve_momenta(10, p)
        real = [s for s in sols if abs(s.k.imag) < 1e-8]
        assert len(real) == 9


def test_complex_momenta_below_half():
    sols = hopping.solve_momenta(10, 0.3)
    assert any(abs(s.k.imag) > 1e-6 for s in sols)
    # conjugation closure of the eigenvalue set
    lams = np.array([s.lam for s in sols])
    assert np.abs(np.sort_complex(lams) - np.sort_complex(lams.conj())).max() < 1e-9


def test_leading_eigenvalue_real_everywhere():
    for p in np.linspace(0.05, 0.95, 19):
        sols = hopping.solve_momenta(6, float(p), check_states=False)
        lead = max(sols, key=lambda s: abs(s.lam))
        assert abs(lead.lam.imag) < 1e-9


@pytest.mark.parametrize("T", [4, 10])
def test_leading_transition_at_inverse_2T(T):
    p_star = hopping.leading_transition(T)
    assert abs(p_star - 1.0 / (2 * T)) < 1e-3


def test_linear_eigenstate_at_transition():
    T = 10
    p_star = 1.0 / (2 * T)
    sols = hopping.solve_momenta(T, p_star, check_states=False)
    lead = max(sols, key=lambda s: abs(s.lam))
    assert abs(lead.lam - (1.0 - 2.0 * p_star) ** 2) < 1e-10
    psi = hopping._eigenstate_vector(lead.k, lead.lam, p_star, T)
    j = np.arange(T)
    lin = np.where(j % 2 == 0, T + j, T - j - 1).astype(complex)
    scale = psi[0] / lin[0]
    assert np.abs(psi / scale - lin).max() / np.abs(lin).max() < 1e-8


def test_pt_transition_at_half():
    for T in (6, 10):
        p_c = hopping.pt_transition_hopping(T, np.arange(0.40, 0.61, 0.02))
        assert p_c is not None and abs(p_c - 0.5) <= 0.02 + 1e-12


def test_spectrum_real_above_half():
    vals = np.linalg.eigvals(hopping.build_hamiltonian(8, 0.6).matrix)
    assert np.abs(vals.imag).max() < 1e-10


def test_build_validation():
    with pytest.raises(ValueError):
        hopping.build_hamiltonian(1, 0.5)
    with pytest.raises(ValueError):
        hopping.build_hamiltonian(6, -0.1)
    with pytest.raises(ValueError):
        hopping.dispersion(0.3, 0.5, branch=0)
