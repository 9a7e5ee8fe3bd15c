import numpy as np
import pytest

from tbgp.potential import TWO_PI, make_wall_potential
from tbgp.wannier import (
    asymptotic_profile,
    coupling_constants,
    decay_diagnostics,
    gram_matrix,
    overlap_kernel,
    wannier_function,
)


def test_wannier_is_real_and_normalized(basis05):
    b = basis05
    assert np.max(np.abs(np.imag(b.u0_values))) == 0.0  # stored real
    assert b.im_residual < 1e-8
    nrm = b.dx * np.sum(b.u0_values ** 2)
    assert nrm == pytest.approx(1.0, abs=1e-10)


def test_gram_matrix_orthonormal(basis05):
    G = gram_matrix(basis05, range(-3, 4))
    assert np.max(np.abs(G - np.eye(7))) < 1e-4


def test_hopping_coefficients_frozen(basis05):
    om = basis05.omega_hat
    assert om[0] == pytest.approx(0.568418, abs=2e-5)
    assert om[1] == pytest.approx(-7.4052e-4, rel=1e-3)
    assert abs(om[2]) < 2e-6
    assert abs(om[3]) < 1e-8


def test_alpha_beta_frozen(basis05):
    assert basis05.alpha == pytest.approx(-0.79307, abs=2e-4)
    assert basis05.beta == pytest.approx(0.35104, abs=2e-4)
    alpha, beta = coupling_constants(basis05)
    assert alpha == pytest.approx(basis05.alpha)
    assert beta == pytest.approx(basis05.beta)


def test_hopping_dominates_further_neighbors(basis05):
    om = np.abs(basis05.omega_hat)
    assert np.all(om[1:-1] > om[2:])  # geometric-style decay in n


def test_decay_slopes(basis05):
    rep = decay_diagnostics(basis05)
    logmu = np.log(basis05.mu)
    assert abs(rep.hopping_slope - logmu) / abs(logmu) < 0.25
    assert rep.tail_slope < 0.5 * logmu / 2  # tails fall at least like mu^(n/2)


def test_asymptotic_profile_support_and_norm():
    a = np.pi
    x = np.linspace(0.0, TWO_PI, 20001)
    prof = asymptotic_profile(1, a, x)
    assert np.all(prof[x < a - 1e-9] == 0.0)
    nrm = np.trapezoid(prof ** 2, x)
    assert nrm == pytest.approx(1.0, abs=1e-6)
    beta_lim = np.trapezoid(prof ** 4, x)
    assert beta_lim == pytest.approx(3.0 / TWO_PI, abs=1e-6)


def test_profile_error_decreases_with_eps(basis05):
    b25 = wannier_function(make_wall_potential(0.25, np.pi), 1)
    e05 = decay_diagnostics(basis05).profile_error
    e25 = decay_diagnostics(b25).profile_error
    assert e25 < e05


def test_overlap_kernel_onsite_dominates(basis05):
    onsite = overlap_kernel(basis05, 0, 0, 0, 0)
    assert onsite == pytest.approx(basis05.beta, rel=1e-10)
    cross = abs(overlap_kernel(basis05, 0, 0, 0, 1))
    assert cross < 0.05 * onsite


def test_grid_refinement_invariance(wall_V):
    b = wannier_function(wall_V, 1, 64, 64, 8)
    b_k = wannier_function(wall_V, 1, 128, 64, 8)
    b_x = wannier_function(wall_V, 1, 64, 128, 8)
    assert abs(b_k.alpha - b.alpha) / abs(b.alpha) < 1e-4
    assert abs(b_x.alpha - b.alpha) / abs(b.alpha) < 1e-4
    assert abs(b_k.beta - b.beta) / b.beta < 1e-4
    assert abs(b_x.beta - b.beta) / b.beta < 1e-4


def test_shifted_window(basis05):
    s1 = basis05.shifted(1)
    npp = basis05.N_x
    assert np.array_equal(s1[npp:], basis05.u0_values[:-npp])
