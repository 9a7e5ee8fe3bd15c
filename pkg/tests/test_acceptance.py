"""End-to-end acceptance checks for the tight-binding reduction laboratory.

Each test prints exactly one machine-readable line:

    ACCEPTANCE <nn> PASS|FAIL <name>: <measured values>

Criteria 9 and 11 share the session-scoped sweep fixture (the expensive
four-epsilon validation run); everything else builds its own inputs.
"""

import numpy as np
import pytest

from tbgp.dnls import LatticeState, dnls_evolve, single_site
from tbgp.floquet import build_band_table, discriminant, dispersion, monodromy
from tbgp.gp import FieldState, conserved_quantities, gp_evolve
from tbgp.potential import TWO_PI, PiecewisePotential, make_wall_potential, sample, small_parameter
from tbgp.validate import (
    ExperimentConfig,
    band_project,
    gronwall_constant,
    gronwall_diagnostic,
    solve_correction,
    synthesize_field,
)
from tbgp.wannier import band_fourier, decay_diagnostics, gram_matrix, wannier_function

ZERO_V = PiecewisePotential(period=TWO_PI, segments=((TWO_PI, 0.0),))


def _report(num: int, name: str, ok: bool, info: str):
    print(f"ACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'} {name}: {info}")
    assert ok, f"criterion {num} ({name}): {info}"


def test_01_free_potential_dispersion_oracle():
    worst = 0.0
    for omega in (0.1, 0.5, 2.0, 10.0):
        exact = 2.0 * np.cos(TWO_PI * np.sqrt(omega))
        worst = max(worst, abs(float(discriminant(ZERO_V, omega)) - exact))
    disp = dispersion(ZERO_V, 1, 0.25)
    derr = abs(disp - 0.0625)
    _report(
        1,
        "free_potential_oracle",
        worst < 1e-10 and derr < 1e-8,
        f"max_discriminant_err={worst:.3g} dispersion_err={derr:.3g}",
    )


def test_02_monodromy_determinant_unimodular():
    V = make_wall_potential(0.5, np.pi)
    rng = np.random.default_rng(0)
    omegas = rng.uniform(0.05, 40.0, size=1000)
    worst = max(abs(float(np.linalg.det(monodromy(V, w).astype(float))) - 1.0) for w in omegas)
    _report(2, "wronskian_unimodular", worst < 1e-10, f"max_|det-1|={worst:.3g}")


def test_03_wannier_orthonormality_with_quadrature_refinement(wall_V, basis05):
    n_range = range(-3, 4)
    err = float(np.abs(gram_matrix(basis05, n_range) - np.eye(7)).max())
    fine = wannier_function(wall_V, 1, N_k=2 * basis05.N_k)
    err2 = float(np.abs(gram_matrix(fine, n_range) - np.eye(7)).max())
    _report(
        3,
        "wannier_orthonormality",
        err < 1e-4 and err2 < 5e-5,
        f"gram_err(N_k=64)={err:.3g} gram_err(N_k=128)={err2:.3g}",
    )


def test_04_profile_converges_linearly_in_eps():
    errs = []
    for eps in (0.5, 0.25):
        basis = wannier_function(make_wall_potential(eps, np.pi), 1)
        errs.append(decay_diagnostics(basis).profile_error)
    ratio = errs[0] / errs[1]
    _report(
        4,
        "profile_linear_convergence",
        1.6 <= ratio <= 2.6,
        f"sup_err(0.5)={errs[0]:.3g} sup_err(0.25)={errs[1]:.3g} ratio={ratio:.3f}",
    )


def test_05_hopping_decay_rate_matches_small_parameter(basis05):
    slope = decay_diagnostics(basis05).hopping_slope
    target = np.log(small_parameter(0.5, np.pi))
    rel = abs(slope - target) / abs(target)
    _report(
        5,
        "tight_binding_decay",
        rel < 0.25,
        f"slope={slope:.4f} log_mu={target:.4f} rel_dev={rel:.3f}",
    )


def test_06_band_center_approaches_dirichlet_well_value():
    # Dirichlet well of width 2*pi - a = pi: lowest eigenvalue l^2 pi^2 / pi^2 = 1.
    devs = []
    for eps in (0.6, 0.5, 0.4, 0.3):
        table = build_band_table(make_wall_potential(eps, np.pi), 1)
        devs.append(abs(float(band_fourier(table, 1)[0]) - 1.0))
    mono = all(b < a for a, b in zip(devs, devs[1:]))
    _report(
        6,
        "band_center_limit",
        mono,
        "deviations=" + ",".join(f"{d:.4f}" for d in devs),
    )


def test_07_onsite_coefficient_approaches_sine_quartic_integral():
    # Limit profile sqrt(2/pi) sin(x) on the open half cell gives
    # beta -> (2/pi)^2 * integral sin^4 = 3/(2*pi).
    basis = wannier_function(make_wall_potential(0.3, np.pi), 1)
    target = 3.0 / TWO_PI
    dev = abs(basis.beta - target)
    _report(
        7,
        "onsite_coefficient_limit",
        dev < 0.05,
        f"beta(0.3)={basis.beta:.4f} target={target:.4f} |dev|={dev:.4f}",
    )


def test_08_solver_conservation_and_lattice_closed_form(wall_V, basis05):
    cfg = ExperimentConfig(eps_list=(0.5,))
    mu = basis05.mu
    lat = single_site(1.0, cfg.N_lat, basis05.alpha, basis05.beta, +1)
    field0 = synthesize_field(lat, basis05, mu, 0.0, cfg.N_d)
    _, cons = gp_evolve(field0, 1.0 / mu, 1e-3, wall_V)
    q0 = conserved_quantities(field0, wall_V).Q
    q_drift = max(abs(p.Q - q0) for p in cons) / q0

    e0 = conserved_quantities(field0, wall_V).E

    def e_drift(dt):
        _, c = gp_evolve(field0, 2.0, dt, wall_V)
        return abs(c[-1].E - e0)

    e_ratio = e_drift(5e-4) / e_drift(2.5e-4)

    beta, A, T = 0.35, 1.3, 1.0
    lat0 = LatticeState(single_site(A, 8, 0.0, beta, +1).amplitudes, 0.0, 0.0, beta, +1)
    final = dnls_evolve(lat0, T, 2.5e-4)[-1].amplitudes[8]
    lat_err = abs(final - A * np.exp(-1j * beta * A ** 2 * T))

    _report(
        8,
        "solver_validity",
        q_drift <= 1e-10 and 3.0 <= e_ratio <= 5.0 and lat_err <= 1e-10,
        f"Q_drift={q_drift:.3g} E_halving_ratio={e_ratio:.2f} lattice_err={lat_err:.3g}",
    )


def test_09_approximation_error_scales_as_mu_three_halves(sweep_report):
    slope = sweep_report.slope
    ratios = [r.ratio for r in sweep_report.records]
    spread = max(ratios) / min(ratios)
    _report(
        9,
        "error_scaling_law",
        slope is not None and 1.25 <= slope <= 1.75 and spread <= 3.0,
        f"slope={slope:.4f} ratio_spread={spread:.3f} "
        "ratios=" + ",".join(f"{r:.3f}" for r in ratios),
    )


def test_10_offband_correction_solve(wall_V, basis05):
    N_d = 24
    lat = single_site(1.0, N_d, basis05.alpha, basis05.beta, +1)
    f = synthesize_field(lat, basis05, 1.0, 0.0, N_d)
    src = FieldState(np.abs(f.values) ** 2 * f.values, 0.0, 1, N_d, basis05.N_x)
    rhs = src.values - band_project(src, basis05).values
    w0 = basis05.omega_hat[0]
    corr = solve_correction(src, wall_V, 1, w0)
    v = corr.values

    x, dx = src.x_grid, src.dx
    Vx = sample(wall_V, x)
    d2 = (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12 * dx * dx)
    res = np.abs(-d2 + (Vx[2:-2] - w0) * v[2:-2] - rhs[2:-2])
    xm = np.mod(x[2:-2], TWO_PI)
    away = np.minimum(np.abs(xm - np.pi), np.minimum(xm, TWO_PI - xm)) > 3 * dx
    rel_res = res[away].max() / np.abs(rhs).max()

    proj = band_project(corr, basis05).values
    ortho = np.linalg.norm(proj) / np.linalg.norm(v)
    _report(
        10,
        "correction_solve",
        rel_res < 1e-2 and ortho <= 1e-4,
        f"relative_residual={rel_res:.3g} band_leak={ortho:.3g}",
    )


def test_11_residual_series_stays_bounded(sweep_report):
    rec = next(r for r in sweep_report.records if abs(r.eps - 0.5) < 1e-12)
    cfg = sweep_report.config
    basis = wannier_function(
        make_wall_potential(rec.eps, cfg.a), cfg.l, cfg.N_k, cfg.N_x, cfg.N_w
    )
    series = gronwall_diagnostic(rec, basis, cfg)
    C_fit = gronwall_constant(series, rec, cfg.T0)
    ok = np.all(np.isfinite(series)) and C_fit <= 10.0
    _report(
        11,
        "gronwall_boundedness",
        ok,
        f"max={series.max():.4g} psi0={series[0]:.4g} fitted_C={C_fit:.3g}",
    )
