import numpy as np
import pytest
from scipy import sparse

from pauli_lab.operators import (
    BumpSpinor,
    DiscreteForm,
    PolarGrid,
    SolverError,
    assemble_magnetic_laplacian,
    assemble_pauli_minus,
    assemble_weighted_dbar,
    cr_energy_identity_gap,
    gauge_identity_residual,
    radial_mode_solver,
    solve_lowest,
    spectral_derivative_matrix,
    spin_bound_margin,
)

from conftest import one, quad_profile


def test_grid_validation():
    with pytest.raises(ValueError):
        PolarGrid.uniform(10, 8)
    with pytest.raises(ValueError):
        PolarGrid.graded(10, 9, beta=1.0)
    with pytest.raises(ValueError):
        PolarGrid(np.array([0.0, 0.6, 0.5, 1.0]), 5)


def test_grid_areas_and_grading():
    g = PolarGrid.graded(40, 9, 0.5)
    assert g.ring_areas().sum() == pytest.approx(np.pi * g.rmid[-1] ** 2, rel=1e-14)
    assert g.mid_weights().sum() == pytest.approx(np.pi, rel=1e-3)
    assert g.dr[-1] < g.dr[0]
    assert g.n == 1 + 39 * 9


def test_spectral_derivative_exact_on_trig():
    L = 9
    th = 2 * np.pi * np.arange(L) / L
    D = spectral_derivative_matrix(L)
    np.testing.assert_allclose(D @ np.sin(3 * th), 3 * np.cos(3 * th), atol=1e-12)


def _interior_rows(form):
    g = form.grid
    return slice(0, (g.N - 1) * g.L)


def test_constant_and_holomorphic_in_kernel(disk_const):
    g = PolarGrid.graded(32, 9, 0.5)
    form = assemble_weighted_dbar(disk_const, 0.3, g)
    rho, th = g.node_coords()
    scale = form.norm2(np.ones(g.n))[0]
    for v in (np.ones(g.n) + 0j, rho * np.exp(1j * th)):
        Gv = (form.G @ v)[_interior_rows(form)]
        assert np.sum(np.abs(Gv) ** 2) < 1e-20 * scale


def test_identity_pencil_gives_unit_eigenvalues():
    g = PolarGrid.uniform(6, 3)
    mass = np.linspace(1.0, 2.0, g.n)
    form = DiscreteForm("identity", sparse.diags(np.sqrt(mass)).tocsr(), np.zeros(g.n), mass, g, 1.0)
    r = solve_lowest(form, 4)
    np.testing.assert_allclose(r.lambdas, 1.0, rtol=1e-13)
    with pytest.raises(ValueError):
        solve_lowest(form, g.n + 1)
    with pytest.raises(ValueError):
        solve_lowest(form, 2, method="magic")


@pytest.mark.parametrize("method", ["dense", "iterative"])
def test_three_simple_eigenvalues_match_radial_oracle(disk_const, method):
    g = PolarGrid.graded(64, 17, 0.5)
    form = assemble_weighted_dbar(disk_const, 0.25, g)
    r = solve_lowest(form, 3, method)
    assert np.all(np.diff(r.lambdas) > 0)
    assert r.diagnostics["near_degenerate"] == []
    assert r.residuals.max() < 1e-8
    o = radial_mode_solver(one, 1.0, 0.25, 3, grid=g, potential=disk_const)
    np.testing.assert_allclose(r.lambdas, o.lambdas, rtol=1e-6)
    np.testing.assert_array_equal(np.abs(r.modes), np.abs(o.modes))


def test_iterative_is_deterministic(disk_const):
    g = PolarGrid.graded(48, 9, 0.5)
    form = assemble_weighted_dbar(disk_const, 0.2, g)
    a = solve_lowest(form, 3, "iterative", seed=7)
    b = solve_lowest(form, 3, "iterative", seed=7)
    np.testing.assert_array_equal(a.log_lambda, b.log_lambda)


def test_pauli_nonnegative_and_shift(disk_const):
    g = PolarGrid.graded(48, 9, 0.5)
    h = 0.2
    lam = solve_lowest(assemble_pauli_minus(disk_const, h, g), 3)
    mu = solve_lowest(assemble_magnetic_laplacian(disk_const, h, g), 3)
    assert lam.lambdas.min() >= -1e-12
    assert np.max(np.abs(mu.lambdas - lam.lambdas - h)) < 1e-13


def test_pauli_converges_to_dbar(disk_const):
    h = 0.2
    gaps = []
    for N in (24, 48, 96):
        g = PolarGrid.graded(N, 9, 0.5)
        a = solve_lowest(assemble_weighted_dbar(disk_const, h, g), 2, "iterative").lambdas
        b = solve_lowest(assemble_pauli_minus(disk_const, h, g), 2, "iterative").lambdas
        gaps.append(np.max(np.abs(a - b) / a))
    assert gaps[0] / gaps[1] >= 3.5 and gaps[1] / gaps[2] >= 3.5, gaps


def test_spin_bound_on_random_dirichlet_vectors(disk_quad):
    g = PolarGrid.graded(48, 9, 0.5)
    rng = np.random.default_rng(11)
    V = rng.normal(size=(g.n, 100)) + 1j * rng.normal(size=(g.n, 100))
    assert spin_bound_margin(disk_quad, 0.2, g, V).min() >= -1e-12


def test_layer_warning(disk_const):
    with pytest.warns(RuntimeWarning, match="N_r >="):
        assemble_weighted_dbar(disk_const, 0.02, PolarGrid.uniform(16, 3))


def test_radial_solver_window_and_ratio_trend():
    h = 0.1
    r = radial_mode_solver(one, 1.0, h, 4, modes=(-1, 1))
    assert r.diagnostics["window"][1] > 1  # window grew
    np.testing.assert_array_equal(r.modes, [0, 1, 2, 3])
    ratios = r.lambdas[1:] / r.lambdas[:-1]
    # radial constants give ratio h^{-1} / (2k); finite-h corrections stay within a factor 2
    ideal = 1.0 / (2 * h * np.arange(1, 4))
    assert np.all(ratios > 0.5 * ideal) and np.all(ratios < 2 * ideal)
    with pytest.raises(SolverError):
        radial_mode_solver(one, 1.0, h, 4, modes=(0, 1), max_retries=0)


def test_large_modes_not_selected():
    r = radial_mode_solver(quad_profile, 1.0, 0.2, 3, modes=(-10, 10))
    assert np.all(np.abs(r.modes) <= 2)


def test_gauge_identity_zero_and_refinement(disk_quad, star_const):
    assert gauge_identity_residual(disk_quad, 0.2, None) == 0.0
    u = BumpSpinor.random(np.random.default_rng(1), center=(0.1, -0.05), radius=0.6)
    for pot in (disk_quad, star_const):
        r = [gauge_identity_residual(pot, 0.2, u, n) for n in (64, 128)]
        assert r[0] / r[1] >= 3.5


def test_gauge_identity_negative_control(disk_quad):
    u = BumpSpinor.random(np.random.default_rng(1), center=(0.1, -0.05), radius=0.6)
    r = [gauge_identity_residual(disk_quad, 0.2, u, n, A_shift=(0.1, 0.0)) for n in (64, 128, 256)]
    assert r[2] > 0.5 * r[0] and r[2] > 1e-2


def test_support_touching_boundary_rejected(disk_const):
    u = BumpSpinor.random(np.random.default_rng(0), center=(0.6, 0.0), radius=0.5)
    with pytest.raises(ValueError, match="boundary"):
        gauge_identity_residual(disk_const, 0.2, u)


def test_cr_gaps_zero_and_refinement(disk_quad):
    assert cr_energy_identity_gap(disk_quad, 0.2, None).as_pair() == (0.0, 0.0)
    u = BumpSpinor.random(np.random.default_rng(2), center=(0.0, 0.1), radius=0.5, second=False)
    g = [cr_energy_identity_gap(disk_quad, 0.2, u, n) for n in (64, 128)]
    assert abs(g[0].plus / g[1].plus) >= 3.5
    assert abs(g[0].minus / g[1].minus) >= 3.5


def test_spin_bound_on_random_bumps(disk_quad):
    rng = np.random.default_rng(4)
    for _ in range(100):
        c = rng.uniform(-0.3, 0.3, 2)
        u = BumpSpinor.random(rng, center=tuple(c), radius=rng.uniform(0.1, 0.5), second=False)
        assert cr_energy_identity_gap(disk_quad, 0.2, u, n=32).bound_holds
