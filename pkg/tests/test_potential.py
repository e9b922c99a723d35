import numpy as np
import pytest
from scipy import integrate

from pauli_lab import potential as P
from pauli_lab.geometry import DomainSpec
from pauli_lab.potential import (
    MagneticField,
    PotentialError,
    boundary_normal_derivative,
    interior_flux,
    landscape,
    load_potential,
    radial_solve,
    save_potential,
    solve_flux_potential,
)

from conftest import DISK, STAR, one, quad_profile


def quad_phi(profile, r, R=1.0):
    """phi(r) = -int_r^R m(s)/s ds with m(s) = int_0^s t B(t) dt, by nested adaptive quadrature."""

    def m(s):
        return integrate.quad(lambda t: t * profile(t), 0, s, epsabs=1e-14, epsrel=1e-13)[0]

    return np.array([-integrate.quad(lambda s: m(s) / s, x, R, epsabs=1e-14, epsrel=1e-13)[0] for x in r])


RR = np.linspace(0.0, 1.0, 11)


def test_constant_field_closed_form(disk_const):
    p = disk_const
    np.testing.assert_allclose(p.phi_disk(RR, 0 * RR), (RR**2 - 1) / 4, atol=1e-12)
    assert abs(p.phi_min + 0.25) < 1e-12
    assert np.hypot(*p.x_min) < 1e-10
    np.testing.assert_allclose(p.hessian, 0.5 * np.eye(2), atol=1e-6)
    np.testing.assert_allclose(p.dn_phi, 0.5, atol=1e-12)
    assert abs(p.flux - 0.5) < 1e-12


def test_linear_scaling_B4():
    p = solve_flux_potential(DISK, MagneticField.constant(4.0), N_r=64, N_theta=16)
    assert abs(p.phi_min + 1) < 1e-10
    np.testing.assert_allclose(p.dn_phi, 2.0, atol=1e-10)
    assert abs(p.flux - 2) < 1e-10


def test_disk_radius_two():
    p = solve_flux_potential(DomainSpec(kind="disk", R=2.0, M=64), MagneticField.constant(1.0), N_r=64, N_theta=16)
    assert abs(p.phi_min + 1) < 1e-10
    assert np.hypot(*p.x_min) < 1e-8
    np.testing.assert_allclose(p.dn_phi, 1.0, atol=1e-10)


def test_quadratic_profile_against_quadrature(disk_quad):
    ref = quad_phi(quad_profile, RR)
    # closed form (r^2-1)/4 + (r^4-1)/16 agrees with the quadrature oracle
    np.testing.assert_allclose(ref, (RR**2 - 1) / 4 + (RR**4 - 1) / 16, atol=1e-12)
    assert np.max(np.abs(disk_quad.phi_disk(RR, 0.3 + 0 * RR) - ref)) < 1e-7
    assert abs(disk_quad.phi_min + 0.3125) < 1e-7
    np.testing.assert_allclose(disk_quad.hessian, 0.5 * np.eye(2), atol=1e-6)
    assert abs(disk_quad.flux - 0.75) < 1e-10


def test_second_order_without_extrapolation():
    f = MagneticField.radial(quad_profile)
    ref = quad_phi(quad_profile, RR)
    errs = []
    for N in (16, 32, 64):
        p = solve_flux_potential(DISK, f, N_r=N, N_theta=16, richardson=False)
        errs.append(np.max(np.abs(p.phi_disk(RR, 0 * RR) - ref)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9), orders


def test_radial_solve_examples():
    p = radial_solve(one)
    assert abs(p.phi_disk(np.array([0.0]), np.array([0.0]))[0] + 0.25) < 1e-12
    np.testing.assert_allclose(p.hessian, 0.5 * np.eye(2), atol=1e-14)
    q = radial_solve(lambda r: 2 * one(r))
    np.testing.assert_allclose(q.dn_phi, 1.0, atol=1e-12)


def test_radial_solve_nonpolynomial_profile():
    prof = lambda r: np.exp(-np.asarray(r) ** 2) + 0.5  # noqa: E731
    p = radial_solve(prof)
    x = np.array([0.0, 0.3, 0.7, 0.95])
    np.testing.assert_allclose(p.phi_disk(x, 0 * x), quad_phi(prof, x), atol=1e-11)


def test_radial_solve_radius():
    p = radial_solve(one, R=2.0)
    assert abs(p.phi_min + 1) < 1e-12
    assert abs(p.flux - 2) < 1e-12


def test_star_invariants(star_const):
    p = star_const
    inv = p.invariants()
    assert inv["flux_gap"] < 1e-6
    assert abs(p.flux - interior_flux(STAR, p.field)) < 1e-6
    assert inv["min_dn_phi"] > 0
    assert inv["interior_max"] < 0
    assert min(inv["hessian_eigs"]) > 0
    # boundary values vanish
    t = np.linspace(0, 2 * np.pi, 50)
    assert np.max(np.abs(p.phi_disk(np.ones_like(t), t))) < 1e-12


def test_star_minimum_stable_across_resolutions(star_const):
    q = solve_flux_potential(STAR, MagneticField.constant(1.0), N_r=64, N_theta=64)
    assert abs(q.phi_min - star_const.phi_min) < 1e-6
    assert np.hypot(*(q.x_min - star_const.x_min)) < 1e-5
    np.testing.assert_allclose(q.hessian, star_const.hessian, atol=1e-4)
    assert np.trace(star_const.hessian) == pytest.approx(1.0, abs=1e-10)


def test_gauge_curl_equals_field(star_const):
    p = star_const
    x = np.array([0.1, -0.3, 0.5])
    y = np.array([0.2, 0.1, -0.4])
    d = 1e-4
    A1p, _ = p.vector_potential(x, y + d)
    A1m, _ = p.vector_potential(x, y - d)
    _, A2p = p.vector_potential(x + d, y)
    _, A2m = p.vector_potential(x - d, y)
    curl = (A2p - A2m) / (2 * d) - (A1p - A1m) / (2 * d)
    np.testing.assert_allclose(curl, 1.0, atol=1e-5)


def test_physical_gradient_matches_difference(star_const):
    p = star_const
    x, y, d = 0.3, -0.2, 1e-5
    g1, g2 = p.grad(x, y)
    assert abs(g1 - (p.phi(x + d, y) - p.phi(x - d, y)) / (2 * d)) < 1e-7
    assert abs(g2 - (p.phi(x, y + d) - p.phi(x, y - d)) / (2 * d)) < 1e-7


def test_boundary_normal_derivative_without_interior_solve(star_const):
    dn = boundary_normal_derivative(STAR, MagneticField.constant(1.0), star_const.cmap, L=64)
    t = 2 * np.pi * np.arange(64) / 64
    np.testing.assert_allclose(dn, star_const.dn_disk_at(t), atol=1e-10)


def test_nonpositive_field_rejected():
    f = MagneticField.planar(lambda x1, x2: x1)
    with pytest.raises(PotentialError):
        solve_flux_potential(DISK, f, N_r=32, N_theta=16)


def test_two_wells_violate_uniqueness():
    def two_bumps(x1, x2):
        return 0.05 + 20 * (np.exp(-((x1 - 0.5) ** 2 + x2**2) / 0.01) + np.exp(-((x1 + 0.5) ** 2 + x2**2) / 0.01))

    with pytest.raises(PotentialError, match=r"assumption \(b\)"):
        solve_flux_potential(DISK, MagneticField.planar(two_bumps), N_r=64, N_theta=32)


def test_indefinite_hessian_detected(disk_const, monkeypatch):
    monkeypatch.setattr(P, "_quadratic_fit", lambda f, y, eta: (0.0, np.zeros(2), np.diag([10.0, -10.0])))
    with pytest.raises(PotentialError, match=r"assumption \(c\)"):
        landscape(disk_const)


def test_save_load_round_trip(star_const, tmp_path):
    path = tmp_path / "pot.npz"
    save_potential(star_const, path)
    q = load_potential(path, STAR, star_const.field)
    assert q.phi_min == star_const.phi_min
    np.testing.assert_array_equal(q.hessian, star_const.hessian)
    np.testing.assert_array_equal(q.dn_disk, star_const.dn_disk)
    r = np.linspace(0, 1, 7)
    np.testing.assert_array_equal(q.phi_disk(r, r), star_const.phi_disk(r, r))


def test_field_scaling():
    f = MagneticField.constant(1.0).scaled(3.0)
    assert f(0.2, 0.1) == pytest.approx(3.0)
