"""Gauge potential: the Dirichlet solution of ``Delta phi = B`` and its landscape.

The Poisson problem is solved on the unit disk after pulling back through the
conformal map ``F`` (``Delta phi_check = |F'|^2 B o F``) on a polar tensor grid:
FFT in angle, second-order finite volumes in radius.  The boundary normal
derivative is taken from the mode-wise Green identity
``phi_m'(1) = int_0^1 f_m(s) s^{|m|+1} ds`` evaluated with Gauss-Legendre
quadrature, which is spectrally accurate and independent of the radial grid.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, linalg
from scipy.interpolate import make_interp_spline

from .geometry import ConformalMap, DomainSpec, build_conformal_map

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
# stencil scale for quadratic fits around the minimum
FIT_STEP = np.sqrt(2 * np.sqrt(_EPS))


class PotentialError(RuntimeError):
    """Failed solve or violated landscape hypothesis."""


@dataclass(frozen=True, eq=False)
class MagneticField:
    """Positive magnetic field ``B(x1, x2)``.

    ``kind`` is one of ``constant``, ``radial`` (``profile(r)`` given) or
    ``expression`` (planar).  ``source`` keeps the text it came from.
    """

    kind: str
    func: Callable = field(repr=False)
    profile: Optional[Callable] = field(default=None, repr=False)
    value: Optional[float] = None
    source: str = ""

    @classmethod
    def constant(cls, value: float) -> "MagneticField":
        v = float(value)
        return cls("constant", lambda x1, x2: np.full(np.broadcast(x1, x2).shape, v),
                   lambda r: np.full(np.shape(r), v), v, repr(v))

    @classmethod
    def radial(cls, profile: Callable, source: str = "") -> "MagneticField":
        def func(x1, x2):
            return np.asarray(profile(np.hypot(x1, x2)), dtype=float) * np.ones(np.broadcast(x1, x2).shape)

        return cls("radial", func, profile, None, source)

    @classmethod
    def planar(cls, func: Callable, source: str = "") -> "MagneticField":
        def f(x1, x2):
            return np.asarray(func(x1, x2), dtype=float) * np.ones(np.broadcast(x1, x2).shape)

        return cls("expression", f, None, None, source)

    @property
    def is_radial(self) -> bool:
        return self.kind in ("constant", "radial")

    def __call__(self, x1, x2) -> np.ndarray:
        return self.func(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    def scaled(self, c: float) -> "MagneticField":
        if self.kind == "constant":
            return MagneticField.constant(c * self.value)
        if self.kind == "radial":
            prof = self.profile
            return MagneticField.radial(lambda r: c * prof(r), f"{c!r}*({self.source})")
        func = self.func
        return MagneticField.planar(lambda x1, x2: c * func(x1, x2), f"{c!r}*({self.source})")

    def key(self) -> str:
        return f"{self.kind}:{self.source}"

    def lower_bound(self, cmap: ConformalMap, n: int = 128) -> float:
        """Grid minimum of B over a dense polar sample of the closed domain."""
        rho = np.linspace(0.0, 1.0, n)
        ang = 2 * np.pi * np.arange(n) / n
        x = cmap(np.multiply.outer(rho, np.exp(1j * ang)))
        return float(np.min(self(x.real, x.imag)))


@dataclass(eq=False)
class FluxPotential:
    """Solved gauge potential with its landscape data.

    Disk-side accessors (``phi_disk``, ``grad_disk``) refer to the pulled-back
    potential ``phi o F`` on the unit disk; physical accessors take points of
    the domain.
    """

    cmap: ConformalMap
    field: MagneticField
    phi_min: float
    y_min: complex
    hessian: np.ndarray
    flux: float
    boundary_t: np.ndarray
    dn_disk: np.ndarray  # |F'| d_n phi o F at the boundary_t nodes
    _phi_disk: Callable = field(repr=False)
    _grad_disk: Callable = field(repr=False)
    _dn_series: Callable = field(repr=False)
    radial: bool = False
    diagnostics: dict = field(default_factory=dict)
    grid: Optional[dict] = field(default=None, repr=False)

    @property
    def z_min(self) -> complex:
        return complex(self.cmap(self.y_min))

    @property
    def x_min(self) -> np.ndarray:
        z = self.z_min
        return np.array([z.real, z.imag])

    @property
    def dn_phi(self) -> np.ndarray:
        """Physical normal derivative at the boundary points ``F(e^{it})``."""
        return self.dn_disk / np.abs(self.cmap.derivative(np.exp(1j * self.boundary_t)))

    @property
    def boundary_points(self) -> np.ndarray:
        return self.cmap(np.exp(1j * self.boundary_t))

    def phi_disk(self, rho, theta) -> np.ndarray:
        return self._phi_disk(np.asarray(rho, dtype=float), np.asarray(theta, dtype=float))

    def grad_disk(self, rho, theta):
        """``(d phi/d rho, (1/rho) d phi/d theta)`` of the pulled-back potential."""
        return self._grad_disk(np.asarray(rho, dtype=float), np.asarray(theta, dtype=float))

    def dn_disk_at(self, t) -> np.ndarray:
        return self._dn_series(np.asarray(t, dtype=float))

    def B_disk(self, rho, theta) -> np.ndarray:
        y = np.asarray(rho) * np.exp(1j * np.asarray(theta))
        x = self.cmap(y)
        return np.abs(self.cmap.derivative(y)) ** 2 * self.field(x.real, x.imag)

    def jacobian_disk(self, rho, theta) -> np.ndarray:
        """``|F'|^2`` at disk points."""
        y = np.asarray(rho) * np.exp(1j * np.asarray(theta))
        return np.abs(self.cmap.derivative(y)) ** 2

    def _to_disk(self, x1, x2):
        z = np.asarray(x1, dtype=float) + 1j * np.asarray(x2, dtype=float)
        y = z / self.cmap.coeffs[1] if self.cmap.is_linear else self.cmap.inverse(z)
        return y, np.abs(y), np.angle(y)

    def phi(self, x1, x2) -> np.ndarray:
        _, rho, th = self._to_disk(x1, x2)
        return self.phi_disk(np.minimum(rho, 1.0), th)

    def grad(self, x1, x2):
        y, rho, th = self._to_disk(x1, x2)
        gr, gt = self.grad_disk(np.minimum(rho, 1.0), th)
        gy = np.exp(1j * th) * (gr + 1j * gt)
        gx = gy / np.conj(self.cmap.derivative(y))
        return gx.real, gx.imag

    def vector_potential(self, x1, x2):
        """``A = (-d2 phi, d1 phi)``."""
        g1, g2 = self.grad(x1, x2)
        return -g2, g1

    def invariants(self) -> dict:
        d = dict(self.diagnostics)
        d.update(
            phi_min=self.phi_min,
            x_min=self.x_min.tolist(),
            min_dn_phi=float(np.min(self.dn_phi)),
            hessian_eigs=np.linalg.eigvalsh(self.hessian).tolist(),
            flux=self.flux,
        )
        return d


# ---------------------------------------------------------------------------
# finite-volume polar Poisson solver


def _mode_solve(f_modes: np.ndarray, N: int, L: int) -> np.ndarray:
    """Solve ``(1/r)(r u')' - m^2 u / r^2 = f_m`` on ``r_j = j/N`` with u(1)=0."""
    dr = 1.0 / N
    r = np.arange(N + 1) * dr
    m = np.abs(np.fft.fftfreq(L, d=1.0 / L))
    out = np.zeros((N + 1, L), dtype=complex)
    j = np.arange(1, N)
    rp = (j + 0.5) * dr
    rmn = (j - 0.5) * dr
    for col, mm in enumerate(m):
        # unknowns u_0 .. u_{N-1}
        ab = np.zeros((3, N), dtype=complex)
        rhs = f_modes[:N, col].astype(complex).copy()
        diag = np.empty(N)
        upper = np.zeros(N)
        lower = np.zeros(N)
        if mm == 0:
            diag[0] = -4.0 / dr**2
            upper[1] = 4.0 / dr**2  # coefficient of u_1 in row 0
        else:
            diag[0] = 1.0
            rhs[0] = 0.0
        diag[1:] = -(rp + rmn) / (r[j] * dr**2) - mm**2 / r[j] ** 2
        up = rp / (r[j] * dr**2)
        lo = rmn / (r[j] * dr**2)
        # row j couples to u_{j+1} (upper) and u_{j-1} (lower)
        upper[2:] = up[:-1]
        lower[:-1] = lo
        if mm != 0:
            lower[0] = 0.0
        ab[0] = upper
        ab[1] = diag
        ab[2] = lower
        try:
            out[:N, col] = linalg.solve_banded((1, 1), ab, rhs)
        except linalg.LinAlgError as exc:
            raise PotentialError(f"radial solve failed for mode {int(mm)}: {exc}") from exc
    return out


def _fd_residual(phi_modes: np.ndarray, f_modes: np.ndarray, N: int, L: int) -> float:
    dr = 1.0 / N
    r = np.arange(N + 1) * dr
    m = np.abs(np.fft.fftfreq(L, d=1.0 / L))
    u = phi_modes
    j = np.arange(1, N)
    lap = ((r[j] + dr / 2)[:, None] * (u[j + 1] - u[j]) - (r[j] - dr / 2)[:, None] * (u[j] - u[j - 1])) / (
        r[j][:, None] * dr**2
    ) - (m**2)[None, :] / r[j][:, None] ** 2 * u[j]
    res = lap - f_modes[j]
    vals = np.fft.ifft(res * L, axis=1)
    return float(np.max(np.abs(vals)))


def _source_on_grid(cmap: ConformalMap, field_: MagneticField, rho: np.ndarray, L: int) -> np.ndarray:
    theta = 2 * np.pi * np.arange(L) / L
    y = np.multiply.outer(rho, np.exp(1j * theta))
    x = cmap(y)
    return np.abs(cmap.derivative(y)) ** 2 * field_(x.real, x.imag)


def _mode_splines(r: np.ndarray, modes: np.ndarray):
    """Quintic splines of each Fourier mode, extended to negative radius by parity."""
    L = modes.shape[1]
    m = np.abs(np.fft.fftfreq(L, d=1.0 / L)).astype(int)
    parity = np.where(m % 2 == 0, 1.0, -1.0)
    rr = np.concatenate([-r[:0:-1], r])
    vals = np.concatenate([modes[:0:-1] * parity[None, :], modes], axis=0)
    return make_interp_spline(rr, vals, k=5, axis=0)


def _fourier_eval(coef: np.ndarray, theta: np.ndarray, L: int, derivative: int = 0) -> np.ndarray:
    k = np.fft.fftfreq(L, d=1.0 / L)
    mult = (1j * k) ** derivative
    if L % 2 == 0 and derivative:
        mult[L // 2] = 0.0  # the real part of the Nyquist term is cos(L theta / 2); its derivative is dropped
    return np.sum(coef * mult * np.exp(1j * k * theta[..., None]), axis=-1).real


def _fourier_uniform(coef: np.ndarray, M: int) -> np.ndarray:
    """``_fourier_eval`` at the ``M`` equispaced nodes ``2 pi j / M`` via one inverse FFT."""
    L = coef.size
    if L > M:
        return _fourier_eval(coef, 2 * np.pi * np.arange(M) / M, L)
    k = np.fft.fftfreq(L, d=1.0 / L).astype(int)
    padded = np.zeros(M, dtype=complex)
    np.add.at(padded, k % M, coef)
    return (np.fft.ifft(padded) * M).real


def _boundary_derivative_modes(cmap, field_, L: int, nq: int = 96) -> np.ndarray:
    s, w = np.polynomial.legendre.leggauss(nq)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    f = _source_on_grid(cmap, field_, s, L)
    fm = np.fft.fft(f, axis=1) / L
    m = np.abs(np.fft.fftfreq(L, d=1.0 / L))
    weights = w[:, None] * s[:, None] ** (m[None, :] + 1)
    return np.sum(fm * weights, axis=0)


def interior_flux(spec: DomainSpec, field_: MagneticField, nq: int = 64, ns: int = 256) -> float:
    """``(1/2pi) int_Omega B`` by polar quadrature in physical coordinates."""
    s = 2 * np.pi * np.arange(ns) / ns
    R = spec.radius_values(s)
    x, w = np.polynomial.legendre.leggauss(nq)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    rho = np.multiply.outer(R, x)  # (ns, nq)
    B = field_(rho * np.cos(s)[:, None], rho * np.sin(s)[:, None])
    inner = np.sum(B * rho * w[None, :], axis=1) * R
    return float(np.sum(inner) / ns)


def solve_flux_potential(
    spec: DomainSpec,
    field_: MagneticField,
    N_r: int = 128,
    N_theta: int = 64,
    cmap: Optional[ConformalMap] = None,
    richardson: bool = True,
    flux_tol: float = 1e-6,
) -> FluxPotential:
    """Solve ``Delta phi = B``, ``phi = 0`` on the boundary, and extract the landscape.

    With ``richardson`` the grid values are extrapolated from the ``N_r`` and
    ``2 N_r`` solutions (fourth order); otherwise they are the plain
    second-order finite-volume values.
    """
    if cmap is None:
        cmap = build_conformal_map(spec)
    B0 = field_.lower_bound(cmap)
    if not B0 > 0:
        raise PotentialError(f"magnetic field must be positive on the closed domain (min B = {B0:.3g})")
    L = int(N_theta)

    def solve(N):
        r = np.arange(N + 1) / N
        f = _source_on_grid(cmap, field_, r, L)
        fm = np.fft.fft(f, axis=1) / L
        u = _mode_solve(fm, N, L)
        return r, u, _fd_residual(u, fm, N, L)

    r, u, res = solve(N_r)
    if richardson:
        _, u2, res2 = solve(2 * N_r)
        u = (4 * u2[::2] - u) / 3
        res = max(res, res2)
    if not np.all(np.isfinite(u)):
        raise PotentialError(f"non-finite potential (residual {res:.3e})")

    Lg = max(L, 64)
    gm = _boundary_derivative_modes(cmap, field_, Lg)
    flux_i = interior_flux(spec, field_)
    diagnostics = dict(
        fd_residual=res,
        flux_interior=flux_i,
        B0=B0,
        grid=[int(N_r), L],
        richardson=bool(richardson),
    )
    pot = assemble_potential(spec, field_, cmap, r, u, gm, diagnostics)
    if pot.diagnostics["flux_gap"] > flux_tol * max(1.0, abs(flux_i)):
        log.warning("flux mismatch %.3e between interior and boundary integrals", pot.diagnostics["flux_gap"])
    return pot


def assemble_potential(
    spec: DomainSpec,
    field_: MagneticField,
    cmap: ConformalMap,
    r: np.ndarray,
    u: np.ndarray,
    gm: np.ndarray,
    diagnostics: dict,
    landscape_data: Optional[dict] = None,
) -> FluxPotential:
    """Build evaluators from radial nodes ``r``, angular modes ``u`` and boundary modes ``gm``.

    ``landscape_data`` (from a cache) skips the minimum search.
    """
    L = u.shape[1]
    Lg = gm.size
    spl = _mode_splines(r, u)
    dspl = spl.derivative()

    def phi_disk(rho, theta):
        return _fourier_eval(spl(rho), theta, L)

    def grad_disk(rho, theta):
        gr = _fourier_eval(dspl(rho), theta, L)
        gt = _fourier_eval(spl(rho), theta, L, derivative=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            gt = np.where(rho > 0, gt / np.where(rho > 0, rho, 1.0), 0.0)
        return gr, gt

    def dn_series(t):
        return _fourier_eval(gm, t, Lg)

    M = spec.M
    t_nodes = 2 * np.pi * np.arange(M) / M
    flux_b = float(gm[0].real)
    grid_vals = np.fft.ifft(u * L, axis=1).real
    pot = FluxPotential(
        cmap=cmap,
        field=field_,
        phi_min=0.0,
        y_min=0j,
        hessian=np.eye(2),
        flux=flux_b,
        boundary_t=t_nodes,
        dn_disk=_fourier_uniform(gm, M),
        _phi_disk=phi_disk,
        _grad_disk=grad_disk,
        _dn_series=dn_series,
        radial=bool(spec.is_disk and field_.is_radial),
        grid={"r": r, "L": L, "values": grid_vals, "modes": u, "boundary_modes": gm},
    )
    if landscape_data is None:
        _check_boundary(pot, dn_series)
        y_min, phi_min, hess_disk = landscape(pot)
        hessian = _physical_hessian(cmap, y_min, hess_disk)
    else:
        y_min = complex(*landscape_data["y_min"])
        phi_min = float(landscape_data["phi_min"])
        hessian = np.array(landscape_data["hessian"])
    pot.y_min, pot.phi_min, pot.hessian = y_min, phi_min, hessian
    interior_max = float(np.max(grid_vals[:-1]))
    pot.diagnostics.update(diagnostics)
    flux_i = diagnostics.get("flux_interior", flux_b)
    pot.diagnostics.update(
        flux_boundary=flux_b,
        flux_gap=abs(flux_i - flux_b),
        boundary_max_abs=float(np.max(np.abs(grid_vals[-1]))),
        interior_max=interior_max,
    )
    if interior_max >= 0:
        raise PotentialError("maximum principle violated: phi >= 0 at an interior node")
    return pot


def save_potential(pot: FluxPotential, path) -> None:
    """Write the gridded solution (modes, boundary modes, landscape, map) to an ``.npz`` file."""
    if pot.grid is None:
        raise PotentialError("only gridded potentials can be saved")
    meta = {
        "diagnostics": pot.diagnostics,
        "landscape": {
            "y_min": [pot.y_min.real, pot.y_min.imag],
            "phi_min": pot.phi_min,
            "hessian": pot.hessian.tolist(),
        },
        "cmap": {"c1": pot.cmap.c1, "c2": pot.cmap.c2, "residual": pot.cmap.residual,
                 "iterations": pot.cmap.iterations},
    }
    np.savez(
        path,
        r=pot.grid["r"],
        modes=pot.grid["modes"],
        boundary_modes=pot.grid["boundary_modes"],
        cmap=pot.cmap.coeffs,
        meta=np.array(json.dumps(meta)),
    )


def load_potential(path, spec: DomainSpec, field_: MagneticField) -> FluxPotential:
    with np.load(path) as data:
        meta = json.loads(str(data["meta"]))
        c = meta["cmap"]
        cmap = ConformalMap(data["cmap"], c["c1"], c["c2"], c["residual"], c.get("iterations", 0))
        return assemble_potential(
            spec, field_, cmap, data["r"], data["modes"], data["boundary_modes"],
            meta["diagnostics"], meta["landscape"],
        )


def boundary_normal_derivative(spec: DomainSpec, field_: MagneticField, cmap: Optional[ConformalMap] = None,
                               L: int = 64) -> np.ndarray:
    """``|F'| d_n phi o F`` on ``L`` circle nodes without solving the interior problem."""
    cmap = cmap or build_conformal_map(spec)
    gm = _boundary_derivative_modes(cmap, field_, L)
    return _fourier_eval(gm, 2 * np.pi * np.arange(L) / L, L)


def _check_boundary(pot: FluxPotential, dn_series: Callable) -> None:
    dmin = float(np.min(_fourier_uniform(pot.grid["boundary_modes"], 8 * len(pot.boundary_t))))
    if not dmin > 0:
        raise PotentialError(
            f"Hopf check failed: normal derivative of phi is not positive on the boundary (min {dmin:.3e}); "
            "the solve is inconsistent with B > 0"
        )


def _physical_hessian(cmap: ConformalMap, y: complex, hess_disk: np.ndarray) -> np.ndarray:
    # at a critical point Hess phi = J^T Hess phi_check J with J the Jacobian of F^{-1}
    gp = 1.0 / complex(cmap.derivative(y))
    J = np.array([[gp.real, -gp.imag], [gp.imag, gp.real]])
    H = J.T @ hess_disk @ J
    return 0.5 * (H + H.T)


def _quadratic_fit(fun: Callable, y0: np.ndarray, eta: float):
    offs = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float) * eta
    pts = y0[None, :] + offs
    vals = fun(pts[:, 0], pts[:, 1])
    dx, dy = offs[:, 0], offs[:, 1]
    A = np.column_stack([np.ones(9), dx, dy, 0.5 * dx**2, dx * dy, 0.5 * dy**2])
    c, *_ = np.linalg.lstsq(A, vals, rcond=None)
    g = c[1:3]
    H = np.array([[c[3], c[4]], [c[4], c[5]]])
    return c[0], g, H


def landscape(pot: FluxPotential, uniqueness_ratio: float = 0.99):
    """Minimum point (disk coordinates), minimum value and disk-side Hessian.

    Grid argmin, then Newton steps on local quadratic fits with
    Richardson-extrapolated Hessians.  A second deep grid minimum (below
    ``uniqueness_ratio * phi_min``) or a non positive-definite Hessian raises.
    """
    grid = pot.grid
    if grid is None:
        raise PotentialError("landscape needs a gridded potential")
    r, L, vals = grid["r"], grid["L"], grid["values"]
    theta = 2 * np.pi * np.arange(L) / L
    j, l = np.unravel_index(np.argmin(vals), vals.shape)
    y = np.array([r[j] * np.cos(theta[l]), r[j] * np.sin(theta[l])])

    def f(y1, y2):
        return pot.phi_disk(np.hypot(y1, y2), np.arctan2(y2, y1))

    eta = FIT_STEP
    for _ in range(30):
        _, g, H = _quadratic_fit(f, y, eta)
        step = np.linalg.solve(H, g)
        y = y - step
        if np.linalg.norm(step) < 1e-13:
            break
    if np.hypot(*y) >= 1.0:
        raise PotentialError("minimum drifted to the boundary")
    v1, _, H1 = _quadratic_fit(f, y, eta)
    _, _, H2 = _quadratic_fit(f, y, eta / 2)
    H = (4 * H2 - H1) / 3
    H = 0.5 * (H + H.T)
    # the trace is fixed by the equation itself; only the traceless part comes from the fit
    lap = float(pot.B_disk(np.hypot(*y), np.arctan2(y[1], y[0])))
    H = H + (0.5 * lap - 0.5 * np.trace(H)) * np.eye(2)
    if np.min(np.linalg.eigvalsh(H)) <= 0:
        raise PotentialError("assumption (c) violated: Hessian at the minimum is not positive definite")
    phi_min = float(f(np.array([y[0]]), np.array([y[1]]))[0])
    _check_unique(r, theta, vals, phi_min, complex(*y), uniqueness_ratio)
    return complex(y[0], y[1]), phi_min, H


def _check_unique(r, theta, vals, phi_min, y_min, ratio):
    N1, L = vals.shape
    dr = r[1] - r[0]
    cands = []
    for j in range(1, N1 - 1):
        row = vals[j]
        left, right = np.roll(row, 1), np.roll(row, -1)
        inner = vals[j - 1] if j > 1 else np.full(L, vals[0, 0])
        outer = vals[j + 1]
        mask = (row <= left) & (row <= right) & (row <= inner) & (row <= outer)
        for l in np.nonzero(mask)[0]:
            cands.append((r[j] * np.exp(1j * theta[l]), row[l]))
    if vals[0, 0] <= vals[1].min():
        cands.append((0j, vals[0, 0]))
    for pos, v in cands:
        if v <= ratio * phi_min and abs(pos - y_min) > 3 * dr + 2 * np.pi * abs(pos) / L:
            raise PotentialError(
                "assumption (b) violated at this resolution: second minimum "
                f"{v:.6g} at {pos:.4g} (global {phi_min:.6g})"
            )


# ---------------------------------------------------------------------------
# radial oracle


class _RadialProfile:
    """Adaptive quadrature for ``phi(r) = -int_r^R m(p)/p dp`` with ``m(p) = int_0^p s B(s) ds``.

    Integrating by parts turns the nested integral into single ones,
    ``phi(r) = m(r) log r - m(R) log R + int_r^R s B(s) log s ds``, which are
    accumulated piecewise between the sorted evaluation radii and cached.
    """

    def __init__(self, profile: Callable, R: float, epsabs: float = 1e-15, epsrel: float = 1e-13):
        self.B = lambda s: float(np.asarray(profile(np.asarray(s, dtype=float))))
        self.R = float(R)
        self.kw = dict(epsabs=epsabs, epsrel=epsrel, limit=200)
        # knots: radius -> (m(r), int_r^R s B log s ds)
        self._knots = {self.R: (self._quad(lambda s: s * self.B(s), 0.0, self.R), 0.0)}
        self.mass_R = self._knots[self.R][0]

    def _quad(self, fn, a, b):
        if a == b:
            return 0.0
        val, err = integrate.quad(fn, a, b, **self.kw)
        if not np.isfinite(val) or err > 1e-10 * max(1.0, abs(val)):
            raise PotentialError(f"radial quadrature did not converge on [{a}, {b}] (err {err:.2e})")
        return val

    def _ensure(self, radii: np.ndarray) -> None:
        new = sorted(set(float(p) for p in radii) - set(self._knots))
        if not new:
            return
        known = np.array(sorted(self._knots))
        for p in new[::-1]:
            # nearest known knot above p
            above = float(known[np.searchsorted(known, p)])
            m_a, t_a = self._knots[above]
            dm = self._quad(lambda s: s * self.B(s), p, above)
            dt = self._quad(lambda s: s * self.B(s) * np.log(s) if s > 0 else 0.0, p, above)
            self._knots[p] = (m_a - dm, t_a + dt)
            known = np.insert(known, np.searchsorted(known, p), p)

    def m(self, p: float) -> float:
        self._ensure(np.array([p]))
        return self._knots[float(p)][0]

    def phi(self, r: np.ndarray) -> np.ndarray:
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.R)
        flat = r.ravel()
        self._ensure(flat)
        out = np.empty(flat.size)
        logR = np.log(self.R)
        for i, p in enumerate(flat):
            m_p, t_p = self._knots[float(p)]
            out[i] = (m_p * np.log(p) if p > 0 else 0.0) - self.mass_R * logR + t_p
        return out.reshape(r.shape)

    def dphi(self, r: np.ndarray) -> np.ndarray:
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.R)
        flat = r.ravel()
        self._ensure(flat)
        vals = np.array([self._knots[float(p)][0] / p if p > 0 else 0.0 for p in flat])
        return vals.reshape(r.shape)


def radial_solve(profile: Callable, R: float = 1.0, M: int = 256) -> FluxPotential:
    """Quadrature oracle for a radial field on the disk of radius ``R``."""
    B_centre = float(np.asarray(profile(np.asarray(0.0))))
    if B_centre <= 0:
        raise PotentialError("radial profile must be positive")
    rp = _RadialProfile(profile, R)
    cmap = ConformalMap(np.array([0.0, R], dtype=complex), R, R, 0.0)

    def phi_disk(rho, theta):
        return rp.phi(R * np.asarray(rho)) * np.ones(np.broadcast(rho, theta).shape)

    def grad_disk(rho, theta):
        g = R * rp.dphi(R * np.asarray(rho)) * np.ones(np.broadcast(rho, theta).shape)
        return g, np.zeros_like(g)

    dn_val = R * rp.mass_R / R  # |F'| * m(R)/R

    def dn_series(t):
        return np.full(np.shape(t), dn_val)

    t_nodes = 2 * np.pi * np.arange(M) / M
    phi0 = float(rp.phi(np.array([0.0]))[0])
    return FluxPotential(
        cmap=cmap,
        field=MagneticField.radial(profile),
        phi_min=phi0,
        y_min=0j,
        hessian=0.5 * B_centre * np.eye(2),
        flux=rp.mass_R,
        boundary_t=t_nodes,
        dn_disk=dn_series(t_nodes),
        _phi_disk=phi_disk,
        _grad_disk=grad_disk,
        _dn_series=dn_series,
        radial=True,
        diagnostics={"oracle": "radial-quadrature"},
    )
