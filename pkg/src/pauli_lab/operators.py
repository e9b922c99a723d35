"""Discretized quadratic forms on the unit disk and their lowest eigenpairs.

Every form lives on the pulled-back unit disk.  Unknowns are nodal values on
a polar grid (one centre node plus ``N_r - 1`` interior rings of ``L`` nodes;
the outer ring carries the Dirichlet condition).  Derivatives are evaluated at
radial cell midpoints: a radial difference quotient, the two-point average for
undifferentiated values, and spectral differentiation in angle of the
averages.  ``L`` is odd, so the angular derivative has no Nyquist ambiguity.

Forms are stored in factored form ``S = G^H G + diag(shift)`` together with a
diagonal (lumped) mass, so Rayleigh quotients of tiny eigenvalues are formed
from squared norms rather than from differences of large numbers.
"""

from __future__ import annotations

import hashlib
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .potential import FluxPotential, radial_solve

log = logging.getLogger(__name__)

LAYER_NODES = 12  # minimum radial nodes inside the boundary layer


class SolverError(RuntimeError):
    """Eigen-solve failure or inconsistent request."""


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Polar tensor grid on the unit disk with radial nodes ``r[0] = 0 < ... < r[N] = 1``."""

    r: np.ndarray
    L: int

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r[0] != 0.0 or abs(r[-1] - 1.0) > 1e-15 or np.any(np.diff(r) <= 0):
            raise ValueError("radial nodes must increase from 0 to 1")
        if self.L < 3 or self.L % 2 == 0:
            raise ValueError(f"angular size must be odd and >= 3, got {self.L}")
        object.__setattr__(self, "r", r)

    @classmethod
    def uniform(cls, N: int, L: int) -> "PolarGrid":
        return cls(np.linspace(0.0, 1.0, N + 1), L)

    @classmethod
    def graded(cls, N: int, L: int, beta: float = 0.5) -> "PolarGrid":
        """Smooth grading ``r = (1-beta) xi + beta sin(pi xi / 2)``; spacing at r=1 shrinks by ``1-beta``."""
        if not 0.0 <= beta < 1.0:
            raise ValueError("grading parameter must lie in [0, 1)")
        xi = np.linspace(0.0, 1.0, N + 1)
        r = (1 - beta) * xi + beta * np.sin(0.5 * np.pi * xi)
        r[-1] = 1.0
        return cls(r, L)

    @property
    def N(self) -> int:
        return len(self.r) - 1

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.L) / self.L

    @property
    def dr(self) -> np.ndarray:
        return np.diff(self.r)

    @property
    def rmid(self) -> np.ndarray:
        return 0.5 * (self.r[1:] + self.r[:-1])

    @property
    def n(self) -> int:
        return 1 + (self.N - 1) * self.L

    def key(self) -> str:
        h = hashlib.sha256(self.r.tobytes() + str(self.L).encode()).hexdigest()
        return h[:16]

    def describe(self) -> str:
        return f"polar N_r={self.N} N_theta={self.L} dr_min={self.dr.min():.3g}"

    def node_coords(self):
        """``(rho, theta)`` of the unknowns, centre first, then ring by ring."""
        rho = np.concatenate([[0.0], np.repeat(self.r[1:-1], self.L)])
        th = np.concatenate([[0.0], np.tile(self.theta, self.N - 1)])
        return rho, th

    def mid_coords(self):
        rho = np.repeat(self.rmid, self.L)
        th = np.tile(self.theta, self.N)
        return rho, th

    def ring_areas(self) -> np.ndarray:
        """Area of the control volume of radial node ``j`` (j = 0..N-1), summed over angle."""
        edges = np.concatenate([[0.0], self.rmid])
        return np.pi * np.diff(edges**2)

    def node_areas(self) -> np.ndarray:
        a = self.ring_areas()
        return np.concatenate([[a[0]], np.repeat(a[1:] / self.L, self.L)])

    def mid_weights(self) -> np.ndarray:
        """Midpoint-rule weights ``r_mid * dr * 2pi/L`` for the cell-midpoint samples."""
        return np.repeat(self.rmid * self.dr * 2 * np.pi / self.L, self.L)

    def layer_nodes(self, width: float) -> int:
        return int(np.sum(self.r[:-1] > 1.0 - width))

    def difference_operators(self):
        """Sparse ``(Dr, Av)`` mapping unknowns to midpoint samples, and the angular block ``Dth``."""
        N, L = self.N, self.L
        rows, cols, dv, av = [], [], [], []
        dr = self.dr
        for j in range(N):
            for l in range(L):
                row = j * L + l
                for jj, sgn in ((j, -1.0), (j + 1, 1.0)):
                    if jj == N:
                        continue
                    c = 0 if jj == 0 else 1 + (jj - 1) * L + l
                    rows.append(row)
                    cols.append(c)
                    dv.append(sgn / dr[j])
                    av.append(0.5)
        shape = (N * L, self.n)
        Dr = sparse.csr_matrix((dv, (rows, cols)), shape=shape)
        Av = sparse.csr_matrix((av, (rows, cols)), shape=shape)
        Dth = sparse.block_diag([spectral_derivative_matrix(L)] * N, format="csr")
        return Dr, Av, Dth


def spectral_derivative_matrix(L: int) -> np.ndarray:
    """Fourier differentiation matrix on ``L`` (odd) equispaced nodes."""
    k = np.fft.fftfreq(L, d=1.0 / L)
    D = np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(L), axis=0), axis=0)
    return D.real


# ---------------------------------------------------------------------------
# forms


@dataclass(eq=False)
class DiscreteForm:
    """Quadratic form ``v -> |G v|^2 + sum(shift |v|^2)`` against the diagonal mass ``mass``.

    ``weight_exponent`` records the factor taken out of the exponential
    weight: the stored form equals the unshifted one times
    ``exp(weight_exponent)``.  Numerator and mass carry the same factor, so
    generalized eigenvalues are unaffected.
    """

    kind: str
    G: sparse.csr_matrix
    shift: np.ndarray
    mass: np.ndarray
    grid: PolarGrid
    h: float
    weight_exponent: float = 0.0
    potential: Optional[FluxPotential] = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.mass.size

    @property
    def S(self) -> sparse.csr_matrix:
        S = (self.G.conj().T @ self.G).tocsr()
        if np.any(self.shift):
            S = S + sparse.diags(self.shift)
        return S.tocsr()

    @property
    def M(self) -> sparse.dia_matrix:
        return sparse.diags(self.mass)

    def energy(self, V: np.ndarray) -> np.ndarray:
        V = np.asarray(V).reshape(self.n, -1)
        GV = self.G @ V
        return np.sum(np.abs(GV) ** 2, axis=0) + np.sum(self.shift[:, None] * np.abs(V) ** 2, axis=0)

    def norm2(self, V: np.ndarray) -> np.ndarray:
        V = np.asarray(V).reshape(self.n, -1)
        return np.sum(self.mass[:, None] * np.abs(V) ** 2, axis=0)

    def rayleigh(self, V: np.ndarray) -> np.ndarray:
        return self.energy(V) / self.norm2(V)

    def shifted(self, c: float, kind: Optional[str] = None) -> "DiscreteForm":
        """The same form plus ``c`` times the mass."""
        return DiscreteForm(
            kind or self.kind,
            self.G,
            self.shift + c * self.mass,
            self.mass,
            self.grid,
            self.h,
            self.weight_exponent,
            self.potential,
            dict(self.meta),
        )


def _weights(pot: FluxPotential, h: float, rho, th):
    phi = pot.phi_disk(rho, th)
    return np.exp(-2.0 * (phi - pot.phi_min) / h)


def _check_layer(pot: FluxPotential, h: float, grid: PolarGrid) -> None:
    width = h / float(np.min(pot.dn_disk))
    count = grid.layer_nodes(width)
    if count < LAYER_NODES:
        dr_needed = width / LAYER_NODES
        recommended = int(np.ceil(grid.N * grid.dr[-1] / dr_needed))
        warnings.warn(
            f"boundary layer of width {width:.3g} holds only {count} radial nodes at h={h}; "
            f"use N_r >= {recommended}",
            RuntimeWarning,
            stacklevel=3,
        )


def assemble_weighted_dbar(pot: FluxPotential, h: float, grid: PolarGrid) -> DiscreteForm:
    """``4 h^2 int w |d_zbar v|^2`` over ``int w |v|^2`` with ``w = exp(-2 (phi - phi_min)/h)``.

    On the disk the numerator is conformally invariant:
    ``h^2 int w |v_r + (i/r) v_theta|^2 r dr dtheta``; the mass picks up ``|F'|^2``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    _check_layer(pot, h, grid)
    Dr, Av, Dth = grid.difference_operators()
    rm, tm = grid.mid_coords()
    wm = _weights(pot, h, rm, tm)
    q = grid.mid_weights() * wm
    G = sparse.diags(h * np.sqrt(q)) @ (Dr + 1j * sparse.diags(1.0 / rm) @ Dth @ Av)
    rn, tn = grid.node_coords()
    mass = grid.node_areas() * pot.jacobian_disk(rn, tn) * _weights(pot, h, rn, tn)
    return DiscreteForm(
        "dbar",
        G.tocsr(),
        np.zeros(grid.n),
        mass,
        grid,
        float(h),
        2.0 * pot.phi_min / h,
        pot,
        {"grid": grid.describe()},
    )


def _pauli_factor(pot: FluxPotential, h: float, grid: PolarGrid, A_shift=(0.0, 0.0)):
    Dr, Av, Dth = grid.difference_operators()
    rm, tm = grid.mid_coords()
    gr, gt = pot.grad_disk(rm, tm)
    A_r, A_t = -gt + A_shift[0], gr + A_shift[1]
    sq = sparse.diags(np.sqrt(grid.mid_weights()))
    G1 = sq @ (-1j * h * Dr - sparse.diags(A_r) @ Av)
    G2 = sq @ (-1j * h * sparse.diags(1.0 / rm) @ Dth @ Av - sparse.diags(A_t) @ Av)
    return sparse.vstack([G1, G2]).tocsr()


def assemble_pauli_minus(pot: FluxPotential, h: float, grid: PolarGrid, spin_term: bool = True) -> DiscreteForm:
    """``|(p - A) u|^2 - h int B |u|^2`` with Dirichlet conditions and the plain L^2 mass.

    ``spin_term=False`` gives the magnetic Laplacian ``|p - A|^2``; the two
    differ by exactly ``h B`` times the mass when B is constant.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    _check_layer(pot, h, grid)
    G = _pauli_factor(pot, h, grid)
    rn, tn = grid.node_coords()
    mass = grid.node_areas() * pot.jacobian_disk(rn, tn)
    shift = -h * grid.node_areas() * pot.B_disk(rn, tn) if spin_term else np.zeros(grid.n)
    return DiscreteForm(
        "pauli-minus" if spin_term else "magnetic-laplacian",
        G,
        shift,
        mass,
        grid,
        float(h),
        0.0,
        pot,
        {"grid": grid.describe()},
    )


def assemble_magnetic_laplacian(pot: FluxPotential, h: float, grid: PolarGrid) -> DiscreteForm:
    return assemble_pauli_minus(pot, h, grid, spin_term=False)


def spin_bound_margin(pot: FluxPotential, h: float, grid: PolarGrid, V: np.ndarray) -> np.ndarray:
    """``|(p-A)u|^2 - h int B |u|^2`` per column of ``V``, normalised by the mass norm."""
    form = assemble_pauli_minus(pot, h, grid)
    return form.rayleigh(V)


# ---------------------------------------------------------------------------
# eigen-solves


@dataclass(eq=False)
class SpectralResult:
    """Lowest eigenpairs; eigenvalues stored as ``log|lambda|`` with a sign."""

    log_lambda: np.ndarray
    sign: np.ndarray
    vectors: Optional[np.ndarray]
    h: float
    k: int
    residuals: np.ndarray
    modes: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    form: Optional[DiscreteForm] = field(default=None, repr=False)

    @property
    def lambdas(self) -> np.ndarray:
        return self.sign * np.exp(self.log_lambda)

    def log10_lambda(self) -> np.ndarray:
        return self.log_lambda / np.log(10.0)

    def normalized(self, phi_min: float) -> np.ndarray:
        """``h^{k-1} exp(-2 phi_min / h) lambda_k`` computed in log space."""
        kk = np.arange(1, self.k + 1)
        return self.sign * np.exp(self.log_lambda + (kk - 1) * np.log(self.h) - 2 * phi_min / self.h)


def _angular_mode(grid: PolarGrid, v: np.ndarray, mass: np.ndarray) -> int:
    if grid.N < 2:
        return 0
    ring = v[1:].reshape(grid.N - 1, grid.L) * np.sqrt(mass[1:].reshape(grid.N - 1, grid.L))
    spec = np.sum(np.abs(np.fft.fft(ring, axis=1)) ** 2, axis=0)
    k = np.fft.fftfreq(grid.L, d=1.0 / grid.L).astype(int)
    spec[0] += np.abs(v[0]) ** 2 * mass[0] * grid.L
    return int(k[np.argmax(spec)])


def _finish(form, vals, vecs, k, method, extra=None) -> SpectralResult:
    lam = form.rayleigh(vecs)
    S = form.S
    MV = form.mass[:, None] * vecs
    res = np.linalg.norm(S @ vecs - lam[None, :] * MV, axis=0) / np.linalg.norm(MV, axis=0)
    modes = np.array([_angular_mode(form.grid, vecs[:, i], form.mass) for i in range(vecs.shape[1])])
    order = np.lexsort((np.abs(modes), lam))
    lam, vecs, res, modes = lam[order], vecs[:, order], res[order], modes[order]
    gaps = np.diff(lam) / np.maximum(np.abs(lam[1:]), 1e-300)
    degenerate = [int(i) for i in np.nonzero(gaps < 1e-10)[0]]
    diag = {"method": method, "raw": np.asarray(vals).tolist(), "near_degenerate": degenerate}
    if extra:
        diag.update(extra)
    if np.any(res > 1e-8):
        log.warning("eigen-residuals above 1e-8: %s", res)
    sign = np.where(lam < 0, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        loglam = np.log(np.abs(lam))
    return SpectralResult(loglam, sign, vecs, form.h, k, res, modes, diag, form)


def solve_lowest(form: DiscreteForm, k: int, method: str = "dense", seed: int = 0) -> SpectralResult:
    """``k`` smallest generalized eigenpairs of ``(S, M)`` with Rayleigh-quotient refinement.

    ``method`` is ``dense`` (full Hermitian solve) or ``iterative`` (shift-invert
    Lanczos from a start vector drawn with ``seed``, so reruns are bit-identical).
    """
    n = form.n
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the matrix dimension {n}")
    s = 1.0 / np.sqrt(form.mass)
    if method == "dense":
        A = form.S.toarray()
        A = s[:, None] * A * s[None, :]
        A = 0.5 * (A + A.conj().T)
        try:
            vals, Y = linalg.eigh(A, subset_by_index=[0, k - 1], driver="evr")
        except linalg.LinAlgError as exc:
            raise SolverError(f"dense eigensolver failed: {exc}") from exc
        vecs = s[:, None] * Y
        return _finish(form, vals, vecs, k, "dense")
    if method == "iterative":
        A = sparse.diags(s) @ form.S @ sparse.diags(s)
        A = A.tocsc()
        sigma = -1e-6 * max(form.h, 1e-12)
        try:
            v0 = np.random.default_rng(seed).standard_normal(n) + 0j
            vals, Y = splinalg.eigsh(A, k=k, sigma=sigma, which="LM", tol=1e-13, maxiter=5000, v0=v0)
        except splinalg.ArpackNoConvergence as exc:
            raise SolverError(f"shift-invert iteration did not converge: {exc}") from exc
        vecs = s[:, None] * Y
        return _finish(form, vals, vecs, k, "iterative")
    raise ValueError(f"unknown solver method {method!r}")


# ---------------------------------------------------------------------------
# radial oracle


def _radial_pieces(grid: PolarGrid, pot: FluxPotential, h: float):
    rm = grid.rmid
    wm = _weights(pot, h, rm, np.zeros_like(rm))
    rn = grid.r[:-1]
    wn = _weights(pot, h, rn, np.zeros_like(rn))
    jac = pot.jacobian_disk(rn, np.zeros_like(rn))
    return rm, wm, wn, jac


def radial_mode_matrices(grid: PolarGrid, pot: FluxPotential, h: float, m: int):
    """Bidiagonal factor ``G`` and mass for the single angular mode ``m`` (real arithmetic)."""
    N = grid.N
    rm, wm, wn, jac = _radial_pieces(grid, pot, h)
    dr = grid.dr
    first = 0 if m == 0 else 1
    idx = np.arange(first, N)
    n = idx.size
    G = np.zeros((N, n))
    q = h * np.sqrt(2 * np.pi * rm * dr * wm)
    for j in range(N):
        for jj, sgn in ((j, -1.0), (j + 1, 1.0)):
            if jj == N or jj < first:
                continue
            G[j, jj - first] = q[j] * (sgn / dr[j] - 0.5 * m / rm[j])
    mass = grid.ring_areas()[first:] * jac[first:] * wn[first:]
    return G, mass, idx


def radial_mode_solver(
    profile: Callable,
    R: float,
    h: float,
    k: int,
    modes: Sequence[int] = (-2, 6),
    grid: Optional[PolarGrid] = None,
    potential: Optional[FluxPotential] = None,
    max_retries: int = 2,
) -> SpectralResult:
    """Separated-variables solve of the weighted dbar form for radial fields.

    Each angular mode ``m`` gives ``h^2 int w |f' - (m/r) f|^2 r dr`` over
    ``int w |f|^2 r dr``; the spectra are merged and the ``k`` smallest kept.
    The mode window doubles when an extreme mode reaches the lowest ``k``.
    """
    pot = potential if potential is not None else radial_solve(profile, R)
    if grid is None:
        grid = PolarGrid.graded(96, 3)
    m_lo, m_hi = int(modes[0]), int(modes[1])
    for attempt in range(max_retries + 1):
        entries = []
        for m in range(m_lo, m_hi + 1):
            G, mass, _ = radial_mode_matrices(grid, pot, h, m)
            s = 1.0 / np.sqrt(mass)
            Gs = G * s[None, :]
            T = Gs.T @ Gs
            d, e = np.diag(T).copy(), np.diag(T, 1).copy()
            kk = min(k, d.size)
            vals, Y = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, kk - 1))
            V = s[:, None] * Y
            num = np.sum((G @ V) ** 2, axis=0)
            den = np.sum(mass[:, None] * V**2, axis=0)
            lam = num / den
            TV = T @ Y
            res = np.linalg.norm(TV - lam[None, :] * Y, axis=0)
            for i in range(kk):
                entries.append((lam[i], m, res[i]))
        entries.sort(key=lambda t: (t[0], abs(t[1])))
        low = entries[:k]
        used = {e[1] for e in low}
        if m_lo not in used and m_hi not in used:
            lam = np.array([e[0] for e in low])
            res = np.array([e[2] for e in low])
            mm = np.array([e[1] for e in low])
            return SpectralResult(
                np.log(lam),
                np.ones(k),
                None,
                float(h),
                k,
                res,
                mm,
                {"method": "radial-modes", "window": (m_lo, m_hi), "grid": grid.describe()},
            )
        width = m_hi - m_lo
        m_lo, m_hi = m_lo - width // 2 - 1, m_hi + width // 2 + 1
        log.info("mode window enlarged to [%d, %d]", m_lo, m_hi)
    raise SolverError(f"mode window [{modes[0]}, {modes[1]}] too small even after {max_retries} doublings")


# ---------------------------------------------------------------------------
# Cartesian identity checks


@dataclass(frozen=True)
class BumpSpinor:
    """Smooth compactly supported test function: ``bump(|x - c|/a) * polynomial``.

    ``coeffs`` are complex coefficients of ``(x1 - c1)^i (x2 - c2)^j`` with
    shape ``(n, n)``; a second set gives the lower spinor component.
    """

    center: tuple
    radius: float
    coeffs: np.ndarray
    coeffs2: Optional[np.ndarray] = None

    @classmethod
    def random(cls, rng: np.random.Generator, center=(0.0, 0.0), radius=0.5, degree=2, second=True):
        def draw():
            return rng.normal(size=(degree + 1, degree + 1)) + 1j * rng.normal(size=(degree + 1, degree + 1))

        return cls(tuple(center), float(radius), draw(), draw() if second else None)

    def _bump(self, x1, x2):
        s2 = ((x1 - self.center[0]) ** 2 + (x2 - self.center[1]) ** 2) / self.radius**2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s2 < 1.0, np.exp(-1.0 / np.maximum(1.0 - s2, 1e-300) + 1.0), 0.0)

    def _poly(self, c, x1, x2):
        return np.polynomial.polynomial.polyval2d(x1 - self.center[0], x2 - self.center[1], c)

    def __call__(self, x1, x2):
        b = self._bump(x1, x2)
        u1 = b * self._poly(self.coeffs, x1, x2)
        u2 = b * self._poly(self.coeffs2, x1, x2) if self.coeffs2 is not None else np.zeros_like(u1)
        return u1, u2


def _patch(pot: FluxPotential, u: BumpSpinor, n: int):
    c, a = u.center, u.radius
    ang = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    ring = complex(*c) + a * 1.02 * np.exp(1j * ang)
    y = ring / pot.cmap.coeffs[1] if pot.cmap.is_linear else pot.cmap.inverse(ring)
    if np.max(np.abs(y)) >= 1.0:
        raise ValueError("test function support touches the boundary")
    x = np.linspace(-a, a, n + 1)
    X1, X2 = np.meshgrid(c[0] + x, c[1] + x, indexing="ij")
    return X1, X2, x[1] - x[0]


def _d1(f, dx):
    return np.gradient(f, dx, axis=0)


def _d2(f, dx):
    return np.gradient(f, dx, axis=1)


def gauge_identity_residual(
    pot: FluxPotential, h: float, u: Optional[BumpSpinor], n: int = 64, A_shift=(0.0, 0.0)
) -> float:
    """Grid L^2 norm of ``e^{s3 phi/h} (s.p) e^{s3 phi/h} u - s.(p - A) u``.

    Derivatives are centred differences on an ``(n+1)^2`` Cartesian patch
    covering the support of ``u``; ``A_shift`` perturbs the vector potential
    (a wrong gauge that must not converge).
    """
    if u is None:
        return 0.0
    X1, X2, dx = _patch(pot, u, n)
    u1, u2 = u(X1, X2)
    phi = pot.phi(X1, X2)
    A1, A2 = pot.vector_potential(X1, X2)
    A1 = A1 + A_shift[0]
    A2 = A2 + A_shift[1]
    ep, em = np.exp(phi / h), np.exp(-phi / h)

    def dz(f):
        return 0.5 * (_d1(f, dx) - 1j * _d2(f, dx))

    def dzb(f):
        return 0.5 * (_d1(f, dx) + 1j * _d2(f, dx))

    lhs1 = ep * (-2j * h) * dz(em * u2)
    lhs2 = em * (-2j * h) * dzb(ep * u1)
    rhs1 = -2j * h * dz(u2) - A1 * u2 + 1j * A2 * u2
    rhs2 = -2j * h * dzb(u1) - A1 * u1 - 1j * A2 * u1
    res = np.abs(lhs1 - rhs1) ** 2 + np.abs(lhs2 - rhs2) ** 2
    return float(np.sqrt(np.sum(res) * dx**2))


@dataclass(frozen=True)
class CauchyRiemannGaps:
    plus: float  # |d u|^2 - (|(p-A)u|^2 + h int B|u|^2)
    minus: float  # |dx u|^2 - (|(p-A)u|^2 - h int B|u|^2)
    kinetic: float
    spin: float
    bound_holds: bool

    def as_pair(self):
        return self.plus, self.minus


def cr_energy_identity_gap(pot: FluxPotential, h: float, u: Optional[BumpSpinor], n: int = 64, tol: float = 1e-6):
    """Gaps in the two magnetic Cauchy-Riemann energy identities for a scalar ``u``."""
    if u is None:
        return CauchyRiemannGaps(0.0, 0.0, 0.0, 0.0, True)
    X1, X2, dx = _patch(pot, u, n)
    f, _ = u(X1, X2)
    A1, A2 = pot.vector_potential(X1, X2)
    B = pot.field(X1, X2)
    g1, g2 = _d1(f, dx), _d2(f, dx)
    P1 = -1j * h * g1 - A1 * f
    P2 = -1j * h * g2 - A2 * f
    dA = P1 - 1j * P2  # -2ih d_z - A1 + iA2
    dX = P1 + 1j * P2  # -2ih d_zbar - A1 - iA2
    w = dx**2
    kin = float(np.sum(np.abs(P1) ** 2 + np.abs(P2) ** 2) * w)
    spin = float(h * np.sum(B * np.abs(f) ** 2) * w)
    nd = float(np.sum(np.abs(dA) ** 2) * w)
    nx = float(np.sum(np.abs(dX) ** 2) * w)
    scale = max(kin, 1e-300)
    return CauchyRiemannGaps(nd - (kin + spin), nx - (kin - spin), kin, spin, kin >= spin - tol * scale)
