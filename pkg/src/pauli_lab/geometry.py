"""Planar domains, their boundary quadrature, conformal maps onto them and
tubular (collar) coordinates.

Three domain kinds are supported: the unit disk, a disk of radius ``R`` and a
smooth star-like domain ``{rho e^{is} : rho < r(s)}`` described by a positive
periodic radius function.  Every domain carries a conformal map
``F : D(0,1) -> Omega`` with ``F(0) = 0`` and ``F'(0) > 0``; for star-like
domains it is computed by Theodorsen's iteration on the boundary
correspondence.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

KINDS = ("unit-disk", "disk", "star-like")
_ALIASES = {"star": "star-like"}


class GeometryError(ValueError):
    """Raised for invalid domain descriptions or failed geometric constructions."""


class ConformalMapError(GeometryError):
    """Theodorsen iteration did not converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


class PeriodicSeries:
    """Trigonometric interpolant of equispaced samples on ``[0, period)``."""

    def __init__(self, samples: np.ndarray, period: float = 2 * np.pi):
        samples = np.asarray(samples)
        n = samples.shape[0]
        self.period = period
        self.n = n
        self.coeffs = np.fft.fft(samples, axis=0) / n
        k = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            # split the Nyquist mode so derivatives of real data stay real
            k[n // 2] = 0.0
            self.coeffs = self.coeffs.copy()
            nyq = self.coeffs[n // 2]
            self.coeffs[n // 2] = 0.0
            self._nyq = nyq
        else:
            self._nyq = None
        self.k = k
        self.real = np.isrealobj(samples)

    def __call__(self, x, derivative: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        omega = 2 * np.pi / self.period
        phase = np.exp(1j * omega * np.multiply.outer(x, self.k))
        factor = (1j * omega * self.k) ** derivative
        out = phase @ (self.coeffs * factor)
        if self._nyq is not None:
            m = self.n // 2
            ang = omega * m * x
            # cos(m w x) keeps the samples exact at the nodes
            if derivative % 4 == 0:
                term = np.cos(ang)
            elif derivative % 4 == 1:
                term = -np.sin(ang)
            elif derivative % 4 == 2:
                term = -np.cos(ang)
            else:
                term = np.sin(ang)
            out = out + self._nyq * term * (omega * m) ** derivative
        return out.real if self.real else out


@dataclass(frozen=True)
class DomainSpec:
    """Description of the domain Omega.

    ``radius`` is a vectorised callable of the polar angle ``s`` (star-like
    kind only); ``radius_expr`` is the source text it was compiled from, used
    for hashing.  ``M`` is the number of boundary nodes and must be even.
    """

    kind: str = "unit-disk"
    R: float = 1.0
    radius: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    radius_expr: Optional[str] = None
    M: int = 256

    def __post_init__(self):
        object.__setattr__(self, "kind", _ALIASES.get(self.kind, self.kind))
        if self.kind not in KINDS:
            raise GeometryError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if not (isinstance(self.M, (int, np.integer)) and self.M > 0 and self.M % 2 == 0):
            raise GeometryError(f"boundary resolution M must be a positive even integer, got {self.M!r}")
        if self.kind == "unit-disk" and self.R != 1.0:
            raise GeometryError("unit-disk has R = 1")
        if self.R <= 0:
            raise GeometryError(f"disk radius must be positive, got {self.R}")
        if self.kind == "star-like":
            if self.radius is None:
                raise GeometryError("star-like domain requires a radius function r(s)")
            s = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
            r = np.asarray(self.radius(s), dtype=float) * np.ones_like(s)
            if not np.all(np.isfinite(r)) or np.min(r) <= 0:
                raise GeometryError(f"radius function must be positive; min r(s) = {np.min(r):.3g}")

    @property
    def is_disk(self) -> bool:
        return self.kind in ("unit-disk", "disk")

    def radius_values(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.is_disk:
            return np.full_like(s, self.R)
        return np.asarray(self.radius(s), dtype=float) * np.ones_like(s)

    def key(self) -> str:
        text = f"{self.kind}|{self.R!r}|{self.radius_expr}|{self.M}"
        if self.kind == "star-like" and self.radius_expr is None:
            # no source text: hash samples instead
            s = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
            text += "|" + np.asarray(self.radius_values(s)).tobytes().hex()
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class BoundaryNodes:
    points: np.ndarray  # (M, 2)
    normals: np.ndarray  # outward unit normals, (M, 2)
    s: np.ndarray  # arclength coordinate of each node
    weights: np.ndarray  # arclength quadrature weights
    theta: np.ndarray  # polar angle of each node
    length: float

    @property
    def z(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]


def _fine_size(M: int) -> int:
    return int(max(8 * M, 2048))


def _star_series(spec: DomainSpec) -> PeriodicSeries:
    n = _fine_size(spec.M)
    theta = 2 * np.pi * np.arange(n) / n
    return PeriodicSeries(spec.radius_values(theta))


def _arclength_map(rs: PeriodicSeries):
    """Return (s(theta) callable, speed callable, total length)."""

    def speed(theta):
        r = rs(theta)
        dr = rs(theta, 1)
        return np.sqrt(r * r + dr * dr)

    n = rs.n
    theta = 2 * np.pi * np.arange(n) / n
    sig = PeriodicSeries(speed(theta))
    c0 = sig.coeffs[0].real
    k = sig.k
    nz = k != 0
    ck = np.where(nz, sig.coeffs / np.where(nz, 1j * k, 1.0), 0.0)
    offset = -ck.sum()

    def s_of(th):
        th = np.asarray(th, dtype=float)
        val = np.exp(1j * np.multiply.outer(th, k)) @ ck + offset
        if sig._nyq is not None:
            m = n // 2
            val = val + sig._nyq * np.sin(m * th) / m
        return c0 * th + val.real

    return s_of, speed, 2 * np.pi * c0


def build_domain(spec: DomainSpec) -> BoundaryNodes:
    """Boundary nodes equispaced in arclength, with outward normals."""
    M = spec.M
    if spec.is_disk:
        R = spec.R
        theta = 2 * np.pi * np.arange(M) / M
        pts = R * np.column_stack([np.cos(theta), np.sin(theta)])
        normals = np.column_stack([np.cos(theta), np.sin(theta)])
        L = 2 * np.pi * R
        s = L * np.arange(M) / M
        return BoundaryNodes(pts, normals, s, np.full(M, L / M), theta, L)

    rs = _star_series(spec)
    s_of, speed, L = _arclength_map(rs)
    target = L * np.arange(M) / M
    theta = 2 * np.pi * np.arange(M) / M
    for _ in range(50):
        step = (s_of(theta) - target) / speed(theta)
        theta = theta - step
        if np.max(np.abs(step)) < 1e-15:
            break
    r = spec.radius_values(theta)
    dr = rs(theta, 1)
    c, si = np.cos(theta), np.sin(theta)
    pts = np.column_stack([r * c, r * si])
    tang = np.column_stack([dr * c - r * si, dr * si + r * c])
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    normals = np.column_stack([tang[:, 1], -tang[:, 0]])
    return BoundaryNodes(pts, normals, target, np.full(M, L / M), theta, L)


def _conjugate(u: np.ndarray) -> np.ndarray:
    """Periodic conjugate function (Hilbert transform) of equispaced samples."""
    n = u.shape[0]
    c = np.fft.fft(u)
    k = np.fft.fftfreq(n, d=1.0 / n)
    c = -1j * np.sign(k) * c
    if n % 2 == 0:
        c[n // 2] = 0.0
    return np.fft.ifft(c).real


@dataclass(frozen=True)
class ConformalMap:
    """Taylor representation of ``F : D(0,1) -> Omega``."""

    coeffs: np.ndarray  # F(z) = sum_n coeffs[n] z^n
    c1: float
    c2: float
    residual: float
    iterations: int = 0

    def __call__(self, z) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), self.coeffs)

    def derivative(self, z) -> np.ndarray:
        d = self.coeffs[1:] * np.arange(1, len(self.coeffs))
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), d)

    def inverse(self, x, tol: float = 1e-14, max_iter: int = 60) -> np.ndarray:
        """Solve ``F(w) = x`` by Newton's method, starting from ``x / F'(0)``."""
        x = np.asarray(x, dtype=complex)
        w = x / self.coeffs[1]
        for _ in range(max_iter):
            step = (self(w) - x) / self.derivative(w)
            w = w - step
            if np.all(np.abs(step) < tol):
                break
        return w

    @property
    def is_linear(self) -> bool:
        return len(self.coeffs) == 2 and self.coeffs[0] == 0


def build_conformal_map(
    spec: DomainSpec,
    N: Optional[int] = None,
    tol: float = 1e-12,
    max_iter: int = 500,
    residual_tol: float = 1e-8,
) -> ConformalMap:
    """Conformal map of the unit disk onto the domain.

    For star-like domains the boundary correspondence ``theta(t) = t + eps(t)``
    is the fixed point of ``eps = K[log r(t + eps)]`` with ``K`` the periodic
    conjugate function, which is then extended as ``F(z) = z exp(g(z))``.
    """
    if spec.is_disk:
        R = float(spec.R)
        return ConformalMap(np.array([0.0, R], dtype=complex), R, R, 0.0, 0)

    M = spec.M
    t = 2 * np.pi * np.arange(M) / M
    eps = np.zeros(M)
    change = np.inf
    it = 0
    history = []
    for it in range(1, max_iter + 1):
        new = _conjugate(np.log(spec.radius_values(t + eps)))
        change = np.max(np.abs(new - eps))
        eps = new
        history.append(change)
        if change < tol:
            break
        if it > 20 and change > 0.5 * history[-20] and change > 1e3 * tol:
            raise ConformalMapError("Theodorsen iteration does not contract", change)
    else:
        raise ConformalMapError("Theodorsen iteration did not converge", change)

    a = np.fft.fft(np.log(spec.radius_values(t + eps))) / M
    kmax = M // 2
    gcoef = np.zeros(kmax, dtype=complex)
    gcoef[0] = a[0].real
    gcoef[1:] = 2 * a[1:kmax]
    # sample F on the circle and read off its Taylor coefficients
    z = np.exp(1j * t)
    Fz = z * np.exp(np.polynomial.polynomial.polyval(z, gcoef))
    c = np.fft.fft(Fz) / M
    taylor = c[: kmax]
    ncoef = len(taylor) if N is None else min(int(N) + 1, len(taylor))
    taylor = taylor[:ncoef].copy()
    taylor[0] = 0.0
    scale = np.max(np.abs(taylor))
    if np.abs(taylor[-1]) >= 1e-8 * scale:
        raise ConformalMapError(
            f"Taylor tail does not decay (|a_N|/max|a_n| = {abs(taylor[-1]) / scale:.2e}); increase M",
            np.inf,
        )

    cmap = ConformalMap(taylor, 0.0, 0.0, 0.0, it)
    tf = 2 * np.pi * np.arange(4 * M) / (4 * M)
    w = cmap(np.exp(1j * tf))
    resid = float(np.max(np.abs(np.abs(w) - spec.radius_values(np.angle(w)))))
    dF = np.abs(cmap.derivative(np.exp(1j * tf)))
    c1, c2 = float(dF.min()), float(dF.max())
    if resid > residual_tol:
        raise ConformalMapError("mapped circle misses the boundary", resid)
    return ConformalMap(taylor, c1, c2, resid, it)


def derivative_floor(cmap: ConformalMap, n: int = 64) -> float:
    """Minimum of ``|F'|`` over an ``n x n`` polar sample of the closed disk."""
    rho = np.linspace(0.0, 1.0, n)
    ang = 2 * np.pi * np.arange(n) / n
    y = np.multiply.outer(rho, np.exp(1j * ang))
    return float(np.min(np.abs(cmap.derivative(y))))


@dataclass(frozen=True)
class TubularChart:
    """Collar coordinates ``x = gamma(s) - t n(s)`` near the boundary."""

    s: np.ndarray
    t0: float
    length: float
    gamma: PeriodicSeries = field(repr=False)  # complex boundary curve in arclength
    max_curvature: float = 0.0

    def _frame(self, s):
        g = self.gamma(s)
        d1 = self.gamma(s, 1)
        d2 = self.gamma(s, 2)
        tang = d1 / np.abs(d1)
        normal = -1j * tang  # outward for a positively oriented curve
        kappa = (d1.conj() * d2).imag / np.abs(d1) ** 3
        return g, tang, normal, kappa, d1

    def forward(self, s, t) -> np.ndarray:
        """Physical point (complex) of collar coordinates ``(s, t)``."""
        g, _, normal, _, _ = self._frame(np.asarray(s, dtype=float))
        return g - np.asarray(t) * normal

    def curvature(self, s) -> np.ndarray:
        return self._frame(np.asarray(s, dtype=float))[3]

    def metric_factor(self, s, t) -> np.ndarray:
        """Area element ``dx = (1 - t kappa(s)) ds dt``."""
        return 1.0 - np.asarray(t) * self.curvature(s)

    def speed(self, s) -> np.ndarray:
        return np.abs(self.gamma(np.asarray(s, dtype=float), 1))

    def inverse(self, x, tol: float = 1e-14, max_iter: int = 50):
        """Collar coordinates of complex points ``x`` (Newton iteration)."""
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        nodes = self.gamma(self.s)
        idx = np.argmin(np.abs(x[:, None] - nodes[None, :]), axis=1)
        s = self.s[idx].astype(float)
        t = np.abs(x - nodes[idx])
        for _ in range(max_iter):
            g, tang, normal, kappa, d1 = self._frame(s)
            res = g - t * normal - x
            # d/ds (gamma - t n) = (1 - t kappa) gamma' ;  d/dt = -n
            js = (1 - t * kappa) * d1
            jt = -normal
            det = (js.conj() * jt).imag
            ds = (res.conj() * jt).imag / det
            dt = (js.conj() * res).imag / det
            s = s - ds
            t = t - dt
            if np.max(np.abs(ds)) < tol and np.max(np.abs(dt)) < tol:
                break
        return np.mod(s, self.length), t


def tubular_chart(spec: DomainSpec, t0: float) -> TubularChart:
    nodes = build_domain(spec)
    gamma = PeriodicSeries(nodes.z, period=nodes.length)
    d1 = gamma(nodes.s, 1)
    d2 = gamma(nodes.s, 2)
    kappa = (d1.conj() * d2).imag / np.abs(d1) ** 3
    kmax = float(np.max(kappa))
    if kmax > 0 and t0 >= 1.0 / kmax:
        raise GeometryError(
            f"collar depth t0 = {t0} exceeds the curvature bound 1/max(kappa) = {1.0 / kmax:.6g}"
        )
    if t0 <= 0:
        raise GeometryError("collar depth must be positive")
    return TubularChart(nodes.s, float(t0), nodes.length, gamma, kmax)
