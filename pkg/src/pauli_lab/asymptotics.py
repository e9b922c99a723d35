"""Closed-form constants, trial-space bounds and sweep analysis.

The asymptotic law compared against is
``lambda_k(h) ~ C(k) h^{1-k} exp(2 phi_min / h)`` with ``C`` between
``C_inf = theta_0 C_sup`` and ``C_sup``; all comparisons are made in log space.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg

from .operators import DiscreteForm, PolarGrid, SpectralResult, assemble_magnetic_laplacian, assemble_pauli_minus, \
    assemble_weighted_dbar, solve_lowest
from .potential import FluxPotential
from .spaces import BargmannBasis, HardyModel, hardy_distance, hardy_projection, theta0

log = logging.getLogger(__name__)

REGIME_H = 0.5


class AsymptoticsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constants


def constant_sup(k: int, bargmann: BargmannBasis, hardy: HardyModel) -> float:
    """``2 (dist_H / N_B(P_{k-1}))^2``."""
    if k < 1 or k - 1 > bargmann.n_max:
        raise AsymptoticsError(f"Bargmann basis has no polynomial of degree {k - 1}")
    d = hardy.distances.get(k)
    if d is None:
        d = hardy_distance(k, hardy)
    return 2.0 * d**2 / bargmann.norms2[k - 1]


def radial_constant(k: int, B0: float, flux: float, R: float = 1.0) -> float:
    """``B(0)^k Phi R^{2k-2} / (2^{k-2} (k-1)!)`` for a radial field on the disk of radius ``R``."""
    if k < 1:
        raise AsymptoticsError("k must be at least 1")
    return B0**k * flux * R ** (2 * k - 2) / (2.0 ** (k - 2) * math.factorial(k - 1))


@dataclass(frozen=True)
class AsymptoticPrediction:
    k: int
    C_sup: float
    C_inf: float
    phi_min: float
    theta0: float
    C_rad: Optional[float] = None

    def log_lambda(self, h: float, C: Optional[float] = None) -> float:
        C = self.C_sup if C is None else C
        return math.log(C) + (1 - self.k) * math.log(h) + 2 * self.phi_min / h

    def bracket(self, h: float):
        return self.log_lambda(h, self.C_inf), self.log_lambda(h, self.C_sup)


def build_predictions(
    pot: FluxPotential, bargmann: BargmannBasis, hardy: HardyModel, k_max: int
) -> List[AsymptoticPrediction]:
    th, _ = theta0(hardy)
    out = []
    radial = pot.radial and pot.field.is_radial
    for k in range(1, k_max + 1):
        cs = constant_sup(k, bargmann, hardy)
        crad = None
        if radial:
            R = abs(complex(pot.cmap.coeffs[1]))
            crad = radial_constant(k, float(pot.field(0.0, 0.0)), pot.flux, R)
        out.append(AsymptoticPrediction(k, cs, th * cs, pot.phi_min, th, crad))
    return out


def predict_lambda(pred: AsymptoticPrediction, h: float) -> dict:
    """Log-space prediction at ``h`` with the ``[C_inf, C_sup]`` bracket."""
    if h <= 0:
        raise AsymptoticsError("h must be positive")
    lo, hi = pred.bracket(h)
    ll = pred.log_lambda(h)
    return {
        "log_lambda": ll,
        "lambda": math.exp(ll),
        "log_lo": lo,
        "log_hi": hi,
        "out_of_regime": h > REGIME_H,
    }


# ---------------------------------------------------------------------------
# one-dimensional boundary-layer profile


@dataclass(frozen=True)
class BoundaryLayerProfile:
    """Minimiser ``(1 - e^{-a l}) / (1 - e^{-a eps})`` of ``int_0^eps e^{a l} |rho'|^2``."""

    alpha: float
    eps: float

    def __call__(self, ell) -> np.ndarray:
        ell = np.clip(np.asarray(ell, dtype=float), 0.0, self.eps)
        return -np.expm1(-self.alpha * ell) / -np.expm1(-self.alpha * self.eps)

    def derivative(self, ell) -> np.ndarray:
        ell = np.asarray(ell, dtype=float)
        d = self.alpha * np.exp(-self.alpha * ell) / -np.expm1(-self.alpha * self.eps)
        return np.where((ell >= 0) & (ell <= self.eps), d, 0.0)

    @property
    def energy(self) -> float:
        return self.alpha / -math.expm1(-self.eps * self.alpha)


def boundary_layer(alpha: float, eps: float) -> BoundaryLayerProfile:
    if not (alpha > 0 and eps > 0):
        raise AsymptoticsError("alpha and eps must be positive")
    return BoundaryLayerProfile(float(alpha), float(eps))


def cutoff_level(h: float, E: float, delta: float) -> float:
    """``(2E/h) / (1 - exp(-2 delta E / h))``."""
    if not (h > 0 and E > 0 and delta > 0):
        raise AsymptoticsError("h, E and delta must be positive")
    return (2 * E / h) / -math.expm1(-2 * delta * E / h)


def boundary_layer_fd(alpha: float, eps: float, n: int):
    """Finite-difference minimiser on ``n`` uniform cells: nodes, profile, discrete energy.

    The Euler-Lagrange system ``-(e^{a l} rho')' = 0`` with midpoint
    coefficients is tridiagonal.
    """
    dx = eps / n
    x = np.linspace(0.0, eps, n + 1)
    c = np.exp(alpha * (x[:-1] + 0.5 * dx)) / dx  # cell conductances
    m = n - 1
    ab = np.zeros((3, m))
    ab[1] = c[:-1] + c[1:]
    ab[0, 1:] = -c[1:-1]
    ab[2, :-1] = -c[1:-1]
    rhs = np.zeros(m)
    rhs[-1] = c[-1]  # rho(eps) = 1
    inner = linalg.solve_banded((1, 1), ab, rhs)
    rho = np.concatenate([[0.0], inner, [1.0]])
    energy = float(np.sum(c * np.diff(rho) ** 2))
    return x, rho, energy


# ---------------------------------------------------------------------------
# trial space


@dataclass(frozen=True)
class TrialBound:
    value: float
    eigenvalues: np.ndarray
    condition: float
    k: int
    h: float


def trial_vectors(
    k: int,
    h: float,
    pot: FluxPotential,
    bargmann: BargmannBasis,
    hardy: Optional[HardyModel],
    grid: PolarGrid,
) -> np.ndarray:
    """Nodal samples of the cut-off trial functions ``chi_h w_{n,h}``, ``n = 0..k-1``.

    ``w_n = h^{-1/2} P_n((z - z_min)/sqrt h) - h^{-(1+n)/2} Q_n(z)`` where ``Q_n``
    is the boundary-weighted best approximation of ``(z - z_min)^n`` vanishing
    to order ``n+1`` at ``z_min`` (omitted when ``hardy`` is None).  The cutoff
    follows the boundary-layer profile with ``alpha = 2 d_n phi / h`` and
    width ``h |log h|`` in the disk collar.
    """
    rho, th = grid.node_coords()
    y = rho * np.exp(1j * th)
    z = pot.cmap(y)
    ell = 1.0 - rho
    eps = h * abs(math.log(h))
    alpha = 2.0 * pot.dn_disk_at(th) / h
    chi = np.where(ell >= eps, 1.0, -np.expm1(-alpha * ell) / -np.expm1(-alpha * eps))
    cols = []
    for n in range(k):
        w = h**-0.5 * bargmann(n, (z - pot.z_min) / math.sqrt(h))
        if hardy is not None:
            Q = hardy_projection(n + 1, hardy)
            w = w - h ** (-(1 + n) / 2) * Q(y)
        cols.append(chi * w)
    return np.column_stack(cols)


def trial_space_upper_bound(
    k: int,
    h: float,
    pot: FluxPotential,
    bargmann: BargmannBasis,
    hardy: Optional[HardyModel],
    grid: PolarGrid,
    form: Optional[DiscreteForm] = None,
) -> TrialBound:
    """Largest Ritz value of the weighted dbar form on the ``k``-dimensional trial span."""
    if form is None:
        form = assemble_weighted_dbar(pot, h, grid)
    V = trial_vectors(k, h, pot, bargmann, hardy, grid)
    V = V / np.sqrt(form.norm2(V))[None, :]
    GV = form.G @ V
    Sk = GV.conj().T @ GV + (V.conj().T * form.shift) @ V
    Mk = (V.conj().T * form.mass) @ V
    Sk = 0.5 * (Sk + Sk.conj().T)
    Mk = 0.5 * (Mk + Mk.conj().T)
    cond = float(np.linalg.cond(Mk))
    if cond > 1e12:
        raise AsymptoticsError(f"trial functions numerically dependent (Gram condition {cond:.2e})")
    ev = linalg.eigh(Sk, Mk, eigvals_only=True)
    return TrialBound(float(ev[-1]), ev, cond, k, float(h))


# ---------------------------------------------------------------------------
# checks on computed spectra


def laplacian_shift_check(pot: FluxPotential, h: float, k: int, grid: PolarGrid, method: str = "iterative") -> dict:
    """Compare ``|p-A|^2`` and ``|p-A|^2 - hB`` spectra for a constant field."""
    if pot.field.kind != "constant":
        raise AsymptoticsError("the magnetic Laplacian shift needs a constant field")
    B = float(pot.field.value)
    lam = solve_lowest(assemble_pauli_minus(pot, h, grid), k, method)
    mu = solve_lowest(assemble_magnetic_laplacian(pot, h, grid), k, method)
    shift_err = np.abs(mu.lambdas - lam.lambdas - h * B)
    return {
        "h": h,
        "mu": mu.lambdas,
        "lambda": lam.lambdas,
        "shift_error": float(shift_err.max()),
        "mu_minus_Bh": mu.lambdas - B * h,
    }


def concentration_report(v: np.ndarray, form: DiscreteForm, h: float, alpha: float = 0.4) -> float:
    """Weighted mass fraction of ``v`` inside the disk ``D(x_min, h^alpha)``."""
    pot = form.potential
    radius = h**alpha
    bdist = float(np.min(np.abs(pot.boundary_points - pot.z_min)))
    if radius > bdist:
        warnings.warn(f"ball of radius {radius:.3g} leaves the domain; fraction uses its intersection", RuntimeWarning)
    rho, th = form.grid.node_coords()
    z = pot.cmap(rho * np.exp(1j * th))
    dens = form.mass * np.abs(np.asarray(v).ravel()) ** 2
    inside = np.abs(z - pot.z_min) < radius
    return float(np.sum(dens[inside]) / np.sum(dens))


# ---------------------------------------------------------------------------
# sweep analysis


def normalized_values(results: Sequence[SpectralResult], phi_min: float) -> np.ndarray:
    """Rows of ``h^{k-1} exp(-2 phi_min/h) lambda_k`` per result."""
    return np.array([r.normalized(phi_min) for r in results])


def extrapolate_normalized(hs: Sequence[float], values: Sequence[float], npts: int = 3) -> float:
    """Intercept of the least-squares fit ``a + b sqrt(h)`` over the ``npts`` smallest ``h``."""
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.argsort(hs)[:npts]
    A = np.column_stack([np.ones(idx.size), np.sqrt(hs[idx])])
    coef, *_ = np.linalg.lstsq(A, values[idx], rcond=None)
    return float(coef[0])


def slope_limit(hs: Sequence[float], log_lambda: Sequence[float], k: int = 1, npts: int = 3) -> float:
    """Limit of ``h log lambda_k`` as ``h -> 0``.

    ``h log lambda_k - (1-k) h log h = 2 phi_min + h log C + o(h)``, so a line
    in ``h`` through the ``npts`` smallest values extrapolates to ``2 phi_min``.
    """
    hs = np.asarray(hs, dtype=float)
    y = hs * np.asarray(log_lambda, dtype=float) - (1 - k) * hs * np.log(hs)
    idx = np.argsort(hs)[:npts]
    A = np.column_stack([np.ones(idx.size), hs[idx]])
    coef, *_ = np.linalg.lstsq(A, y[idx], rcond=None)
    return float(coef[0])


def bracket_distance(value: float, lo: float, hi: float) -> float:
    """Distance from ``value`` to the interval ``[lo, hi]`` (zero inside)."""
    return max(lo - value, value - hi, 0.0)


def moves_toward(values: Sequence[float], lo: float, hi: float) -> bool:
    """True when the distance to ``[lo, hi]`` never grows along the sequence."""
    d = [bracket_distance(v, lo, hi) for v in values]
    return all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
