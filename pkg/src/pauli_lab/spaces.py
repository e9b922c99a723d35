"""Weighted function spaces behind the sharp constants.

* Gaussian (Segal-Bargmann) side: monic polynomials orthogonal for the
  weight ``exp(-H(y, y))`` on the plane, with ``z = y1 + i y2``.
* Boundary (Hardy) side: a quadrature model of ``int_{boundary} |u|^2 d_n phi ds``
  carried by the conformal map, the distance from ``(z - z_min)^{k-1}`` to
  functions vanishing to order ``k`` at ``z_min``, and the boundary symmetry
  ratio ``theta_0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np
from scipy import linalg

from .geometry import ConformalMap
from .potential import FluxPotential


class SpaceError(ValueError):
    """Invalid input to a function-space construction."""


# ---------------------------------------------------------------------------
# Gaussian side


def _check_pd(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.shape != (2, 2) or not np.allclose(H, H.T, rtol=0, atol=1e-14 * max(1.0, np.abs(H).max())):
        raise SpaceError("Hessian must be a symmetric 2x2 matrix")
    H = 0.5 * (H + H.T)
    if np.min(np.linalg.eigvalsh(H)) <= 0:
        raise SpaceError("Hessian must be positive definite")
    return H


def gaussian_gram(H: np.ndarray, n_max: int) -> np.ndarray:
    """``G[i, j] = int z^i conj(z)^j exp(-H(y, y)) dy`` by exact-degree Gauss-Hermite."""
    H = _check_pd(H)
    d, Q = np.linalg.eigh(H)
    npts = n_max + 2
    t, w = np.polynomial.hermite.hermgauss(npts)
    e1 = t / np.sqrt(d[0])
    e2 = t / np.sqrt(d[1])
    E1, E2 = np.meshgrid(e1, e2, indexing="ij")
    W = np.outer(w, w) / np.sqrt(d[0] * d[1])
    y1 = Q[0, 0] * E1 + Q[0, 1] * E2
    y2 = Q[1, 0] * E1 + Q[1, 1] * E2
    z = (y1 + 1j * y2).ravel()
    W = W.ravel()
    P = np.vander(z, n_max + 1, increasing=True)  # (pts, n)
    return (P.T * W) @ P.conj()


@dataclass(frozen=True, eq=False)
class BargmannBasis:
    """Monic Gram-Schmidt polynomials ``P_n(Z) = sum_j coeffs[n, j] Z^j`` and ``norms2[n] = N_B(P_n)^2``."""

    hessian: np.ndarray
    coeffs: np.ndarray
    norms2: np.ndarray

    @property
    def n_max(self) -> int:
        return self.norms2.size - 1

    def __call__(self, n: int, Z) -> np.ndarray:
        if n > self.n_max:
            raise SpaceError(f"basis built only up to degree {self.n_max}")
        return np.polynomial.polynomial.polyval(np.asarray(Z), self.coeffs[n, : n + 1])

    def gram(self) -> np.ndarray:
        G = gaussian_gram(self.hessian, self.n_max)
        return self.coeffs @ G @ self.coeffs.conj().T

    def to_dict(self) -> dict:
        return {
            "hessian": self.hessian.tolist(),
            "coeffs_re": self.coeffs.real.tolist(),
            "coeffs_im": self.coeffs.imag.tolist(),
            "norms2": self.norms2.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "BargmannBasis":
        return cls(
            np.array(d["hessian"]),
            np.array(d["coeffs_re"]) + 1j * np.array(d["coeffs_im"]),
            np.array(d["norms2"]),
        )


def bargmann_gram_schmidt(H: np.ndarray, n_max: int) -> BargmannBasis:
    """Gram-Schmidt on ``1, Z, Z^2, ...`` through the LDL^H factorisation of the Gram matrix."""
    H = _check_pd(H)
    if n_max < 0:
        raise SpaceError("n_max must be nonnegative")
    G = gaussian_gram(H, n_max)
    C = linalg.cholesky(0.5 * (G + G.conj().T), lower=True)
    dg = np.diag(C).real
    Lunit = C / dg[None, :]
    T = linalg.solve_triangular(Lunit, np.eye(n_max + 1), lower=True, unit_diagonal=True)
    return BargmannBasis(H, T, dg**2)


# ---------------------------------------------------------------------------
# boundary side


@dataclass(eq=False)
class HardyModel:
    """Boundary quadrature for the weighted Hardy norm.

    Nodes are the images ``z_i = F(e^{i t_i})`` of equispaced circle points;
    ``weights[i] = |F'| d_n phi (z_i) * 2 pi / M``, which equals the physical
    ``d_n phi ds`` because ``ds = |F'| dt``.
    """

    cmap: ConformalMap
    t: np.ndarray
    z: np.ndarray
    weights: np.ndarray
    z_min: complex
    N: int = 40
    distances: Dict[int, float] = field(default_factory=dict)
    convergence: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise SpaceError("Hopf violation: nonpositive boundary weight")

    @classmethod
    def build(cls, pot: FluxPotential, M: Optional[int] = None, N: int = 40) -> "HardyModel":
        M = int(M or max(len(pot.boundary_t), 4 * (N + 20)))
        t = 2 * np.pi * np.arange(M) / M
        dn = pot.dn_disk_at(t)
        if np.any(dn <= 0):
            raise SpaceError("Hopf violation: normal derivative of phi is not positive on the boundary")
        return cls(pot.cmap, t, pot.cmap(np.exp(1j * t)), dn * 2 * np.pi / M, pot.z_min, int(N))

    @property
    def M(self) -> int:
        return self.t.size

    @property
    def boundary_density(self) -> np.ndarray:
        """``|F'| * d_n phi o F`` at the circle nodes."""
        return self.weights * self.M / (2 * np.pi)

    def to_dict(self) -> dict:
        return {
            "cmap": {"re": self.cmap.coeffs.real.tolist(), "im": self.cmap.coeffs.imag.tolist(),
                     "c1": self.cmap.c1, "c2": self.cmap.c2, "residual": self.cmap.residual},
            "t": self.t.tolist(),
            "weights": self.weights.tolist(),
            "z_min": [self.z_min.real, self.z_min.imag],
            "N": self.N,
            "distances": {str(k): v for k, v in self.distances.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "HardyModel":
        c = d["cmap"]
        cmap = ConformalMap(np.array(c["re"]) + 1j * np.array(c["im"]), c["c1"], c["c2"], c["residual"])
        t = np.array(d["t"])
        m = cls(cmap, t, cmap(np.exp(1j * t)), np.array(d["weights"]), complex(*d["z_min"]), int(d["N"]))
        m.distances = {int(k): float(v) for k, v in d["distances"].items()}
        return m

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def hardy_norm(u, model: HardyModel) -> float:
    """``N_H(u) = sqrt(sum_i w_i |u(z_i)|^2)`` for samples at the model nodes."""
    u = np.asarray(u)
    if u.shape != model.weights.shape:
        raise SpaceError(f"expected {model.weights.size} boundary samples, got {u.shape}")
    return float(np.sqrt(np.sum(model.weights * np.abs(u) ** 2)))


@dataclass(frozen=True)
class HardyProjection:
    """Best approximation of ``(z - z_min)^{k-1}`` from ``span{(z - z_min)^k y^j}``, ``y = F^{-1}(z)``."""

    k: int
    distance: float
    coeffs: np.ndarray
    z_min: complex
    cmap: ConformalMap

    def __call__(self, y) -> np.ndarray:
        """The approximant ``Q`` at disk points ``y`` (so ``z = F(y)``)."""
        y = np.asarray(y)
        return (self.cmap(y) - self.z_min) ** self.k * np.polynomial.polynomial.polyval(y, self.coeffs)


def hardy_projection(k: int, model: HardyModel, N: Optional[int] = None) -> HardyProjection:
    """Weighted least squares by QR of the scaled basis matrix."""
    if k < 1:
        raise SpaceError("k must be at least 1")
    N = model.N if N is None else int(N)
    y = np.exp(1j * model.t)
    s = np.sqrt(model.weights)
    dz = model.z - model.z_min
    target = s * dz ** (k - 1)
    A = (s * dz**k)[:, None] * y[:, None] ** np.arange(N + 1)[None, :]
    if A.shape[0] <= A.shape[1]:
        raise SpaceError("too few boundary nodes for the requested truncation")
    Qm, R = linalg.qr(A, mode="economic")
    d = np.abs(np.diag(R))
    if d.min() < 1e-13 * d.max():
        raise SpaceError(f"rank-deficient Hardy basis at truncation N={N}")
    c = linalg.solve_triangular(R, Qm.conj().T @ target)
    resid = target - A @ c
    return HardyProjection(k, float(np.linalg.norm(resid)), c, model.z_min, model.cmap)


def hardy_distance(k: int, model: HardyModel, N: Optional[int] = None, check: bool = True) -> float:
    """``dist_H((z - z_min)^{k-1}, H^2_k)``; with ``check`` the truncation is doubled and the change recorded."""
    N = model.N if N is None else int(N)
    if N < k + 10:
        raise SpaceError(f"truncation N={N} below the minimum k+10={k + 10}")
    d = hardy_projection(k, model, N).distance
    if check:
        d2 = hardy_projection(k, model, 2 * N).distance
        model.convergence[k] = abs(d - d2)
        d = d2
    model.distances[k] = d
    return d


def szego_project(coeffs: Mapping[int, complex]) -> Dict[int, complex]:
    """Drop the negative Fourier modes of a boundary function."""
    return {int(n): a for n, a in coeffs.items() if int(n) >= 0}


def szego_project_samples(values: np.ndarray) -> np.ndarray:
    """Szego projection of equispaced boundary samples; for even length the Nyquist mode counts as negative."""
    v = np.asarray(values)
    c = np.fft.fft(v)
    keep = np.fft.fftfreq(v.size, d=1.0 / v.size) >= 0
    return np.fft.ifft(c * keep)


def theta0(model: HardyModel):
    """``(theta_0, E)``: min/max ratio and minimum of ``|F'| d_n phi o F`` on the unit circle."""
    g = model.boundary_density
    if np.any(g <= 0):
        raise SpaceError("Hopf violation: nonpositive boundary density")
    E = float(g.min())
    return E / float(g.max()), E


def radial_bargmann_norm2(n: int, B0: float) -> float:
    """Closed form ``2 pi 2^n n! / B0^{n+1}`` for the isotropic Hessian ``B0/2 Id``."""
    return 2 * math.pi * 2**n * math.factorial(n) / B0 ** (n + 1)
