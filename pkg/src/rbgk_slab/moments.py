"""Relativistic moments, Minkowski algebra and the energy ratio Phi.

Four-vectors are plain length-4 float arrays (a0, a1, a2, a3) with signature
(+, -, -, -).  Under the axisymmetric reduction the transverse components of
every moment vanish identically and are returned as exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import kve

from .errors import NonTimelikeFlow
from .grids import MomentumGrid
from .roots import decreasing_root

_METRIC = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class SpeciesParams:
    mass: float
    omega: float
    label: str = ""

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"species mass must be positive, got {self.mass!r}")
        if not self.omega >= 0:
            raise ValueError(f"collision frequency must be >= 0, got {self.omega!r}")


def p0(m, c, p1, rho):
    """Energy component sqrt((c m)^2 + p1^2 + rho^2)."""
    return np.sqrt((c * m) ** 2 + np.square(p1) + np.square(rho))


def minkowski_dot(a, b):
    """Contraction a^mu b_mu; broadcasts over leading axes."""
    return np.sum(np.asarray(a, dtype=float) * _METRIC * np.asarray(b, dtype=float), axis=-1)


def _as_fourvector(a0, a1):
    a0 = np.asarray(a0, dtype=float)
    out = np.zeros(a0.shape + (4,))
    out[..., 0] = a0
    out[..., 1] = a1
    return out


def number_four_flow(f, grid: MomentumGrid, m: float, c: float = 1.0) -> np.ndarray:
    """N^mu = c * int p^mu f dp / p0, batched over leading axes of ``f``."""
    f = np.asarray(f, dtype=float)
    w = grid.weights
    n0 = c * np.sum(f * w, axis=-1)
    n1 = c * np.sum(f * (w * grid.p1 / grid.p0(m, c)), axis=-1)
    return _as_fourvector(n0, n1)


def stress_energy_flux(f, grid: MomentumGrid, m: float, c: float = 1.0) -> np.ndarray:
    """Column T^{mu 1} = c * int p^mu p1 f dp / p0."""
    f = np.asarray(f, dtype=float)
    w = grid.weights
    t01 = c * np.sum(f * (w * grid.p1), axis=-1)
    t11 = c * np.sum(f * (w * grid.p1**2 / grid.p0(m, c)), axis=-1)
    return _as_fourvector(t01, t11)


def eckart_decompose(N, c: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Split a future-timelike particle four-flow into density and four-velocity."""
    N = np.asarray(N, dtype=float)
    norm2 = minkowski_dot(N, N)
    if np.any(N[..., 0] <= 0) or np.any(norm2 <= 0):
        raise NonTimelikeFlow("particle four-flow is not future-timelike")
    n = np.sqrt(norm2) / c
    # N = n U with U.U = c^2
    U = N / n[..., None]
    return n, U


def bessel_k_ratio(z):
    """K_2(z) / K_1(z) for z > 0.

    Uses the recurrence K_2 = K_0 + (2/z) K_1 together with exponentially
    scaled Bessel values, so neither large nor small z overflows.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("bessel_k_ratio requires z > 0")
    r = kve(0, z) / kve(1, z) + 2.0 / z
    return r if r.ndim else float(r)


def bessel_k_ratio_derivative(z):
    """d/dz of K_2/K_1, equal to R^2 - 3R/z - 1 with R = K_2/K_1."""
    z = np.asarray(z, dtype=float)
    r = np.asarray(bessel_k_ratio(z))
    d = r * r - 3.0 * r / z - 1.0
    return d if d.ndim else float(d)


def phi(beta, m: float, c: float = 1.0):
    """Ratio of int e^{-c beta p0} dp to int e^{-c beta p0} dp/p0.

    Closed form c m K_2(z)/K_1(z) with z = beta m c^2.  Strictly decreasing in
    beta with range (c m, infinity).
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("phi requires beta > 0")
    out = c * m * np.asarray(bessel_k_ratio(beta * m * c * c))
    return out if out.ndim else float(out)


def dphi_dbeta(beta, m: float, c: float = 1.0):
    beta = np.asarray(beta, dtype=float)
    out = c * m * (m * c * c) * np.asarray(bessel_k_ratio_derivative(beta * m * c * c))
    return out if out.ndim else float(out)


def juttner_normalization(beta, m: float, c: float = 1.0):
    """Closed form of int e^{-c beta p0} dp / p0 = 4 pi m K_1(beta m c^2) / beta."""
    beta = np.asarray(beta, dtype=float)
    z = beta * m * c * c
    out = 4.0 * np.pi * m * kve(1, z) * np.exp(-z) / beta
    return out if out.ndim else float(out)


def phi_inverse(y: float, m: float, c: float = 1.0, tol: float = 1e-15) -> float:
    """Inverse of ``phi`` for y > c m."""
    if not y > c * m:
        raise ValueError(f"phi_inverse needs y > c*m = {c * m!r}, got {y!r}")
    res = decreasing_root(
        lambda b: phi(b, m, c) - y,
        lambda b: dphi_dbeta(b, m, c),
        scale=y,
        tol=tol,
    )
    return float(res.root)
