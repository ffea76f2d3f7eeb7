"""Momentum-space and slab-coordinate discretizations.

Momentum space is reduced to the axisymmetric (p1, rho) half-plane, where rho
is the transverse radius; the azimuthal factor 2*pi*rho is folded into the
quadrature weights.  Nodes are stored flattened in p1-major order, so node
``j = i1 * n_rho + ir`` has longitudinal index ``i1`` and radial index ``ir``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    p1: np.ndarray
    rho: np.ndarray
    weights: np.ndarray
    p_max: float
    n_p1: int
    n_rho: int
    p1_grading: float = 1.0

    def __post_init__(self):
        for arr in (self.p1, self.rho, self.weights):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        return self.p1.size

    @property
    def forward(self) -> np.ndarray:
        """Boolean mask of nodes with p1 > 0 (fed from the left wall)."""
        return self.p1 > 0

    @property
    def backward(self) -> np.ndarray:
        return self.p1 < 0

    def p0(self, m: float, c: float = 1.0) -> np.ndarray:
        return np.sqrt((c * m) ** 2 + self.p1**2 + self.rho**2)

    def checksum(self) -> str:
        h = hashlib.sha256()
        for arr in (self.p1, self.rho, self.weights):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    x: np.ndarray
    K: int

    def __post_init__(self):
        self.x.setflags(write=False)

    @property
    def h(self) -> float:
        return 1.0 / self.K

    @property
    def size(self) -> int:
        return self.K + 1

    def trapezoid(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        """Trapezoid rule over the slab along ``axis``."""
        v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
        inner = v[..., 1:-1].sum(axis=-1)
        return self.h * (0.5 * (v[..., 0] + v[..., -1]) + inner)

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.x, dtype="<f8").tobytes()).hexdigest()


def _gauss_legendre(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


def build_momentum_grid(p_max: float, n_p1: int, n_rho: int, p1_grading: float = 1.0) -> MomentumGrid:
    """Tensor Gauss-Legendre grid on the truncated cylinder |p1| <= p_max, rho <= p_max.

    Each p1 half-line gets its own ``n_p1 // 2`` point rule, so no node sits on
    p1 = 0 where the slab solution jumps.  The negative half is the exact mirror
    of the positive one.

    ``p1_grading = q > 1`` places the half-line rule in s with p1 = p_max * s**q,
    clustering nodes toward p1 = 0.  Grazing particles carry the boundary-layer
    factor exp(-omega x / |p1|), which plain Gauss-Legendre resolves only
    algebraically; q = 3 restores near-spectral convergence.  The total measure
    stays exact for integer q, but polynomial exactness in p1 drops to degree
    about (n_p1 - q) / q.
    """
    if not p_max > 0 or not np.isfinite(p_max):
        raise ValueError(f"p_max must be positive and finite, got {p_max!r}")
    if n_p1 < 4 or n_p1 % 2:
        raise ValueError(f"n_p1 must be even and >= 4, got {n_p1}")
    if n_rho < 2:
        raise ValueError(f"n_rho must be >= 2, got {n_rho}")
    if not p1_grading >= 1 or not np.isfinite(p1_grading):
        raise ValueError(f"p1_grading must be >= 1, got {p1_grading!r}")

    if p1_grading == 1:
        pos, wpos = _gauss_legendre(n_p1 // 2, 0.0, p_max)
    else:
        s, ws = _gauss_legendre(n_p1 // 2, 0.0, 1.0)
        pos = p_max * s**p1_grading
        wpos = ws * p_max * p1_grading * s ** (p1_grading - 1.0)
    p1 = np.concatenate([-pos[::-1], pos])
    w1 = np.concatenate([wpos[::-1], wpos])
    rho, wr = _gauss_legendre(n_rho, 0.0, p_max)

    P1, R = np.meshgrid(p1, rho, indexing="ij")
    W = np.outer(w1, wr) * (2.0 * np.pi) * R
    return MomentumGrid(
        p1=P1.ravel(),
        rho=R.ravel(),
        weights=W.ravel(),
        p_max=float(p_max),
        n_p1=int(n_p1),
        n_rho=int(n_rho),
        p1_grading=float(p1_grading),
    )


def integrate_momentum(grid: MomentumGrid, values) -> float | np.ndarray:
    """Quadrature sum of ``values`` over the momentum grid.

    ``values`` may carry leading batch axes; the last axis must match the node
    count.  The reduction is numpy's pairwise sum along the flattened node
    order, which does not depend on BLAS threading.
    """
    v = np.asarray(values, dtype=float)
    if v.shape[-1] != grid.size:
        raise ValueError(f"expected {grid.size} node values, got trailing axis {v.shape[-1]}")
    return np.sum(v * grid.weights, axis=-1)


def build_spatial_grid(K: int) -> SpatialGrid:
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    x = np.arange(K + 1, dtype=float) / K
    return SpatialGrid(x=x, K=int(K))
