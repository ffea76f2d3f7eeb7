"""Auxiliary mixture state (U~, beta~) and the Juttner attractor built from it.

All routines accept the species axis first and an optional batch of spatial
nodes before the momentum axis: ``f_all`` is ``(N, M)`` for a single x or
``(N, X, M)`` for a whole profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import kve

from .errors import DegenerateFlow, NoSolution
from .grids import MomentumGrid
from .moments import (
    SpeciesParams,
    dphi_dbeta,
    minkowski_dot,
    number_four_flow,
    phi,
)
from .roots import decreasing_root

NORMALIZATIONS = ("discrete", "continuum")


@dataclass(frozen=True)
class AuxiliaryState:
    beta_tilde: float
    U_tilde: np.ndarray
    A: np.ndarray
    alpha: np.ndarray


@dataclass
class AuxiliaryProfile:
    """Auxiliary state at every spatial node, stored as arrays.

    beta: (X,), U: (X, 4), A: (X, 4), alpha: (N, X).
    """

    beta: np.ndarray
    U: np.ndarray
    A: np.ndarray
    alpha: np.ndarray
    residual: np.ndarray | None = None

    def __len__(self):
        return self.beta.shape[0]

    def __getitem__(self, k) -> AuxiliaryState:
        return AuxiliaryState(
            beta_tilde=float(self.beta[k]),
            U_tilde=self.U[k].copy(),
            A=self.A[k].copy(),
            alpha=self.alpha[:, k].copy(),
        )


def species_alpha(f_all, grid: MomentumGrid, species: Sequence[SpeciesParams], c: float = 1.0):
    """alpha_i = int f_i dp / p0_i for every species (and spatial node)."""
    f_all = np.asarray(f_all, dtype=float)
    return np.stack(
        [np.sum(f_all[i] * (grid.weights / grid.p0(s.mass, c)), axis=-1) for i, s in enumerate(species)]
    )


def aggregate_flow(f_all, grid: MomentumGrid, species: Sequence[SpeciesParams], c: float = 1.0):
    """A^mu = sum_i omega_i N_i^mu, the collision-weighted mixture particle flow."""
    f_all = np.asarray(f_all, dtype=float)
    A = np.zeros(f_all.shape[1:-1] + (4,))
    for i, s in enumerate(species):
        if s.omega > 0:
            A += s.omega * number_four_flow(f_all[i], grid, s.mass, c)
    if np.any(A[..., 0] <= 0) or np.any(minkowski_dot(A, A) <= 0):
        raise DegenerateFlow("aggregate flow is not future-timelike")
    return A


def auxiliary_velocity(A, c: float = 1.0):
    """U~ = c A / sqrt(A.A); homogeneous of degree zero in A."""
    A = np.asarray(A, dtype=float)
    norm2 = minkowski_dot(A, A)
    if np.any(A[..., 0] <= 0) or np.any(norm2 <= 0):
        raise DegenerateFlow("aggregate flow is not future-timelike")
    return c * A / np.sqrt(norm2)[..., None]


def _beta_equation(alpha, A, species, c):
    omegas = np.array([s.omega for s in species])
    masses = np.array([s.mass for s in species])
    target = np.sqrt(minkowski_dot(A, A)) / c
    floor = c * np.tensordot(omegas * masses, alpha, axes=1)
    if np.any(target <= floor):
        raise NoSolution(
            "aggregate flow does not exceed its rest-mass floor; the momentum grid is likely too coarse"
        )
    active = [i for i, s in enumerate(species) if s.omega > 0]

    def g(beta):
        total = -target
        for i in active:
            total = total + species[i].omega * alpha[i] * phi(beta, species[i].mass, c)
        return total

    def dg(beta):
        total = 0.0
        for i in active:
            total = total + species[i].omega * alpha[i] * dphi_dbeta(beta, species[i].mass, c)
        return total

    return g, dg, floor


def solve_beta(
    f_all,
    grid: MomentumGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    tol: float = 1e-12,
    full_output: bool = False,
):
    """Auxiliary inverse temperature from the mixture relation.

    Solves sum_i omega_i Phi_i(beta) alpha_i = sqrt(A.A)/c for beta.  The left
    side is strictly decreasing, so the root is unique; on return
    ``|G(beta)| <= tol * sum_i omega_i c m_i alpha_i``.  With ``full_output``
    the :class:`~rbgk_slab.roots.RootResult` (bracket, residual) is returned as
    well.  Batched over spatial nodes when ``f_all`` is 3-D.
    """
    alpha = species_alpha(f_all, grid, species, c)
    A = aggregate_flow(f_all, grid, species, c)
    return _solve_beta_moments(alpha, A, species, c, tol, full_output)


def _solve_beta_moments(alpha, A, species, c, tol, full_output=False):
    g, dg, floor = _beta_equation(alpha, A, species, c)
    res = decreasing_root(g, dg, x0=np.ones_like(floor), scale=floor, tol=tol)
    return (res.root, res) if full_output else res.root


def compute_aux_profile(
    field,
    grid: MomentumGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    tol: float = 1e-12,
) -> AuxiliaryProfile:
    """Auxiliary state at every spatial node of a ``(N, X, M)`` field."""
    field = np.asarray(field, dtype=float)
    alpha = species_alpha(field, grid, species, c)
    A = aggregate_flow(field, grid, species, c)
    U = auxiliary_velocity(A, c)
    beta, res = _solve_beta_moments(alpha, A, species, c, tol, full_output=True)
    return AuxiliaryProfile(
        beta=np.atleast_1d(beta), U=U, A=A, alpha=alpha, residual=np.atleast_1d(res.residual)
    )


def evaluate_attractor(
    alpha,
    beta_tilde,
    U_tilde,
    grid: MomentumGrid,
    m: float,
    c: float = 1.0,
    normalization: str = "discrete",
):
    """Juttner attractor alpha * exp(-beta U~.p) / Z on the grid.

    ``discrete`` takes Z as the grid quadrature of exp(-beta U~.p)/p0, so the
    discrete integral of J/p0 reproduces alpha exactly; ``continuum`` uses the
    closed form 4 pi m K_1(beta m c^2)/beta.  Scalars give an ``(M,)`` result;
    arrays over spatial nodes (alpha, beta of shape (X,), U of shape (X, 4))
    give ``(X, M)``.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta_tilde, dtype=float)
    U = np.asarray(U_tilde, dtype=float)
    p0 = grid.p0(m, c)
    E = beta[..., None] * (U[..., 0:1] * p0 - U[..., 1:2] * grid.p1)
    if normalization == "discrete":
        shift = E.min(axis=-1, keepdims=True)
        boltz = np.exp(-(E - shift))
        Z = np.sum(boltz * (grid.weights / p0), axis=-1)
        J = (alpha / Z)[..., None] * boltz
    else:
        # U~.p >= c * c m, so E - z >= 0 and the scaled Bessel form never overflows
        z = beta * m * c * c
        boltz = np.exp(-(E - z[..., None]))
        Zs = 4.0 * np.pi * m * kve(1, z) / beta
        J = (alpha / Zs)[..., None] * boltz
    return J


def attractor_field(
    aux: AuxiliaryProfile,
    grid: MomentumGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    normalization: str = "discrete",
):
    """J_i(x, p) for every species on the whole profile, shape (N, X, M)."""
    return np.stack(
        [
            evaluate_attractor(aux.alpha[i], aux.beta, aux.U, grid, s.mass, c, normalization)
            for i, s in enumerate(species)
        ]
    )


def envelope_constants(a_upper: float, beta_lower: float, beta_upper: float, U_upper: float, m: float, c: float = 1.0):
    """(C1, C2) of the exponential envelope J_i <= C1 exp(-C2 p0)."""
    # a_u / (4 pi m K_1(z) / beta) in log form; very cold bounds give C1 = inf (a vacuous envelope)
    z = beta_upper * m * c * c
    log_c1 = np.log(a_upper * beta_upper / (4.0 * np.pi * m * kve(1, z))) + z
    C1 = np.exp(log_c1) if log_c1 < np.log(np.finfo(float).max) else np.inf
    C2 = beta_lower * (np.hypot(c, U_upper) - U_upper)
    return float(C1), float(C2)


def attractor_envelope_check(J, C1: float, C2: float, grid: MomentumGrid, m: float, c: float = 1.0) -> dict:
    """Largest excess of J over C1 exp(-C2 p0) across all nodes.

    Passes when the excess is at most 1e-12 * C1.  ``worst`` is the unravelled
    index into ``J`` of the largest excess.
    """
    J = np.asarray(J, dtype=float)
    envelope = C1 * np.exp(-C2 * grid.p0(m, c))
    excess = J - envelope
    k = int(np.argmax(excess))
    worst = float(excess.ravel()[k])
    return {
        "passed": bool(worst <= 1e-12 * C1),
        "max_excess": worst,
        "worst": np.unravel_index(k, J.shape),
    }
