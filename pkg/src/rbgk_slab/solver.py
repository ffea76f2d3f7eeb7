"""Mild-solution operator and its Picard iteration.

For p1 > 0 the stationary slab equation p1 f_x = omega (J - f) integrates from
the left wall, for p1 < 0 from the right wall.  J is taken piecewise linear in
x between spatial nodes and the exponential kernel is integrated exactly on
each cell, so the scheme stays stable however large omega/|p1| gets.

Fields are arrays of shape (N species, X spatial nodes, M momentum nodes).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attractor import AuxiliaryProfile, attractor_field, compute_aux_profile, species_alpha
from .errors import InvalidBoundary, NonTimelikeFlow, NoSolution, SlabError
from .grids import MomentumGrid, SpatialGrid
from .moments import SpeciesParams

log = logging.getLogger(__name__)

# divergence declaration
GROWTH_STREAK = 5
BLOWUP_FACTOR = 1e6

_SERIES_CUTOFF = 0.1
# a/2 - a^2/6 + a^3/24 - ... = sum_{n>=1} (-1)^(n+1) a^n / (n+1)!
_SERIES = [(-1) ** (n + 1) / float(np.prod(np.arange(1, n + 2))) for n in range(1, 15)]


@dataclass(eq=False)
class BoundaryData:
    """Inflow data on the shared momentum grid.

    ``values[i]`` holds f_{i,L} on nodes with p1 > 0 and f_{i,R} on nodes with
    p1 < 0 (the combined f_{i,LR}).
    """

    values: np.ndarray
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("boundary values must have shape (species, nodes)")
        if not np.all(np.isfinite(self.values)):
            raise InvalidBoundary("boundary data contains non-finite values")
        if np.any(self.values < 0):
            raise InvalidBoundary("boundary data must be nonnegative")

    @classmethod
    def from_sides(cls, left, right, grid: MomentumGrid, provenance=None):
        left = np.atleast_2d(np.asarray(left, dtype=float))
        right = np.atleast_2d(np.asarray(right, dtype=float))
        values = np.where(grid.forward, left, right)
        return cls(values, list(provenance or []))

    def validate(self, grid: MomentumGrid, species: Sequence[SpeciesParams], c: float = 1.0):
        if self.values.shape != (len(species), grid.size):
            raise ValueError(
                f"boundary shape {self.values.shape} does not match {(len(species), grid.size)}"
            )
        a_lower = 0.25 * species_alpha(self.values, grid, species, c)
        for s, a in zip(species, a_lower):
            if not a > 0:
                raise InvalidBoundary(f"species {s.label or '?'} has no inflow mass (a_lower = {a:g})")
        return self

    def scaled(self, factors) -> "BoundaryData":
        return BoundaryData(self.values * np.asarray(factors, dtype=float)[:, None], list(self.provenance))


@dataclass
class IterationReport:
    updates: list[float] = field(default_factory=list)
    ratios: list[float | None] = field(default_factory=list)
    final_residual: float | None = None
    iterations: int = 0
    converged: bool = False
    reason: str = ""

    def record(self, d: float):
        if self.updates and self.updates[-1] > 0:
            self.ratios.append(d / self.updates[-1])
        elif self.updates:
            self.ratios.append(None)
        self.updates.append(d)
        self.iterations += 1

    def sup_ratio(self, start: int = 2) -> float | None:
        """Largest contraction ratio delta_n over n >= ``start`` (d_0 is the first update)."""
        vals = [r for n, r in enumerate(self.ratios, start=1) if n >= start and r is not None]
        return max(vals) if vals else None

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "reason": self.reason,
            "final_residual": self.final_residual,
            "updates": list(self.updates),
            "ratios": list(self.ratios),
        }


class NotConverged(SlabError, RuntimeError):
    exit_code = 4

    def __init__(self, message: str, report: IterationReport, field=None, aux=None):
        super().__init__(message)
        self.report = report
        self.field = field
        self.aux = aux


def _omegas(species):
    return np.array([s.omega for s in species], dtype=float)


def propagate_boundary(
    boundary: BoundaryData,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
) -> np.ndarray:
    """Wall data attenuated along characteristics, with no collisional gain."""
    x = sgrid.x[:, None]
    fwd = mgrid.forward
    depth = np.where(fwd, x, 1.0 - x)
    inv_speed = 1.0 / np.abs(mgrid.p1)
    out = np.empty((len(species), sgrid.size, mgrid.size))
    for i, s in enumerate(species):
        out[i] = np.exp(-s.omega * depth * inv_speed) * boundary.values[i]
    return out


def _cell_weights(a):
    """Decay e^{-a} and the weights on the far/near endpoint values of J."""
    a = np.asarray(a, dtype=float)
    decay = np.exp(-a)
    gain = -np.expm1(-a)
    small = a < _SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        near = np.where(small, 0.0, 1.0 - gain / np.where(small, 1.0, a))
    if np.any(small):
        s = np.zeros_like(a)
        for coef in reversed(_SERIES):
            s = (s + coef) * np.where(small, a, 0.0)
        near = np.where(small, s, near)
    far = gain - near
    return decay, far, near


def exp_kernel_cell(a, J_left, J_right, h: float = 1.0):
    """Integral over one cell of the attenuation kernel against linear J.

    Computes int_0^h (a/h) exp(-(a/h)(h - s)) J(s) ds with J linear from
    ``J_left`` at s = 0 to ``J_right`` at s = h.  The result depends on h only
    through a = omega h / |p1|.
    """
    if not h > 0:
        raise ValueError("cell width must be positive")
    if np.any(np.asarray(a) < 0):
        raise ValueError("kernel scale must be nonnegative")
    _, far, near = _cell_weights(a)
    out = far * np.asarray(J_left, dtype=float) + near * np.asarray(J_right, dtype=float)
    return out if np.ndim(out) else float(out)


def _collisional_gain(J_i, omega, mgrid: MomentumGrid, sgrid: SpatialGrid):
    """Kernel term of the mild form for one species, accumulated cell by cell."""
    X = sgrid.size
    fwd = np.flatnonzero(mgrid.forward)
    bwd = np.flatnonzero(mgrid.backward)
    out = np.zeros((X, mgrid.size))

    a = omega * sgrid.h / np.abs(mgrid.p1[fwd])
    decay, far, near = _cell_weights(a)
    Jf = J_i[:, fwd]
    acc = np.zeros(fwd.size)
    for k in range(1, X):
        acc = decay * acc + far * Jf[k - 1] + near * Jf[k]
        out[k, fwd] = acc

    a = omega * sgrid.h / np.abs(mgrid.p1[bwd])
    decay, far, near = _cell_weights(a)
    Jb = J_i[:, bwd]
    acc = np.zeros(bwd.size)
    for k in range(X - 2, -1, -1):
        acc = decay * acc + far * Jb[k + 1] + near * Jb[k]
        out[k, bwd] = acc
    return out


def apply_solution_operator(
    f,
    boundary: BoundaryData,
    aux: AuxiliaryProfile | None,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    normalization: str = "discrete",
    homogeneous=None,
) -> np.ndarray:
    """Psi(f): attenuated wall data plus the collisional gain built from ``aux``.

    ``aux`` must be the auxiliary profile of ``f`` (it may be None only when
    every collision frequency is zero).  ``homogeneous`` may carry a cached
    :func:`propagate_boundary` result.
    """
    hom = propagate_boundary(boundary, mgrid, sgrid, species) if homogeneous is None else homogeneous
    out = hom.copy()
    if not np.any(_omegas(species) > 0):
        return out
    if aux is None:
        raise ValueError("an auxiliary profile is required when any collision frequency is positive")
    J = attractor_field(aux, mgrid, species, c, normalization)
    for i, s in enumerate(species):
        if s.omega > 0:
            out[i] = hom[i] + _collisional_gain(J[i], s.omega, mgrid, sgrid)
    return out


def l1_distance(f, g, mgrid: MomentumGrid, sgrid: SpatialGrid) -> float:
    """Sum over species of the L1 norm of f_i - g_i on [0, 1] x momentum space."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    per_x = np.sum(np.abs(f - g) * mgrid.weights, axis=-1)
    return float(np.sum(sgrid.trapezoid(per_x, axis=-1)))


def l1_norm(f, mgrid: MomentumGrid, sgrid: SpatialGrid) -> float:
    per_x = np.sum(np.abs(np.asarray(f, dtype=float)) * mgrid.weights, axis=-1)
    return float(np.sum(sgrid.trapezoid(per_x, axis=-1)))


def picard_solve(
    boundary: BoundaryData,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 200,
    normalization: str = "discrete",
    beta_tol: float = 1e-12,
    initial=None,
):
    """Iterate f <- Psi(f) from the attenuated wall data until the relative
    L1 update drops below ``tol``.

    Returns ``(field, aux, report)``; ``aux`` is the auxiliary profile of the
    returned field (None when all collision frequencies vanish).  After
    convergence one extra application of Psi is made and its relative change
    stored as ``report.final_residual``.  Raises :class:`NotConverged` when
    ``max_iter`` is exhausted or the updates diverge.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    boundary.validate(mgrid, species, c)
    hom = propagate_boundary(boundary, mgrid, sgrid, species)
    active = bool(np.any(_omegas(species) > 0))
    f = hom if initial is None else np.asarray(initial, dtype=float)
    report = IterationReport()

    def sweep(g):
        aux = compute_aux_profile(g, mgrid, species, c, beta_tol) if active else None
        return apply_solution_operator(g, boundary, aux, mgrid, sgrid, species, c, normalization, hom), aux

    growth = 0
    for _ in range(max_iter):
        try:
            f_new, _ = sweep(f)
        except (NoSolution, NonTimelikeFlow) as exc:
            report.reason = f"auxiliary state undefined: {exc}"
            raise NotConverged(report.reason, report, f) from exc
        if not np.all(np.isfinite(f_new)):
            report.reason = "non-finite iterate"
            raise NotConverged(report.reason, report, f)
        d = l1_distance(f_new, f, mgrid, sgrid)
        scale = l1_norm(f, mgrid, sgrid)
        prev = report.updates[-1] if report.updates else None
        report.record(d)
        log.debug("sweep %d: update %.3e", report.iterations, d)
        f = f_new
        if d <= tol * scale:
            report.converged = True
            break
        growth = growth + 1 if prev is not None and d > prev else 0
        if growth >= GROWTH_STREAK or d > BLOWUP_FACTOR * report.updates[0]:
            report.reason = "diverging updates"
            raise NotConverged(report.reason, report, f)
    else:
        report.reason = f"no convergence within {max_iter} sweeps"
        raise NotConverged(report.reason, report, f)

    check, aux = sweep(f)
    report.final_residual = l1_distance(check, f, mgrid, sgrid) / max(l1_norm(f, mgrid, sgrid), np.finfo(float).tiny)
    return f, aux, report


@dataclass
class ScanRow:
    scale: float
    converged: bool
    iterations: int
    sup_delta: float | None
    reason: str = ""


@dataclass
class ScanResult:
    rows: list[ScanRow]
    largest_converged: float | None

    def as_dict(self) -> dict:
        return {
            "largest_converged": self.largest_converged,
            "rows": [vars(r) for r in self.rows],
        }


def omega_threshold_scan(
    boundary: BoundaryData,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
    scales: Sequence[float],
    **solver_kwargs,
) -> ScanResult:
    """Run :func:`picard_solve` with every omega_i multiplied by each scale."""
    scales = [float(s) for s in scales]
    if any(s < 0 for s in scales) or any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scale ladder must be nonnegative and strictly increasing")
    rows = []
    for s in scales:
        scaled = [SpeciesParams(sp.mass, sp.omega * s, sp.label) for sp in species]
        try:
            _, _, rep = picard_solve(boundary, mgrid, sgrid, scaled, **solver_kwargs)
        except NotConverged as exc:
            rep = exc.report
        rows.append(ScanRow(s, rep.converged, rep.iterations, rep.sup_ratio(), rep.reason))
    ok = [r.scale for r in rows if r.converged]
    return ScanResult(rows, max(ok) if ok else None)
