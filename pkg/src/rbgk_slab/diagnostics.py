"""Boundary-derived constants and nodewise certificates for a computed solution.

Every check is evaluated at every spatial node and reports its worst margin
and where it occurred; nothing is averaged.  A margin >= 0 means the check
holds there.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .attractor import (
    AuxiliaryProfile,
    attractor_envelope_check,
    attractor_field,
    envelope_constants,
    species_alpha,
)
from .errors import InvalidBoundary
from .grids import MomentumGrid, SpatialGrid
from .moments import number_four_flow, phi, phi_inverse, stress_energy_flux, SpeciesParams
from .solver import BoundaryData


@dataclass
class DerivedConstants:
    a_lower: np.ndarray
    a_upper: np.ndarray
    lam: np.ndarray
    gamma: float
    beta_lower: float
    beta_upper: float
    U_upper: float
    C1: np.ndarray
    C2: float
    # int f_LR dp/p0, kept for the property (B) sums
    mass_p0: np.ndarray = field(repr=False, default=None)

    def as_dict(self, labels: Sequence[str] | None = None) -> dict:
        labels = list(labels) if labels else [str(i) for i in range(len(self.a_lower))]
        per = lambda arr: {lab: float(v) for lab, v in zip(labels, arr)}  # noqa: E731
        return {
            "a_lower": per(self.a_lower),
            "a_upper": per(self.a_upper),
            "lambda": per(self.lam),
            "gamma": float(self.gamma),
            "beta_lower": float(self.beta_lower),
            "beta_upper": float(self.beta_upper),
            "U_upper": float(self.U_upper),
            "C1": per(self.C1),
            "C2": float(self.C2),
        }


@dataclass
class CheckResult:
    passed: bool
    margin: float
    location: dict = field(default_factory=dict)


class CertificateReport(dict):
    """Mapping of check name to :class:`CheckResult`."""

    def add(self, name: str, result: CheckResult):
        if name in self:
            raise KeyError(f"check {name!r} recorded twice")
        self[name] = result

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.values())

    def failures(self) -> list[str]:
        return [k for k, r in self.items() if not r.passed]

    def as_dict(self) -> dict:
        return {k: asdict(v) for k, v in self.items()}

    def to_text(self) -> str:
        lines = []
        for name, r in self.items():
            loc = ", ".join(f"{k}={v}" for k, v in r.location.items())
            lines.append(f"{'PASS' if r.passed else 'FAIL'}  {name}  margin={r.margin:.6e}  [{loc}]")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} ({len(self)} checks)")
        return "\n".join(lines) + "\n"


def _labels(species):
    return [s.label or str(i) for i, s in enumerate(species)]


def derived_constants(
    boundary: BoundaryData,
    grid: MomentumGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
) -> DerivedConstants:
    """a_l, a_u, lambda_i, gamma and the resulting bounds on U~ and beta~."""
    f = boundary.values
    w = grid.weights
    masses = np.array([s.mass for s in species])
    p0 = np.stack([grid.p0(m, c) for m in masses])
    mass_p0 = np.sum(f * (w / p0), axis=-1)
    mass = np.sum(f * w, axis=-1)
    mass_p02 = np.sum(f * (w / p0**2), axis=-1)
    if np.any(mass_p0 <= 0):
        bad = [s.label or str(i) for i, s in enumerate(species) if not mass_p0[i] > 0]
        raise InvalidBoundary(f"no inflow mass for species {bad}")

    a_lower = 0.25 * mass_p0
    a_upper = 2.0 * mass
    lam = np.sqrt(mass * mass_p02) / mass_p0
    gamma = float(np.max(lam ** -0.25))

    U_upper = float(np.max(a_upper) / np.min(masses * a_lower))
    # arguments of Phi^{-1}: 2 a_u / a_l = 16 <p0> > c m, and gamma c m sqrt(lambda) >= c m lambda^{1/4} > c m
    beta_lower = min(phi_inverse(2.0 * a_upper[i] / a_lower[i], s.mass, c) for i, s in enumerate(species))
    beta_upper = max(phi_inverse(gamma * c * s.mass * np.sqrt(lam[i]), s.mass, c) for i, s in enumerate(species))

    C = [envelope_constants(a_upper[i], beta_lower, beta_upper, U_upper, s.mass, c) for i, s in enumerate(species)]
    return DerivedConstants(
        a_lower=a_lower,
        a_upper=a_upper,
        lam=lam,
        gamma=gamma,
        beta_lower=beta_lower,
        beta_upper=beta_upper,
        U_upper=U_upper,
        C1=np.array([ci[0] for ci in C]),
        C2=C[0][1],
        mass_p0=mass_p0,
    )


def _worst(margins: np.ndarray, sgrid: SpatialGrid, **extra) -> CheckResult:
    k = int(np.argmin(margins))
    m = float(margins[k])
    return CheckResult(m >= 0, m, {"x": float(sgrid.x[k]), **extra})


def check_property_A(
    field_: np.ndarray,
    consts: DerivedConstants,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
) -> CertificateReport:
    """f_i >= 0, a_l <= int f_i dp/p0 and int f_i dp <= a_u at every x."""
    rep = CertificateReport()
    f = np.asarray(field_, dtype=float)
    alpha = species_alpha(f, mgrid, species, c)
    mass = np.sum(f * mgrid.weights, axis=-1)
    for i, lab in enumerate(_labels(species)):
        fmin = f[i].min(axis=-1)
        k = int(np.argmin(fmin))
        j = int(np.argmin(f[i, k]))
        rep.add(
            f"property_A.nonnegative[{lab}]",
            CheckResult(bool(fmin[k] >= 0), float(fmin[k]), {"x": float(sgrid.x[k]), "species": lab, "node": j}),
        )
        rep.add(
            f"property_A.lower_mass[{lab}]",
            _worst(alpha[i] - consts.a_lower[i], sgrid, species=lab),
        )
        rep.add(
            f"property_A.upper_mass[{lab}]",
            _worst(consts.a_upper[i] - mass[i], sgrid, species=lab),
        )
    return rep


def property_B_sides(beta, consts: DerivedConstants, species, c: float = 1.0):
    """(left, right) of the (B) inequality; right is evaluated at each beta."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    lhs = consts.gamma * sum(
        c * s.mass * s.omega * consts.lam[i] * consts.mass_p0[i] for i, s in enumerate(species)
    )
    rhs = sum(
        s.omega * phi(beta, s.mass, c) * np.sqrt(consts.lam[i]) * consts.mass_p0[i]
        for i, s in enumerate(species)
    )
    return lhs, np.asarray(rhs) * np.ones_like(beta)


def check_property_B(
    aux: AuxiliaryProfile,
    consts: DerivedConstants,
    species: Sequence[SpeciesParams],
    sgrid: SpatialGrid,
    c: float = 1.0,
) -> CertificateReport:
    """The (B) inequality at every x node, margin relative to its left side."""
    lhs, rhs = property_B_sides(aux.beta, consts, species, c)
    scale = lhs if lhs > 0 else 1.0
    rep = CertificateReport()
    rep.add("property_B", _worst((rhs - lhs) / scale, sgrid))
    return rep


def check_lemma_bounds(aux: AuxiliaryProfile, consts: DerivedConstants, sgrid: SpatialGrid) -> CertificateReport:
    rep = CertificateReport()
    speed = np.sqrt(aux.U[:, 1] ** 2 + aux.U[:, 2] ** 2 + aux.U[:, 3] ** 2)
    rep.add("lemma.U_bound", _worst(consts.U_upper - speed, sgrid))
    rep.add("lemma.beta_lower", _worst((aux.beta - consts.beta_lower) / consts.beta_lower, sgrid))
    rep.add("lemma.beta_upper", _worst((consts.beta_upper - aux.beta) / consts.beta_upper, sgrid))
    return rep


def check_attractor_envelope(
    aux: AuxiliaryProfile,
    consts: DerivedConstants,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    normalization: str = "discrete",
) -> CertificateReport:
    rep = CertificateReport()
    J = attractor_field(aux, mgrid, species, c, normalization)
    for i, (s, lab) in enumerate(zip(species, _labels(species))):
        res = attractor_envelope_check(J[i], consts.C1[i], consts.C2, mgrid, s.mass, c)
        k, j = (int(v) for v in res["worst"])
        # C1 spans dozens of decades across mixtures, so the margin is reported relative to it
        rep.add(
            f"envelope[{lab}]",
            CheckResult(
                res["passed"], -res["max_excess"] / consts.C1[i], {"x": float(sgrid.x[k]), "species": lab, "node": j}
            ),
        )
    return rep


def particle_flux(field_, mgrid: MomentumGrid, species, c: float = 1.0) -> np.ndarray:
    """F_i(x) = int (p1/p0) f_i dp, shape (N, X)."""
    return np.stack(
        [number_four_flow(field_[i], mgrid, s.mass, c)[..., 1] / c for i, s in enumerate(species)]
    )


def total_stress_flux(field_, mgrid: MomentumGrid, species, c: float = 1.0) -> np.ndarray:
    """Mixture sum of T^{01}, T^{11}, shape (X, 2)."""
    return sum(stress_energy_flux(field_[i], mgrid, s.mass, c)[..., :2] for i, s in enumerate(species))


def flux_conservation(
    field_,
    boundary: BoundaryData,
    consts: DerivedConstants,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    tol: float = 1e-6,
) -> CertificateReport:
    """Spatial constancy of each species' particle flux and the mixture T^{mu 1}.

    Per-species residual max_x |F_i - mean F_i| / max(|mean F_i|, a_u,i).  The
    stress columns use max(|mean|, c sum_i int |p1| f_i,LR dp) as their scale.
    """
    rep = CertificateReport()
    F = particle_flux(field_, mgrid, species, c)
    for i, lab in enumerate(_labels(species)):
        mean = F[i].mean()
        dev = np.abs(F[i] - mean) / max(abs(mean), consts.a_upper[i])
        rep.add(f"flux.particle[{lab}]", _worst(tol - dev, sgrid, species=lab, residual=float(dev.max())))
    T = total_stress_flux(field_, mgrid, species, c)
    ref = c * float(np.sum(boundary.values * (mgrid.weights * np.abs(mgrid.p1))))
    for col, name in ((0, "T01"), (1, "T11")):
        mean = T[:, col].mean()
        dev = np.abs(T[:, col] - mean) / max(abs(mean), ref)
        rep.add(f"flux.{name}", _worst(tol - dev, sgrid, residual=float(dev.max())))
    return rep


def entropy_flux(field_, mgrid: MomentumGrid, species: Sequence[SpeciesParams], c: float = 1.0, k: float = 1.0):
    """S^1(x) = -k c sum_i int (p1/p0) f_i ln f_i dp, with 0 ln 0 = 0."""
    f = np.asarray(field_, dtype=float)
    total = 0.0
    for i, s in enumerate(species):
        w = mgrid.weights * mgrid.p1 / mgrid.p0(s.mass, c)
        total = total + np.sum(xlogy(f[i], f[i]) * w, axis=-1)
    return -k * c * total


def entropy_flux_scale(field_, mgrid: MomentumGrid, species: Sequence[SpeciesParams], c: float = 1.0, k: float = 1.0):
    """k c sum_i int (|p1|/p0) |f_i ln f_i| dp: the size of S^1 before cancellation between directions."""
    f = np.asarray(field_, dtype=float)
    total = 0.0
    for i, s in enumerate(species):
        w = mgrid.weights * np.abs(mgrid.p1) / mgrid.p0(s.mass, c)
        total = total + np.sum(np.abs(xlogy(f[i], f[i])) * w, axis=-1)
    return k * c * total


def check_entropy(field_, mgrid, sgrid, species, c: float = 1.0, k: float = 1.0, rtol: float = 1e-8) -> CertificateReport:
    """S^1 nondecreasing in x: min slope >= -rtol * scale.

    The scale is max |S^1|, raised to the largest unsigned integrand magnitude
    so that a flux that cancels to round-off (equilibrium) is not judged by
    the noise in its own slope.
    """
    S = entropy_flux(field_, mgrid, species, c, k)
    slope = np.diff(S) / sgrid.h
    scale = max(float(np.abs(S).max()), float(entropy_flux_scale(field_, mgrid, species, c, k).max()))
    floor = -rtol * max(scale, np.finfo(float).tiny)
    rep = CertificateReport()
    j = int(np.argmin(slope))
    rep.add(
        "entropy.monotone",
        CheckResult(bool(slope[j] >= floor), float(slope[j] - floor), {"x": float(sgrid.x[j]), "min_slope": float(slope[j])}),
    )
    return rep


def certify(
    field_,
    aux: AuxiliaryProfile,
    boundary: BoundaryData,
    mgrid: MomentumGrid,
    sgrid: SpatialGrid,
    species: Sequence[SpeciesParams],
    c: float = 1.0,
    k: float = 1.0,
    normalization: str = "discrete",
    consts: DerivedConstants | None = None,
    flux_tol: float = 1e-6,
) -> CertificateReport:
    """Run every certificate on a (converged) solution."""
    consts = consts or derived_constants(boundary, mgrid, species, c)
    rep = CertificateReport()
    for part in (
        check_property_A(field_, consts, mgrid, sgrid, species, c),
        check_property_B(aux, consts, species, sgrid, c),
        check_lemma_bounds(aux, consts, sgrid),
        check_attractor_envelope(aux, consts, mgrid, sgrid, species, c, normalization),
        flux_conservation(field_, boundary, consts, mgrid, sgrid, species, c, flux_tol),
        check_entropy(field_, mgrid, sgrid, species, c, k),
    ):
        for name, res in part.items():
            rep.add(name, res)
    return rep
