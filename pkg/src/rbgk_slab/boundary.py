"""Parametric and tabulated inflow families sampled on the momentum grid."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import InvalidBoundary, OutputError
from .grids import MomentumGrid, _gauss_legendre
from .solver import BoundaryData

log = logging.getLogger(__name__)

# Juttner data is kept to this many thermal momenta when p_max is chosen automatically
THERMAL_SPAN = 30.0


def _lorentz(u, c):
    return 1.0 / np.sqrt(1.0 - (u / c) ** 2)


def evaluate_family(spec, p1, rho, m: float, c: float = 1.0, base_dir: Path | None = None):
    """Family density at arbitrary (p1, rho) points, without half-grid masking."""
    p1 = np.asarray(p1, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if spec.kind == "juttner":
        g = _lorentz(spec.drift, c)
        p0 = np.sqrt((c * m) ** 2 + p1**2 + rho**2)
        # U.p with U = (g c, g u, 0, 0)
        return spec.amplitude * np.exp(-spec.beta * (g * c * p0 - g * spec.drift * p1))
    if spec.kind == "gaussian":
        return spec.amplitude * np.exp(-((p1 - spec.center) ** 2 + rho**2) / spec.width**2)
    if spec.kind == "tabulated":
        table = load_table(spec.path, base_dir)
        interp = RegularGridInterpolator(
            (table["p1"], table["rho"]), table["values"], method="linear", bounds_error=False, fill_value=0.0
        )
        vals = interp(np.stack([p1.ravel(), rho.ravel()], axis=-1)).reshape(p1.shape)
        if np.any(vals < 0):
            log.warning("tabulated boundary %s has negative samples; clamped to 0", spec.path)
            vals = np.maximum(vals, 0.0)
        return vals
    raise ValueError(f"unknown boundary family {spec.kind!r}")


def load_table(path, base_dir: Path | None = None) -> dict:
    """Read a tabulated family: JSON with ascending ``p1``, ``rho`` axes and a
    ``values`` matrix indexed [p1][rho]."""
    path = Path(path)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise OutputError(f"tabulated boundary file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidBoundary(f"cannot read tabulated boundary {path}: {exc}") from exc
    try:
        p1 = np.asarray(raw["p1"], dtype=float)
        rho = np.asarray(raw["rho"], dtype=float)
        values = np.asarray(raw["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidBoundary(f"malformed tabulated boundary {path}: {exc}") from exc
    if (
        p1.ndim != 1
        or rho.ndim != 1
        or values.shape != (p1.size, rho.size)
        or p1.size < 2
        or rho.size < 2
        or np.any(np.diff(p1) <= 0)
        or np.any(np.diff(rho) <= 0)
        or not np.all(np.isfinite(values))
    ):
        raise InvalidBoundary(f"malformed tabulated boundary {path}: axes must ascend and match values")
    return {"p1": p1, "rho": rho, "values": values}


def sample_boundary(spec, grid: MomentumGrid, m: float, c: float = 1.0, side: str = "L", base_dir=None):
    """Family values on the half-grid fed by ``side`` (p1 > 0 for L, p1 < 0 for R); zero elsewhere."""
    mask = grid.forward if side == "L" else grid.backward
    out = np.zeros(grid.size)
    out[mask] = evaluate_family(spec, grid.p1[mask], grid.rho[mask], m, c, base_dir)
    return out


def thermal_radius(spec, m: float, c: float = 1.0, base_dir=None) -> float:
    """Momentum radius the family needs for a negligible truncation tail."""
    if spec.kind == "juttner":
        p_th = max(1.0 / (spec.beta * c), np.sqrt(m / spec.beta))
        boost = _lorentz(spec.drift, c) * (1.0 + abs(spec.drift) / c)
        return THERMAL_SPAN * p_th * boost
    if spec.kind == "gaussian":
        return abs(spec.center) + 7.0 * spec.width
    table = load_table(spec.path, base_dir)
    return float(max(np.abs(table["p1"]).max(), table["rho"].max()))


def tail_fraction(spec, side: str, m: float, p_max: float, c: float = 1.0, n: int = 64, base_dir=None) -> float:
    """Fraction of int f dp lying outside the cylinder |p1|, rho <= p_max."""
    sign = 1.0 if side == "L" else -1.0
    outer = 4.0 * p_max

    def block(lo1, hi1, lo2, hi2):
        a, wa = _gauss_legendre(n, lo1, hi1)
        b, wb = _gauss_legendre(n, lo2, hi2)
        P, R = np.meshgrid(a, b, indexing="ij")
        W = np.outer(wa, wb) * 2.0 * np.pi * R
        return float(np.sum(evaluate_family(spec, sign * P, R, m, c, base_dir) * W))

    inside = block(0.0, p_max, 0.0, p_max)
    tail = block(p_max, outer, 0.0, outer) + block(0.0, p_max, p_max, outer)
    total = inside + tail
    return tail / total if total > 0 else 0.0


def build_boundary(config, grid: MomentumGrid, base_dir=None) -> BoundaryData:
    """BoundaryData for every species of a parsed run configuration."""
    c = config.constants.c
    values = []
    provenance = []
    for s in config.species:
        left = sample_boundary(s.left, grid, s.mass, c, "L", base_dir)
        right = sample_boundary(s.right, grid, s.mass, c, "R", base_dir)
        values.append(left + right)
        provenance.append({"label": s.label, "L": s.left.model_dump(), "R": s.right.model_dump()})
    return BoundaryData(np.array(values), provenance)


def check_truncation(config, p_max: float, base_dir=None) -> dict:
    """Tail fraction per species and side; raises InvalidBoundary above the configured limit."""
    c = config.constants.c
    limit = config.grid.truncation_tol
    out = {}
    for s in config.species:
        for side, spec in (("L", s.left), ("R", s.right)):
            if spec.kind != "tabulated" and spec.amplitude == 0:
                out[f"{s.label}.{side}"] = 0.0
                continue
            frac = tail_fraction(spec, side, s.mass, p_max, c, base_dir=base_dir)
            out[f"{s.label}.{side}"] = frac
            if frac > limit:
                raise InvalidBoundary(
                    f"species {s.label} side {side}: {frac:.2e} of the inflow mass lies beyond p_max={p_max:g}"
                    f" (limit {limit:g}); increase grid.p_max"
                )
    return out
