"""Safeguarded root finder for strictly decreasing functions on (0, inf).

Brackets by doubling/halving from a start point, bisects geometrically, then
polishes with Newton steps that are rejected whenever they leave the bracket.
Works elementwise on arrays of independent problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoSolution

MAX_EXPAND = 400
MAX_BISECT = 80
MAX_NEWTON = 5
BISECT_RTOL = 1e-4


@dataclass
class RootResult:
    root: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    g_lo: np.ndarray
    g_hi: np.ndarray
    residual: np.ndarray
    evaluations: int


def _scalarize(res: RootResult) -> RootResult:
    for name in ("root", "lo", "hi", "g_lo", "g_hi", "residual"):
        v = getattr(res, name)
        if v.ndim == 0:
            setattr(res, name, float(v))
    return res


def decreasing_root(g, dg, x0=1.0, scale=1.0, tol=1e-12) -> RootResult:
    """Root of a strictly decreasing ``g`` with ``|g(root)| <= tol * scale``.

    ``g`` and ``dg`` must accept and return arrays of the broadcast shape of
    ``x0`` and ``scale``.  The returned bracket satisfies g(lo) > 0 > g(hi)
    unless the root was hit exactly.
    """
    x0, scale = np.broadcast_arrays(np.asarray(x0, dtype=float), np.asarray(scale, dtype=float))
    lo = x0.copy()
    hi = x0.copy()
    g0 = np.asarray(g(x0), dtype=float)
    g_lo = g0.copy()
    g_hi = g0.copy()
    nev = 1

    # expand: positive g means the root lies to the right
    up = g0 > 0
    down = g0 < 0
    for _ in range(MAX_EXPAND):
        if not (up.any() or down.any()):
            break
        trial = np.where(up, hi * 2.0, np.where(down, lo * 0.5, x0))
        gt = np.asarray(g(trial), dtype=float)
        nev += 1
        lo = np.where(up, hi, lo)
        g_lo = np.where(up, g_hi, g_lo)
        hi = np.where(up, trial, hi)
        g_hi = np.where(up, gt, g_hi)
        hi = np.where(down, lo, hi)
        g_hi = np.where(down, g_lo, g_hi)
        lo = np.where(down, trial, lo)
        g_lo = np.where(down, gt, g_lo)
        up = up & (gt > 0)
        down = down & (gt < 0)
    else:
        raise NoSolution("could not bracket a root; the target is outside the function's range")

    exact = g0 == 0
    for _ in range(MAX_BISECT):
        open_ = (hi > lo * (1.0 + BISECT_RTOL)) & ~exact
        if not open_.any():
            break
        mid = np.sqrt(lo * hi)
        gm = np.asarray(g(mid), dtype=float)
        nev += 1
        pos = open_ & (gm > 0)
        neg = open_ & (gm < 0)
        hit = open_ & (gm == 0)
        lo = np.where(pos | hit, mid, lo)
        g_lo = np.where(pos, gm, g_lo)
        hi = np.where(neg | hit, mid, hi)
        g_hi = np.where(neg, gm, g_hi)
        exact = exact | hit

    x = np.where(exact, lo, np.sqrt(lo * hi))
    gx = np.asarray(g(x), dtype=float)
    nev += 1
    done = np.abs(gx) <= tol * scale
    for _ in range(MAX_NEWTON):
        if done.all():
            break
        d = np.asarray(dg(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - gx / d
        inside = (step > lo) & (step < hi) & np.isfinite(step)
        x_new = np.where(done, x, np.where(inside, step, np.sqrt(lo * hi)))
        g_new = np.asarray(g(x_new), dtype=float)
        nev += 1
        upd = ~done
        lo = np.where(upd & (g_new > 0), x_new, lo)
        g_lo = np.where(upd & (g_new > 0), g_new, g_lo)
        hi = np.where(upd & (g_new < 0), x_new, hi)
        g_hi = np.where(upd & (g_new < 0), g_new, g_hi)
        x, gx = x_new, g_new
        done = np.abs(gx) <= tol * scale

    # Newton stalled: fall back to bisection down to float resolution
    resolved = np.zeros_like(done)
    for _ in range(200):
        if done.all():
            break
        mid = np.sqrt(lo * hi)
        stuck = ~done & ((mid <= lo) | (mid >= hi))
        gm = np.asarray(g(mid), dtype=float)
        nev += 1
        upd = ~done & ~stuck
        lo = np.where(upd & (gm > 0), mid, lo)
        g_lo = np.where(upd & (gm > 0), gm, g_lo)
        hi = np.where(upd & (gm < 0), mid, hi)
        g_hi = np.where(upd & (gm < 0), gm, g_hi)
        better = upd & (np.abs(gm) < np.abs(gx))
        x = np.where(better, mid, x)
        gx = np.where(better, gm, gx)
        resolved = resolved | stuck
        done = (np.abs(gx) <= tol * scale) | resolved

    residual = np.abs(gx) / scale
    if np.any((residual > tol) & ~resolved):
        raise NoSolution(f"root tolerance {tol:g} not attainable (residual {residual.max():.3e})")
    return _scalarize(RootResult(x, lo, hi, g_lo, g_hi, residual, nev))
