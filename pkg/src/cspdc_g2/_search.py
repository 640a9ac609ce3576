"""One-dimensional searches in log-space used by the minimisers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LogMinimum:
    x: float
    fx: float
    degenerate: bool = False
    # bounds finally searched, after any expansion
    lo: float = math.nan
    hi: float = math.nan


def _safe(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.where(np.isfinite(values), values, np.inf)


def log_grid(lo: float, hi: float, points_per_decade: int) -> np.ndarray:
    decades = math.log10(hi / lo)
    n = max(int(math.ceil(decades * points_per_decade)) + 1, 3)
    return np.logspace(math.log10(lo), math.log10(hi), n)


def golden_section(f, a: float, b: float, tol: float, max_iter: int = 500):
    """Minimise scalar ``f`` on ``[a, b]`` until the bracket is narrower than ``tol``."""
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    if fc <= fd:
        return c, fc
    return d, fd


def minimize_log(f, lo: float, hi: float, *, points_per_decade: int = 50,
                 rtol: float = 1e-6, max_expansions: int = 3,
                 expand_decades: float = 3.0, hi_cap: float = math.inf,
                 lo_cap: float = 0.0) -> LogMinimum:
    """Minimise a vectorised ``f(x)`` over ``x in [lo, hi]`` on a log scale.

    A coarse log grid locates the basin, golden-section search in ``ln x``
    refines it to relative width ``rtol``.  When the grid minimum sits on a
    boundary the range is widened up to ``max_expansions`` times; a minimum
    still on the boundary is returned flagged ``degenerate``.
    """
    if not (0 < lo < hi):
        raise ValueError(f"need 0 < lo < hi, got {lo!r}, {hi!r}")
    for attempt in range(max_expansions + 1):
        xs = log_grid(lo, hi, points_per_decade)
        fs = _safe(f(xs))
        i = int(np.argmin(fs))
        at_lo, at_hi = i == 0, i == len(xs) - 1
        if not (at_lo or at_hi) or attempt == max_expansions:
            break
        grew = False
        if at_lo and lo > lo_cap:
            lo = max(lo / 10 ** expand_decades, lo_cap) if lo_cap > 0 else lo / 10 ** expand_decades
            grew = True
        if at_hi and hi < hi_cap:
            hi = min(hi * 10 ** expand_decades, hi_cap)
            grew = True
        if not grew:
            break

    if not np.isfinite(fs[i]):
        raise DomainError("g2 is undefined over the whole search range")
    if i == 0 or i == len(xs) - 1:
        return LogMinimum(float(xs[i]), float(fs[i]), True, lo, hi)

    def g(u):
        return float(_safe(f(np.array([math.exp(u)])))[0])

    u, fu = golden_section(g, math.log(xs[i - 1]), math.log(xs[i + 1]), rtol)
    if fu > fs[i]:
        u, fu = math.log(xs[i]), float(fs[i])
    return LogMinimum(math.exp(u), fu, False, lo, hi)


def bisect_log(f, a: float, b: float, rtol: float = 1e-9, max_iter: int = 200) -> float:
    """Root of ``f`` between ``a`` and ``b`` (``f(a)``, ``f(b)`` of opposite sign), in log-space."""
    fa = f(a)
    ua, ub = math.log(a), math.log(b)
    for _ in range(max_iter):
        if abs(ub - ua) <= rtol:
            break
        um = 0.5 * (ua + ub)
        fm = f(math.exp(um))
        if fm == 0:
            return math.exp(um)
        if (fm < 0) == (fa < 0):
            ua, fa = um, fm
        else:
            ub = um
    return math.exp(0.5 * (ua + ub))
