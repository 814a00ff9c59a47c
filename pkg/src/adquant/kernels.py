"""Closed-form moments of uniform-density cells and exact Voronoi splitting."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


def _xlogx(u: np.ndarray) -> np.ndarray:
    au = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = u * np.log(au)
    return np.where(au == 0.0, 0.0, out)


def log_antiderivative(u):
    """F(u) = u ln|u| - u, continuous at 0 with 0 ln 0 = 0."""
    u = np.asarray(u, dtype=float)
    return _xlogx(u) - u


def cell_log_moment(lo, hi, mass, a):
    """mass/(hi-lo) * integral_lo^hi ln|x - a| dx, vectorised over cells and/or a."""
    lo, hi, mass, a = (np.asarray(v, dtype=float) for v in (lo, hi, mass, a))
    return mass / (hi - lo) * (log_antiderivative(hi - a) - log_antiderivative(lo - a))


def power_antiderivative(u, r: float):
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.abs(u) ** (r + 1.0) / (r + 1.0)


def moment_antiderivative(u, r: float):
    return log_antiderivative(u) if r == 0 else power_antiderivative(u, r)


def cell_moment(lo, hi, mass, a, r: float):
    """Mean of ln|x-a| (r = 0) or |x-a|**r (r > 0) over the cell, times its mass.

    The r > 0 antiderivative sign(u)|u|^(r+1)/(r+1) is exact for every real r,
    so no quadrature is needed.
    """
    if r < 0:
        raise ValueError("error order r must be non-negative")
    if r == 0:
        return cell_log_moment(lo, hi, mass, a)
    lo, hi, mass, a = (np.asarray(v, dtype=float) for v in (lo, hi, mass, a))
    return mass / (hi - lo) * (power_antiderivative(hi - a, r) - power_antiderivative(lo - a, r))


def cell_log_moment_derivative(lo, hi, mass, a):
    """d/da of cell_log_moment: rho * (ln|lo - a| - ln|hi - a|); infinite at edges."""
    lo, hi, mass, a = (np.asarray(v, dtype=float) for v in (lo, hi, mass, a))
    with np.errstate(divide="ignore"):
        return mass / (hi - lo) * (np.log(np.abs(lo - a)) - np.log(np.abs(hi - a)))


def cell_moment_derivative(lo, hi, mass, a, r: float):
    """d/da of cell_moment: rho * (g(lo - a) - g(hi - a)) with g = ln|.| or |.|**r."""
    if r == 0:
        return cell_log_moment_derivative(lo, hi, mass, a)
    lo, hi, mass, a = (np.asarray(v, dtype=float) for v in (lo, hi, mass, a))
    return mass / (hi - lo) * (np.abs(lo - a) ** r - np.abs(hi - a) ** r)


def breakpoints(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    return 0.5 * (p[1:] + p[:-1])


class Fragments(NamedTuple):
    lo: np.ndarray
    hi: np.ndarray
    mass: np.ndarray
    owner: np.ndarray
    parent: np.ndarray


def split_cells(lo, hi, mass, points) -> Fragments:
    """Split cells at the midpoints between consecutive sorted code points.

    A fragment ending exactly on a breakpoint belongs to the left code point
    (leftmost tie-break); the breakpoint itself has zero mass.  `parent`
    indexes the original cell of each fragment.
    """
    lo, hi, mass = (np.asarray(v, dtype=float) for v in (lo, hi, mass))
    bps = breakpoints(points)
    j = np.searchsorted(lo, bps, side="left") - 1
    jc = np.clip(j, 0, lo.size - 1)
    inside = (j >= 0) & (lo[jc] < bps) & (bps < hi[jc])
    cuts, cut_parent = bps[inside], jc[inside]

    starts = np.concatenate((lo, cuts))
    parent = np.concatenate((np.arange(lo.size), cut_parent))
    order = np.lexsort((starts, parent))
    starts, parent = starts[order], parent[order]
    ends = np.empty_like(starts)
    ends[:-1] = starts[1:]
    last = np.ones(starts.size, dtype=bool)
    last[:-1] = parent[1:] != parent[:-1]
    ends[last] = hi[parent[last]]
    fmass = mass[parent] * (ends - starts) / (hi[parent] - lo[parent])
    owner = np.searchsorted(bps, 0.5 * (starts + ends), side="left")
    return Fragments(starts, ends, fmass, owner.astype(int), parent.astype(int))
