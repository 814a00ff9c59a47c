"""Quantization errors of discretised measures and n-optimal codebooks.

For r = 0 the objective is the log-error  I(alpha) = int log d(x, alpha) dmu,
so ``exp(objective)`` is the geometric mean error e_{n,0}.  For r > 0 the
objective is e_{n,r}^r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from scipy.linalg import solve_banded
from scipy.optimize import minimize

from .kernels import cell_moment, moment_antiderivative, split_cells
from .measure import BudgetError, DiscretizedMeasure, MeasureError, restrict

EXACT_DP_CELLS = 256
DP_CELL_BUDGET = 2 ** 16


@dataclass(frozen=True)
class ErrorOrder:
    r: float = 0.0

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError("error order r must be non-negative")

    @property
    def is_log(self) -> bool:
        return self.r == 0


def _r(order) -> float:
    r = order.r if isinstance(order, ErrorOrder) else float(order)
    if not r >= 0:
        raise ValueError("error order r must be non-negative")
    return r


@dataclass(frozen=True, eq=False)
class Codebook:
    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float).reshape(-1)
        if p.size < 1:
            raise ValueError("a codebook needs at least one point")
        if np.any(np.diff(p) <= 0):
            raise ValueError("codebook points must be strictly increasing")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @classmethod
    def of(cls, *pts) -> "Codebook":
        return cls(np.array(pts, dtype=float))

    @property
    def n(self) -> int:
        return int(self.points.size)

    def __len__(self):
        return self.n

    def map(self, ratio: float, offset: float = 0.0) -> "Codebook":
        return Codebook(ratio * self.points + offset)

    def tolist(self) -> list:
        return self.points.tolist()


@dataclass
class QuantizerResult:
    codebook: Codebook
    objective: float
    r: float
    per_cell: List[Tuple[int, int, float, float]]
    method: str
    iterations: int = 0
    converged: bool = True
    diagnostics: Dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.codebook.n

    @property
    def error(self) -> float:
        """e_{n,r}: exp(objective) for r = 0, objective**(1/r) otherwise."""
        if self.r == 0:
            return math.exp(self.objective)
        return self.objective ** (1.0 / self.r)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "codebook": self.codebook.tolist(),
            "objective": self.objective,
            "error": self.error,
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# --------------------------------------------------------------------------
# objective evaluation


def _cells(group):
    if isinstance(group, DiscretizedMeasure):
        return group.lo, group.hi, group.mass
    lo, hi, mass = group
    return np.asarray(lo, float), np.asarray(hi, float), np.asarray(mass, float)


def group_objective(group, a: float, r) -> float:
    lo, hi, mass = _cells(group)
    return float(cell_moment(lo, hi, mass, a, _r(r)).sum())


def partition_contributions(lo, hi, mass, points, r):
    """Exact Voronoi assignment; returns (fragments, per-code contributions)."""
    frags = split_cells(lo, hi, mass, points)
    vals = cell_moment(frags.lo, frags.hi, frags.mass, np.asarray(points)[frags.owner], r)
    contrib = np.bincount(frags.owner, weights=vals, minlength=len(points))
    return frags, contrib


def distortion(dm: DiscretizedMeasure, codebook, r=0.0, region=None) -> float:
    """I_{mu,r}(A, alpha) with A = region (default: the whole line)."""
    cb = codebook if isinstance(codebook, Codebook) else Codebook(codebook)
    if region is None:
        lo, hi, mass = dm.lo, dm.hi, dm.mass
    else:
        lo, hi, mass = restrict(dm, region)
        if mass.size == 0 or mass.sum() <= 0:
            raise MeasureError("region carries no mass")
    _, contrib = partition_contributions(lo, hi, mass, cb.points, _r(r))
    return float(contrib.sum())


def _per_cell(frags, contrib, points):
    rows = []
    for i, a in enumerate(points):
        sel = frags.parent[frags.owner == i]
        first, last = (int(sel.min()), int(sel.max())) if sel.size else (-1, -1)
        rows.append((first, last, float(a), float(contrib[i])))
    return rows


def evaluate(dm: DiscretizedMeasure, codebook, r=0.0, method="evaluate", **kw) -> QuantizerResult:
    cb = codebook if isinstance(codebook, Codebook) else Codebook(codebook)
    r = _r(r)
    frags, contrib = partition_contributions(dm.lo, dm.hi, dm.mass, cb.points, r)
    return QuantizerResult(cb, float(contrib.sum()), r, _per_cell(frags, contrib, cb.points),
                           method, **kw)


# --------------------------------------------------------------------------
# single-point optimisation


def _zoom(lo, hi, mass, r, a, b, width, pts: int = 17):
    """Vectorised bracket shrinking around several local minima at once.

    Each pass samples `pts` points per bracket and keeps the two steps
    around the best sample, shrinking brackets by (pts - 1) / 2.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    t = np.linspace(0.0, 1.0, pts)
    while True:
        xs = a[:, None] + (b - a)[:, None] * t[None, :]
        vals = cell_moment(lo[None, None, :], hi[None, None, :], mass[None, None, :],
                           xs[:, :, None], r).sum(axis=2)
        k = np.argmin(vals, axis=1)
        rows = np.arange(a.size)
        if np.all(b - a <= width):
            return xs[rows, k], vals[rows, k]
        step = (b - a) / (pts - 1)
        centre = xs[rows, k]
        a = np.maximum(a, centre - step)
        b = np.minimum(b, centre + step)


def _newton_log(lo, hi, mass, x, fx, xa, xb, steps: int = 2):
    """Newton steps on the derivative of the log objective near zoomed minima.

    The objective is flat to rounding error there while its derivative is
    not.  A step is kept only inside the scan bracket [xa, xb], with smaller
    |f'| and no objective increase beyond rounding.
    """
    rho = (mass / (hi - lo))[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(steps):
            d1 = (rho * (np.log(np.abs(lo - x[:, None])) - np.log(np.abs(hi - x[:, None])))).sum(1)
            d2 = (rho * (1.0 / (x[:, None] - lo) - 1.0 / (x[:, None] - hi))).sum(1)
            cand = x - d1 / d2
            ok = np.isfinite(cand) & (cand >= xa) & (cand <= xb) & np.isfinite(d1)
            if not np.any(ok):
                break
            fc = np.where(ok, cell_moment(lo[None, :], hi[None, :], mass[None, :],
                                          np.where(ok, cand, x)[:, None], 0.0).sum(1), np.inf)
            d1c = (rho * (np.log(np.abs(lo - cand[:, None]))
                          - np.log(np.abs(hi - cand[:, None])))).sum(1)
            tol = 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(fx))
            take = ok & (fc <= fx + tol) & (np.abs(d1c) < np.abs(d1))
            x = np.where(take, cand, x)
            fx = np.where(take, np.minimum(fc, fx), fx)
    return x, fx


def _weighted_median(lo, hi, mass) -> float:
    cum = np.cumsum(mass)
    half = 0.5 * cum[-1]
    j = int(np.searchsorted(cum, half, side="left"))
    before = cum[j - 1] if j > 0 else 0.0
    if j + 1 < lo.size and abs(cum[j] - half) <= 1e-15 * cum[-1]:
        # median set is the gap [hi_j, lo_{j+1}]
        return 0.5 * (hi[j] + lo[j + 1])
    return float(lo[j] + (half - before) / mass[j] * (hi[j] - lo[j]))


def local_minima_1d(group, r=0.0, seeds: int = 64, rel_width: float = 1e-12,
                    refine: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    """Refined local minima of the single-point objective, best first.

    A scan of `seeds` equispaced points over the group hull picks up to
    `refine` discrete local minima; each is refined by bracket shrinking to
    `rel_width` of the hull.
    """
    lo, hi, mass = _cells(group)
    r = _r(r)
    h_lo, h_hi = float(lo[0]), float(hi[-1])
    xs = np.linspace(h_lo, h_hi, seeds)
    vals = cell_moment(lo[None, :], hi[None, :], mass[None, :], xs[:, None], r).sum(axis=1)
    padded = np.concatenate(([np.inf], vals, [np.inf]))
    is_min = (padded[1:-1] <= padded[:-2]) & (padded[1:-1] <= padded[2:])
    cand = np.flatnonzero(is_min)
    cand = cand[np.argsort(vals[cand], kind="stable")][:refine]
    xa = xs[np.maximum(cand - 1, 0)]
    xb = xs[np.minimum(cand + 1, seeds - 1)]
    # each bracket contains its seed, so refinement never ends above it
    width = rel_width * (h_hi - h_lo)
    x, fx = _zoom(lo, hi, mass, r, xa, xb, width)
    if r == 0:
        x, fx = _newton_log(lo, hi, mass, x, fx, xa, xb)
    order = np.argsort(fx, kind="stable")
    return x[order], fx[order]


def optimal_point_1d(group, r=0.0, seeds: int = 64, rel_width: float = 1e-12,
                     refine: int = 3) -> Tuple[float, float]:
    """Best single code point for a contiguous group of cells.

    r = 2: mass centroid.  r = 1: weighted median.  Otherwise the best of
    local_minima_1d.
    """
    lo, hi, mass = _cells(group)
    r = _r(r)
    if mass.sum() <= 0:
        raise ValueError("group carries no mass")
    if r == 2:
        a = float(np.dot(mass, 0.5 * (lo + hi)) / mass.sum())
        return a, group_objective((lo, hi, mass), a, r)
    if r == 1:
        a = _weighted_median(lo, hi, mass)
        return a, group_objective((lo, hi, mass), a, r)
    if lo.size == 1 and r == 0:
        a = 0.5 * (lo[0] + hi[0])
        return float(a), group_objective((lo, hi, mass), a, r)
    x, fx = local_minima_1d((lo, hi, mass), r, seeds, rel_width, refine)
    return float(x[0]), float(fx[0])


# --------------------------------------------------------------------------
# dynamic programming over contiguous cell groups


def _backtrack(choice: np.ndarray, n: int, end: int) -> List[int]:
    """Group boundaries [b_0=0, ..., b_n=end] from the DP choice table."""
    bounds = [end]
    for k in range(n, 1, -1):
        bounds.append(int(choice[k, bounds[-1]]))
    bounds.append(0)
    return bounds[::-1]


class _ExactGroups:
    """Memoised single-group optima with boundaries at every cell edge."""

    def __init__(self, dm, r, seeds):
        self.dm, self.r, self.seeds = dm, r, seeds
        self.memo: Dict[Tuple[int, int], Tuple[float, float]] = {}

    def __call__(self, s: int, t: int) -> float:
        return self.point(s, t)[1]

    def point(self, s: int, t: int):
        key = (s, t)
        if key not in self.memo:
            dm = self.dm
            self.memo[key] = optimal_point_1d(
                (dm.lo[s:t], dm.hi[s:t], dm.mass[s:t]), self.r, seeds=self.seeds)
        return self.memo[key]


def _dp_exact(dm, n_max, r, seeds, prune):
    N = len(dm)
    cost = _ExactGroups(dm, r, seeds)
    INF = math.inf
    D = np.full((n_max + 1, N + 1), INF)
    choice = np.zeros((n_max + 1, N + 1), dtype=int)
    for t in range(1, N + 1):
        D[1, t] = cost(0, t)
    for k in range(2, n_max + 1):
        if prune:
            _dc_layer(D, choice, k, cost, k, N, k - 1, N - 1)
        else:
            for t in range(k, N + 1):
                best, arg = INF, k - 1
                for s in range(k - 1, t):
                    v = D[k - 1, s] + cost(s, t)
                    if v < best:
                        best, arg = v, s
                D[k, t], choice[k, t] = best, arg
    return D, choice, lambda s, t: cost.point(s, t)[0]


def _dc_layer(D, choice, k, cost, t_lo, t_hi, s_lo, s_hi):
    """Divide and conquer over t using monotone optimal split points."""
    if t_lo > t_hi:
        return
    t = (t_lo + t_hi) // 2
    best, arg = math.inf, s_lo
    for s in range(max(s_lo, k - 1), min(s_hi, t - 1) + 1):
        v = D[k - 1, s] + cost(s, t)
        if v < best:
            best, arg = v, s
    D[k, t], choice[k, t] = best, arg
    _dc_layer(D, choice, k, cost, t_lo, t - 1, s_lo, arg)
    _dc_layer(D, choice, k, cost, t + 1, t_hi, arg, s_hi)


def _dp_table(dm, n_max, r, n_bounds, n_grid):
    """DP over a subsampled boundary set with code points on a fixed grid.

    T[b, g] = sum of cell moments of cells [0, idx_b) about grid point g, so
    a group's cost for any grid point is a row difference.
    """
    N = len(dm)
    B = min(n_bounds, N)
    idx = np.unique(np.round(np.linspace(0, N, B + 1)).astype(int))
    B = idx.size - 1
    if n_max > B:
        raise BudgetError(f"n = {n_max} exceeds the {B} candidate groups")
    hull_lo, hull_hi = dm.support_lo, dm.support_hi
    u = (np.arange(n_grid // 2) + 0.5) / (n_grid // 2)
    quant = dm.mids[np.clip(np.searchsorted(dm._cum[1:], u), 0, N - 1)]
    grid = np.unique(np.concatenate((np.linspace(hull_lo, hull_hi, n_grid - n_grid // 2), quant)))
    # adjacent cells share edges, so the antiderivative is evaluated once per edge
    edges, inv = np.unique(np.concatenate((dm.lo, dm.hi)), return_inverse=True)
    e_lo, e_hi = inv[:N], inv[N:]
    rho = (dm.mass / dm.widths)[:, None]
    T = np.zeros((B + 1, grid.size))
    chunk = max(1, 2 ** 22 // N)
    for g0 in range(0, grid.size, chunk):
        F = moment_antiderivative(edges[:, None] - grid[None, g0:g0 + chunk], r)
        seg = np.add.reduceat(rho * (F[e_hi] - F[e_lo]), idx[:-1], axis=0)
        T[1:, g0:g0 + chunk] = np.cumsum(seg, axis=0)
    C = np.full((B + 1, B + 1), math.inf)
    A = np.zeros((B + 1, B + 1), dtype=int)
    for s in range(B):
        diff = T[s + 1:] - T[s]
        A[s, s + 1:] = np.argmin(diff, axis=1)
        C[s, s + 1:] = diff[np.arange(diff.shape[0]), A[s, s + 1:]]
    D = np.full((n_max + 1, B + 1), math.inf)
    choice = np.zeros((n_max + 1, B + 1), dtype=int)
    D[1] = C[0]
    for k in range(2, n_max + 1):
        tot = D[k - 1][:, None] + C
        choice[k] = np.argmin(tot, axis=0)
        D[k] = tot[choice[k], np.arange(B + 1)]
    return D, choice, idx


def _groups_to_codebook(dm, cell_bounds, r, seeds):
    pts = []
    for s, t in zip(cell_bounds[:-1], cell_bounds[1:]):
        a, _ = optimal_point_1d((dm.lo[s:t], dm.hi[s:t], dm.mass[s:t]), r, seeds=seeds)
        pts.append(a)
    return np.array(pts)


def dp_all(dm: DiscretizedMeasure, n_max: int, r=0.0, *, engine: str = "auto",
           prune: bool = True, seeds: int = 64, polish: bool = True,
           n_bounds: int = 512, n_grid: int = 2048, polish_iter: int = 3,
           budget_cells: int = DP_CELL_BUDGET, ns=None) -> Dict[int, QuantizerResult]:
    """Optimal codebooks for every n = 1..n_max (or only those in `ns`) from one DP run.

    engine "exact": boundaries at every cell edge, continuous single-group
    optimisation (memoised; `prune` enables monotone-split divide and
    conquer).  engine "table": boundaries on a subsampled edge set and code
    points on a grid, then each group's point is re-optimised exactly.  With
    `polish`, a few Lloyd steps and then gradient refinement started at
    the DP codebook remove the boundary restriction.  "auto" picks "exact" up to EXACT_DP_CELLS cells.
    """
    r = _r(r)
    N = len(dm)
    if n_max < 1:
        raise ValueError("n must be at least 1")
    if n_max > N:
        raise BudgetError(f"n = {n_max} exceeds the cell count {N}")
    if N > budget_cells:
        raise BudgetError(f"{N} cells exceed the DP budget {budget_cells}")
    if engine == "auto":
        engine = "exact" if N <= EXACT_DP_CELLS else "table"
    if engine == "exact":
        D, choice, _ = _dp_exact(dm, n_max, r, seeds, prune)
        idx = np.arange(N + 1)
        end = N
    elif engine == "table":
        D, choice, idx = _dp_table(dm, n_max, r, n_bounds, n_grid)
        end = idx.size - 1
    else:
        raise ValueError(f"unknown DP engine {engine!r}")

    out = {}
    for n in (range(1, n_max + 1) if ns is None else sorted(set(ns))):
        bounds = [int(idx[b]) for b in _backtrack(choice, n, end)]
        pts = _groups_to_codebook(dm, bounds, r, seeds)
        diag = {"dp_value": float(D[n, end]), "boundaries": bounds, "engine": engine}
        res = evaluate(dm, pts, r, method=f"dp-{engine}", diagnostics=diag)
        if polish and n > 1:
            res = _polish(dm, res, r, seeds, polish_iter)
        out[n] = res
    return out


def _polish(dm, res, r, seeds, polish_iter):
    diag = dict(res.diagnostics)
    pol = lloyd(dm, res.n, r, init=res.codebook, seeds=seeds, max_iter=polish_iter)
    pts, obj = res.codebook.points, res.objective
    if pol.objective <= obj:
        pts, obj = pol.codebook.points, pol.objective
    gpts, gobj, nit = gradient_polish(dm, pts, r)
    diag.update(lloyd_iterations=pol.iterations, gradient_iterations=nit)
    if gobj <= obj:
        pts = gpts
    pts, _, nsteps = newton_polish(dm, pts, r)
    diag.update(newton_steps=nsteps)
    out = evaluate(dm, pts, r, method=res.method + "+polish", diagnostics=diag)
    out.iterations = pol.iterations + nit + nsteps
    return out


def dp_optimal_1d(dm: DiscretizedMeasure, n: int, r=0.0, **kw) -> QuantizerResult:
    return dp_all(dm, n, r, ns=(n,), **kw)[n]


# --------------------------------------------------------------------------
# Lloyd iteration


def _initial_points(dm, n, init):
    if isinstance(init, Codebook):
        pts = init.points.astype(float).copy()
    elif init is None or (isinstance(init, str) and init == "quantile"):
        pts = np.interp((np.arange(n) + 0.5) / n, dm._cum, np.concatenate(([dm.lo[0]], dm.hi)))
    elif isinstance(init, str) and init == "spread":
        pts = np.linspace(dm.support_lo, dm.support_hi, n + 2)[1:-1]
    elif isinstance(init, str):
        raise ValueError(f"unknown init policy {init!r}")
    else:
        pts = np.asarray(init, dtype=float)
    if pts.size != n or np.any(np.diff(pts) <= 0):
        raise ValueError("initial codebook must hold n distinct increasing points")
    if pts[0] < dm.support_lo or pts[-1] > dm.support_hi:
        raise ValueError("initial codebook must lie inside the support hull")
    return pts


def lloyd(dm: DiscretizedMeasure, n: int, r=0.0, init=None, tol: float = 1e-13,
          max_iter: int = 500, xtol: float = 1e-11, seeds: int = 64) -> QuantizerResult:
    """Alternate exact Voronoi assignment and per-cell optimal points.

    A code point whose cell loses all mass is moved to the midpoint of the
    fragment with the largest mean distortion (counted in diagnostics).
    """
    r = _r(r)
    pts = _initial_points(dm, n, init)
    hull = dm.diameter
    frags, contrib = partition_contributions(dm.lo, dm.hi, dm.mass, pts, r)
    obj = float(contrib.sum())
    history = [obj]
    reseeds = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = pts.copy()
        for i in range(n):
            sel = frags.owner == i
            if not np.any(frags.mass[sel] > 0):
                continue
            g = (frags.lo[sel], frags.hi[sel], frags.mass[sel])
            a, fa = optimal_point_1d(g, r, seeds=seeds)
            if fa < contrib[i]:
                new[i] = a
        empty = [i for i in range(n) if not np.any(frags.mass[frags.owner == i] > 0)]
        for i in empty:
            per_mass = cell_moment(frags.lo, frags.hi, frags.mass, pts[frags.owner], r) / frags.mass
            order = np.argsort(-per_mass)
            for j in order:
                cand = 0.5 * (frags.lo[j] + frags.hi[j])
                if np.all(np.abs(new - cand) > 0):
                    new[i] = cand
                    break
            reseeds += 1
        new = np.sort(new)
        if np.any(np.diff(new) <= 0):
            new = np.unique(new)
            while new.size < n:
                extra = 0.5 * (new[np.argmax(np.diff(new))] + new[np.argmax(np.diff(new)) + 1]) \
                    if new.size > 1 else new[0] + 0.25 * hull
                new = np.sort(np.append(new, extra))
                reseeds += 1
        frags_new, contrib_new = partition_contributions(dm.lo, dm.hi, dm.mass, new, r)
        obj_new = float(contrib_new.sum())
        if obj_new > obj + 1e-12 * max(1.0, abs(obj)) and not empty:
            # numerical noise in the update: keep the old codebook
            converged = True
            break
        move = float(np.max(np.abs(new - pts)))
        improvement = obj - obj_new
        pts, frags, contrib, obj = new, frags_new, contrib_new, obj_new
        history.append(obj)
        if not empty and (move <= xtol * hull or improvement < tol):
            converged = True
            break
    res_cb = Codebook(pts)
    return QuantizerResult(res_cb, obj, r, _per_cell(frags, contrib, pts), "lloyd", it,
                           converged, {"history": history, "reseeds": reseeds})


def objective_gradient(dm: DiscretizedMeasure, points, r=0.0) -> Tuple[float, np.ndarray]:
    """Objective and its gradient in the code points.

    Boundary terms cancel, so dI/da_i sums the cell-moment derivatives over
    the fragments owned by a_i.  Edge terms are merged per owner first: an
    edge shared by equal-density fragments drops out, which keeps the
    gradient finite when a code point sits on such an edge.
    """
    r = _r(r)
    pts = np.asarray(points, dtype=float)
    frags, contrib = partition_contributions(dm.lo, dm.hi, dm.mass, pts, r)
    rho = frags.mass / (frags.hi - frags.lo)
    x = np.column_stack((frags.lo, frags.hi)).ravel()
    coef = np.column_stack((rho, -rho)).ravel()
    own = np.repeat(frags.owner, 2)
    new = np.ones(x.size, dtype=bool)
    new[1:] = (x[1:] != x[:-1]) | (own[1:] != own[:-1])
    starts = np.flatnonzero(new)
    x, own = x[starts], own[starts]
    coef = np.add.reduceat(coef, starts)
    keep = np.abs(coef) > 1e-12 * rho.max()
    x, own, coef = x[keep], own[keep], coef[keep]
    u = np.abs(x - pts[own])
    with np.errstate(divide="ignore"):
        g = np.log(u) if r == 0 else u ** r
    grad = np.bincount(own, weights=coef * g, minlength=pts.size)
    return float(contrib.sum()), grad


def gradient_polish(dm: DiscretizedMeasure, codebook, r=0.0, gtol: float = 1e-13,
                    max_iter: int = 500) -> Tuple[np.ndarray, float, int]:
    """Bounded quasi-Newton refinement; returns the input when it fails to improve."""
    r = _r(r)
    pts = codebook.points if isinstance(codebook, Codebook) else np.asarray(codebook, float)
    base = distortion(dm, pts, r)
    lo, hi = dm.support_lo, dm.support_hi

    def fun(p):
        order = np.argsort(p, kind="stable")
        sp = p[order]
        if np.any(np.diff(sp) <= 0):
            return base + 1.0, np.zeros_like(p)
        f, g = objective_gradient(dm, sp, r)
        out = np.empty_like(g)
        out[order] = g
        if not np.all(np.isfinite(out)):
            out = np.nan_to_num(out, nan=0.0, posinf=1e12, neginf=-1e12)
        return f, out

    res = minimize(fun, pts, jac=True, method="L-BFGS-B", bounds=[(lo, hi)] * pts.size,
                   options={"ftol": 1e-16, "gtol": gtol, "maxiter": max_iter})
    cand = np.sort(res.x)
    if np.all(np.diff(cand) > 0):
        val = distortion(dm, cand, r)
        if val < base:
            return cand, val, int(res.nit)
    return np.asarray(pts, float), base, int(res.nit)


def newton_polish(dm: DiscretizedMeasure, codebook, r=0.0, steps: int = 4,
                  rel_step: float = 1e-7) -> Tuple[np.ndarray, float, int]:
    """Newton iterations on the gradient with a tridiagonal Hessian.

    a_i interacts only with its neighbours through the shared breakpoints,
    so central differences of the analytic gradient with every third point
    perturbed at once give the full Hessian in six gradient calls.  A step
    is kept only when it shrinks the gradient and does not raise the
    objective beyond rounding.
    """
    r = _r(r)
    pts = np.array(codebook.points if isinstance(codebook, Codebook) else codebook, dtype=float)
    f, g = objective_gradient(dm, pts, r)
    n = pts.size
    h = rel_step * dm.diameter
    lo, hi = dm.support_lo, dm.support_hi
    # rounding in a sum of len(dm) cell terms
    noise = 4 * np.finfo(float).eps * math.sqrt(len(dm)) * max(1.0, abs(f))
    done = 0
    for _ in range(steps):
        if not np.all(np.isfinite(g)) or (n > 1 and np.min(np.diff(pts)) <= 4 * h):
            break
        band = np.zeros((3, n))
        for k in range(3):
            e = np.zeros(n)
            e[k::3] = h
            col = (objective_gradient(dm, pts + e, r)[1] - objective_gradient(dm, pts - e, r)[1]) / (2 * h)
            for j in range(k, n, 3):
                band[1, j] = col[j]
                if j > 0:
                    band[0, j] = col[j - 1]
                if j + 1 < n:
                    band[2, j] = col[j + 1]
        if not np.all(np.isfinite(band)) or np.any(band[1] <= 0):
            break
        try:
            delta = solve_banded((1, 1), band, g)
        except (np.linalg.LinAlgError, ValueError):
            break
        cand = pts - delta
        if not np.all(np.isfinite(cand)) or np.any(np.diff(cand) <= 0) or cand[0] < lo or cand[-1] > hi:
            break
        fc, gc = objective_gradient(dm, cand, r)
        if not (np.max(np.abs(gc)) < np.max(np.abs(g))
                and fc <= f + noise):
            break
        pts, f, g = cand, fc, gc
        done += 1
    return pts, f, done


# --------------------------------------------------------------------------
# brute-force oracle


def _prefix_moment_table(dm, grid, r, xs):
    """Phi[g, x] = int_{-inf}^{x} m(y; grid_g) dmu(y) for each grid point and cut x."""
    full = cell_moment(dm.lo[None, :], dm.hi[None, :], dm.mass[None, :], grid[:, None], r)
    cum = np.hstack((np.zeros((grid.size, 1)), np.cumsum(full, axis=1)))
    j = np.searchsorted(dm.lo, xs, side="right") - 1
    jc = np.clip(j, 0, len(dm) - 1)
    upper = np.clip(xs, dm.lo[jc], dm.hi[jc])
    width = upper - dm.lo[jc]
    ok = width > 0
    part = np.zeros((grid.size, xs.size))
    if np.any(ok):
        sub_mass = dm.mass[jc[ok]] * width[ok] / dm.widths[jc[ok]]
        part[:, ok] = cell_moment(dm.lo[jc[ok]][None, :], upper[ok][None, :], sub_mass[None, :],
                                  grid[:, None], r)
    base = np.where(j[None, :] < 0, 0.0, cum[:, jc])
    part = np.where(j[None, :] < 0, 0.0, part)
    return base + part


def brute_force_oracle(dm: DiscretizedMeasure, n: int, r=0.0,
                       grid_resolution: int = 256) -> QuantizerResult:
    """Exhaustive search over increasing n-tuples of a grid spanning the hull.

    Cuts between grid points i < j sit on the half-grid (index i + j), so
    one prefix table gives every tuple's exact Voronoi objective.
    """
    r = _r(r)
    if n > 3:
        raise BudgetError("the brute-force oracle supports n <= 3")
    if grid_resolution > 512:
        raise BudgetError("grid_resolution is capped at 512")
    G = grid_resolution
    if n > G:
        raise BudgetError("fewer grid points than code points")
    grid = np.linspace(dm.support_lo, dm.support_hi, G)
    half = np.linspace(dm.support_lo, dm.support_hi, 2 * G - 1)
    phi_half = _prefix_moment_table(dm, grid, r, half)
    total = _prefix_moment_table(dm, grid, r, np.array([np.inf]))[:, 0]
    gi = np.arange(G)
    if n == 1:
        best = (int(np.argmin(total)),)
    elif n == 2:
        I, J = np.meshgrid(gi, gi, indexing="ij")
        M = I + J
        val = phi_half[I, M] + total[J] - phi_half[J, M]
        val[I >= J] = np.inf
        i, j = np.unravel_index(int(np.argmin(val)), val.shape)
        best = (int(i), int(j))
    else:
        best_val, best = math.inf, None
        for j in range(1, G - 1):
            left_i = gi[:j]
            lv = phi_half[left_i, left_i + j] - phi_half[j, left_i + j]
            right_k = gi[j + 1:]
            rv = phi_half[j, j + right_k] + total[right_k] - phi_half[right_k, j + right_k]
            i, k = int(np.argmin(lv)), int(np.argmin(rv))
            v = lv[i] + rv[k]
            if v < best_val:
                best_val, best = v, (int(left_i[i]), j, int(right_k[k]))
    pts = grid[list(best)]
    step = grid[1] - grid[0] if G > 1 else 0.0
    return evaluate(dm, pts, r, method="brute-force",
                    diagnostics={"grid_step": step, "grid_resolution": G})


# --------------------------------------------------------------------------
# error curve


def error_curve(dm: DiscretizedMeasure, n_max: int, r=0.0, budget: int = 512,
                **kw) -> List[Tuple[int, float, float]]:
    """(n, objective, e_{n,r}) for n = 1..n_max."""
    if n_max > budget:
        raise BudgetError(f"n_max = {n_max} exceeds the budget {budget}")
    res = dp_all(dm, n_max, r, **kw)
    return [(n, res[n].objective, res[n].error) for n in range(1, n_max + 1)]
