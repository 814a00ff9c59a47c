"""Measure models, uniform-cell discretisation, ball masses and the
Ahlfors-David profile.

A `DiscretizedMeasure` is a sorted run of disjoint cells, each carrying a
mass spread uniformly over ``[lo, hi]``.  Uniform density (rather than atoms)
keeps ``log d(x, a)`` integrable for every code point ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from .intervals import IntervalSet, interval_set

MASS_TOL = 1e-12
CELL_BUDGET = 2 ** 24


class MeasureError(ValueError):
    """Invalid measure model or discretisation request."""


class BudgetError(RuntimeError):
    """A configured computational budget would be exceeded."""


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class IfsMap:
    ratio: float
    offset: float
    prob: float

    def __call__(self, x):
        return self.ratio * x + self.offset


@dataclass(frozen=True)
class IfsSelfSimilar:
    """Self-similar measure of an IFS of increasing similitudes on the line.

    ``feasible`` is the interval I with f_i(I) ⊂ I used for the open set
    condition; the cylinders f_w(I) are the discretisation cells.
    """

    maps: Tuple[IfsMap, ...]
    feasible: Tuple[float, float] = (0.0, 1.0)
    q: int = 1

    def __post_init__(self):
        maps = tuple(m if isinstance(m, IfsMap) else IfsMap(*m) for m in self.maps)
        object.__setattr__(self, "maps", maps)
        if len(maps) < 2:
            raise MeasureError("an IFS needs at least two maps")
        for m in maps:
            if not 0.0 < m.ratio < 1.0:
                raise MeasureError(f"contraction ratio {m.ratio} not in (0, 1)")
            if m.prob <= 0.0:
                raise MeasureError(f"probability {m.prob} must be positive")
        total = sum(m.prob for m in maps)
        if abs(total - 1.0) > MASS_TOL:
            raise MeasureError(f"IFS probabilities sum to {total!r}, not 1")
        lo, hi = self.feasible
        if not hi > lo:
            raise MeasureError("feasible interval must have hi > lo")
        images = sorted((m(lo), m(hi)) for m in maps)
        for (a_lo, a_hi), (b_lo, b_hi) in zip(images, images[1:]):
            if b_lo < a_hi:
                raise MeasureError(
                    f"IFS images [{a_lo}, {a_hi}] and [{b_lo}, {b_hi}] overlap"
                )
        for im_lo, im_hi in images:
            if im_lo < lo - 1e-15 or im_hi > hi + 1e-15:
                raise MeasureError("IFS image leaves the feasible interval")

    @property
    def similarity_dimension(self) -> float:
        """Root s of sum_i c_i**s = 1."""
        from scipy.optimize import brentq

        ratios = [m.ratio for m in self.maps]
        return brentq(lambda s: sum(c ** s for c in ratios) - 1.0, 1e-9, 50.0)

    @property
    def natural_dimension(self) -> float:
        """s with p_i = c_i^s for all i, if the weights are natural; else None."""
        vals = [math.log(m.prob) / math.log(m.ratio) for m in self.maps]
        if max(vals) - min(vals) < 1e-12:
            return vals[0]
        return None


@dataclass(frozen=True)
class UniformInterval:
    lo: float = 0.0
    hi: float = 1.0
    q: int = 1

    def __post_init__(self):
        if not self.hi > self.lo:
            raise MeasureError("uniform interval needs hi > lo")


@dataclass(frozen=True)
class Mixture:
    """Weighted sum of models with pairwise disjoint supports."""

    components: Tuple[Tuple[float, object], ...]
    q: int = 1

    def __post_init__(self):
        if not self.components:
            raise MeasureError("empty mixture")
        total = sum(w for w, _ in self.components)
        if abs(total - 1.0) > MASS_TOL:
            raise MeasureError(f"mixture weights sum to {total!r}, not 1")
        if any(w <= 0 for w, _ in self.components):
            raise MeasureError("mixture weights must be positive")


MeasureModel = Union[IfsSelfSimilar, UniformInterval, Mixture]


def cantor() -> IfsSelfSimilar:
    """Middle-thirds Cantor measure with equal weights."""
    return IfsSelfSimilar((IfsMap(1 / 3, 0.0, 0.5), IfsMap(1 / 3, 2 / 3, 0.5)))


# --------------------------------------------------------------------------
# discretised measure


@dataclass(frozen=True)
class MassCell:
    lo: float
    hi: float
    mass: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise MeasureError(f"cell [{self.lo}, {self.hi}] has non-positive width")
        if not self.mass > 0:
            raise MeasureError("cell mass must be positive")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscretizedMeasure:
    """Probability measure as sorted uniform-density cells."""

    lo: np.ndarray
    hi: np.ndarray
    mass: np.ndarray
    depth: int = 0
    normalize: bool = field(default=False, repr=False)

    def __post_init__(self):
        lo, hi, mass = _frozen(self.lo), _frozen(self.hi), _frozen(self.mass)
        if not (lo.shape == hi.shape == mass.shape) or lo.ndim != 1 or lo.size == 0:
            raise MeasureError("cells must be non-empty 1-d arrays of equal length")
        if np.any(hi <= lo):
            raise MeasureError("every cell needs hi > lo")
        if np.any(mass <= 0):
            raise MeasureError("every cell needs positive mass")
        if np.any(lo[1:] < hi[:-1]):
            raise MeasureError("cells must be sorted and non-overlapping")
        total = float(mass.sum())
        if self.normalize:
            mass = _frozen(mass / total)
        elif abs(total - 1.0) > MASS_TOL:
            raise MeasureError(f"total mass {total!r} differs from 1")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "_cum", np.concatenate(([0.0], np.cumsum(mass))))

    @classmethod
    def from_cells(cls, cells: Sequence, depth: int = 0, normalize=False):
        arr = np.array([(c.lo, c.hi, c.mass) if isinstance(c, MassCell) else tuple(c)
                        for c in cells], dtype=float)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], depth=depth, normalize=normalize)

    def __len__(self):
        return self.lo.size

    @property
    def cells(self) -> list:
        return [MassCell(a, b, w) for a, b, w in zip(self.lo, self.hi, self.mass)]

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.widths

    @property
    def support_lo(self) -> float:
        return float(self.lo[0])

    @property
    def support_hi(self) -> float:
        return float(self.hi[-1])

    @property
    def diameter(self) -> float:
        return self.support_hi - self.support_lo

    @property
    def max_width(self) -> float:
        return float(self.widths.max())

    @property
    def support(self) -> IntervalSet:
        return IntervalSet(tuple(zip(self.lo.tolist(), self.hi.tolist())))

    def cdf(self, x) -> np.ndarray:
        """mu((-inf, x]) under the uniform-cell model, vectorised."""
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(self.lo, x, side="right") - 1
        jc = np.clip(j, 0, len(self) - 1)
        frac = np.clip((x - self.lo[jc]) / (self.hi[jc] - self.lo[jc]), 0.0, 1.0)
        out = self._cum[jc] + self.mass[jc] * frac
        return np.where(j < 0, 0.0, out)

    def interval_mass(self, a, b) -> np.ndarray:
        return np.clip(self.cdf(b) - self.cdf(a), 0.0, 1.0)

    def region_mass(self, region) -> float:
        reg = interval_set(region)
        return float(sum(self.interval_mass(lo, hi) for lo, hi in reg.pieces))


# --------------------------------------------------------------------------
# discretisation


def _ifs_cells(model: IfsSelfSimilar, depth: int):
    lo = np.array([model.feasible[0]])
    hi = np.array([model.feasible[1]])
    mass = np.array([1.0])
    for _ in range(depth):
        # f_i applied outermost: depth-d cylinders are f_i(depth-(d-1) cylinders)
        lo = np.concatenate([m.ratio * lo + m.offset for m in model.maps])
        hi = np.concatenate([m.ratio * hi + m.offset for m in model.maps])
        mass = np.concatenate([m.prob * mass for m in model.maps])
    order = np.argsort(lo, kind="stable")
    return lo[order], hi[order], mass[order]


def _model_cells(model, depth: int):
    if isinstance(model, UniformInterval):
        edges = np.linspace(model.lo, model.hi, 2 ** depth + 1)
        cnt = 2 ** depth
        return edges[:-1], edges[1:], np.full(cnt, 1.0 / cnt)
    if isinstance(model, IfsSelfSimilar):
        return _ifs_cells(model, depth)
    if isinstance(model, Mixture):
        parts = [_model_cells(m, depth) for _, m in model.components]
        lo = np.concatenate([p[0] for p in parts])
        hi = np.concatenate([p[1] for p in parts])
        mass = np.concatenate([w * p[2] for (w, _), p in zip(model.components, parts)])
        order = np.argsort(lo, kind="stable")
        lo, hi, mass = lo[order], hi[order], mass[order]
        if np.any(lo[1:] < hi[:-1]):
            raise MeasureError("mixture components overlap")
        return lo, hi, mass
    raise MeasureError(f"unknown measure model {type(model).__name__}")


def cell_count(model, depth: int) -> int:
    if isinstance(model, UniformInterval):
        return 2 ** depth
    if isinstance(model, IfsSelfSimilar):
        return len(model.maps) ** depth
    if isinstance(model, Mixture):
        return sum(cell_count(m, depth) for _, m in model.components)
    raise MeasureError(f"unknown measure model {type(model).__name__}")


def discretize(model: MeasureModel, depth: int, budget: int = CELL_BUDGET) -> DiscretizedMeasure:
    """Cells of the depth-level cylinders (IFS) or 2**depth equal cells (uniform)."""
    if depth < 0:
        raise MeasureError("depth must be non-negative")
    if getattr(model, "q", 1) != 1:
        raise MeasureError("only q = 1 models can be discretised")
    count = cell_count(model, depth)
    if count > budget:
        raise BudgetError(f"depth {depth} needs {count} cells, budget is {budget}")
    lo, hi, mass = _model_cells(model, depth)
    return DiscretizedMeasure(lo, hi, mass, depth=depth, normalize=True)


# --------------------------------------------------------------------------
# ball masses and the AD profile


def ball_mass(dm: DiscretizedMeasure, center, radius) -> np.ndarray:
    """mu([center - radius, center + radius]); partial cells count pro rata."""
    radius = np.asarray(radius, dtype=float)
    if np.any(radius <= 0):
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=float)
    out = dm.interval_mass(center - radius, center + radius)
    return float(out) if out.ndim == 0 else out


@dataclass
class ADProfile:
    s0: float
    C1_hat: float
    C2_hat: float
    eps0_hat: float
    eps: np.ndarray
    min_ratio: np.ndarray
    max_ratio: np.ndarray
    sup_ratio: np.ndarray
    slope_min: float
    slope_max: float
    n_centers: int
    slope_tol: float = 0.1

    @property
    def is_ad(self) -> bool:
        """No systematic power-law drift of the ratio extremes with scale."""
        return abs(self.slope_min) <= self.slope_tol and abs(self.slope_max) <= self.slope_tol

    def to_dict(self) -> dict:
        return {
            "s0": self.s0,
            "C1_hat": self.C1_hat,
            "C2_hat": self.C2_hat,
            "eps0_hat": self.eps0_hat,
            "slope_min": self.slope_min,
            "slope_max": self.slope_max,
            "is_ad": self.is_ad,
            "n_centers": self.n_centers,
            "n_scales": int(self.eps.size),
        }

    def rows(self):
        for e, a, b, c in zip(self.eps, self.min_ratio, self.max_ratio, self.sup_ratio):
            yield {"eps": e, "min_ratio": a, "max_ratio": b, "sup_ratio": c}


def default_eps_grid(dm: DiscretizedMeasure, points_per_decade: int = 24) -> np.ndarray:
    floor = 4.0 * dm.max_width
    top = dm.diameter
    if top <= floor:
        raise MeasureError("support too coarse for an AD scan; increase depth")
    decades = math.log10(top / floor)
    count = max(8, int(math.ceil(decades * points_per_decade)) + 1)
    return np.geomspace(floor * (1 + 1e-9), top, count)


def _slope(eps: np.ndarray, ratio: np.ndarray) -> float:
    if eps.size < 3:
        return 0.0
    return float(np.polyfit(np.log(eps), np.log(ratio), 1)[0])


def ad_validate(
    dm: DiscretizedMeasure,
    s0: float,
    eps_grid=None,
    sample_count: int = 4096,
    seed: int = 0,
) -> ADProfile:
    """Estimate the two-sided constants of mu(B(x, eps)) ~ eps**s0.

    Lower extremes use support centres (mass-weighted cell midpoints plus both
    support endpoints); the upper constant is the exact supremum over all
    x in R, attained where an endpoint of the ball meets a cell edge.
    """
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    floor = 4.0 * dm.max_width
    eps = default_eps_grid(dm) if eps_grid is None else np.sort(np.asarray(eps_grid, float))
    if np.any(eps <= floor):
        raise MeasureError(
            f"eps grid reaches {eps.min():.3g}, below the floor 4 x cell width = {floor:.3g}"
        )
    if sample_count >= len(dm):
        centers = dm.mids
    else:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(dm), size=sample_count, replace=False, p=dm.mass))
        centers = dm.mids[idx]
    centers = np.unique(np.concatenate(([dm.support_lo, dm.support_hi], centers)))
    edges = np.unique(np.concatenate((dm.lo, dm.hi)))

    mins, maxs, sups = [], [], []
    for e in eps:
        r = ball_mass(dm, centers, e) / e ** s0
        mins.append(r.min())
        maxs.append(r.max())
        cand = np.concatenate((edges - e, edges + e))
        sups.append(max(ball_mass(dm, cand, e).max() / e ** s0, r.max()))
    mins, maxs, sups = np.array(mins), np.array(maxs), np.array(sups)

    small = eps <= dm.diameter / 4
    if small.sum() < 3:
        small = np.ones_like(eps, dtype=bool)
    return ADProfile(
        s0=float(s0),
        C1_hat=float(mins.min()),
        C2_hat=float(sups.max()),
        eps0_hat=float(eps.max()),
        eps=eps,
        min_ratio=mins,
        max_ratio=maxs,
        sup_ratio=sups,
        slope_min=_slope(eps[small], mins[small]),
        slope_max=_slope(eps[small], sups[small]),
        n_centers=int(centers.size),
    )


# --------------------------------------------------------------------------
# restriction, conditioning, similarity maps


def restrict(dm: DiscretizedMeasure, region) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cells clipped to `region`, masses reduced pro rata (not renormalised)."""
    reg = interval_set(region)
    los, his, ms = [], [], []
    for plo, phi in reg.pieces:
        i0 = max(int(np.searchsorted(dm.hi, plo, side="right")), 0)
        i1 = int(np.searchsorted(dm.lo, phi, side="left"))
        if i1 <= i0:
            continue
        lo = np.maximum(dm.lo[i0:i1], plo)
        hi = np.minimum(dm.hi[i0:i1], phi)
        keep = hi > lo
        w = dm.widths[i0:i1]
        los.append(lo[keep])
        his.append(hi[keep])
        ms.append((dm.mass[i0:i1] * (hi - lo) / w)[keep])
    if not los:
        return np.empty(0), np.empty(0), np.empty(0)
    return np.concatenate(los), np.concatenate(his), np.concatenate(ms)


@dataclass(frozen=True, eq=False)
class ConditionalMeasure:
    """mu(. | B) together with the similarity f_B(y) = offset + scale_ratio * y."""

    base: DiscretizedMeasure
    region: IntervalSet
    region_diameter: float
    scale_ratio: float
    offset: float
    mass_of_region: float

    @property
    def rescaled(self) -> DiscretizedMeasure:
        """nu_B = mu(. | B) o f_B, supported in [0, 1]."""
        return scale_translate(self.base, 1.0 / self.scale_ratio, -self.offset / self.scale_ratio)

    def to_local(self, x):
        return (np.asarray(x, float) - self.offset) / self.scale_ratio

    def to_global(self, y):
        return self.offset + self.scale_ratio * np.asarray(y, float)


def conditional(dm: DiscretizedMeasure, region) -> ConditionalMeasure:
    reg = interval_set(region)
    lo, hi, m = restrict(dm, reg)
    total = float(m.sum())
    if total <= 0.0 or reg.diameter <= 0.0:
        raise MeasureError("region carries no mass")
    base = DiscretizedMeasure(lo, hi, m, depth=dm.depth, normalize=True)
    return ConditionalMeasure(
        base=base,
        region=reg,
        region_diameter=reg.diameter,
        scale_ratio=reg.diameter,
        offset=reg.lo,
        mass_of_region=total,
    )


def scale_translate(dm: DiscretizedMeasure, ratio: float, offset: float = 0.0) -> DiscretizedMeasure:
    """Push forward under x -> ratio * x + offset (ratio > 0); masses unchanged."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    return DiscretizedMeasure(ratio * dm.lo + offset, ratio * dm.hi + offset, dm.mass,
                              depth=dm.depth, normalize=True)
