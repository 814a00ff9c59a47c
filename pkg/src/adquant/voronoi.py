"""Voronoi partitions induced by a codebook and the per-cell mass statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernels import Fragments, breakpoints, cell_moment, split_cells
from .measure import DiscretizedMeasure
from .quantizer import Codebook, _r, dp_all


@dataclass(frozen=True, eq=False)
class VoronoiPartition:
    codebook: Codebook
    breakpoints: np.ndarray
    fragments: Fragments
    hull: tuple

    @property
    def n(self) -> int:
        return self.codebook.n

    @property
    def assignment(self) -> np.ndarray:
        return self.fragments.owner

    def masses(self) -> np.ndarray:
        return np.bincount(self.fragments.owner, weights=self.fragments.mass, minlength=self.n)

    def cell_fragments(self, i: int):
        f = self.fragments
        sel = (f.owner == i) & (f.mass > 0)
        return f.lo[sel], f.hi[sel], f.mass[sel]

    def region_of(self, i: int) -> tuple:
        """W(a_i | alpha) as a closed interval (infinite at the ends)."""
        left = -np.inf if i == 0 else float(self.breakpoints[i - 1])
        right = np.inf if i == self.n - 1 else float(self.breakpoints[i])
        return left, right

    def owner_of(self, x) -> np.ndarray:
        """Leftmost nearest code point index for each x."""
        return np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="left")


@dataclass(frozen=True)
class CellStats:
    index: int
    point: float
    mass: float
    support_diameter: float
    inradius: float
    distortion: float
    outside_hull: bool = False

    @property
    def inradius_ratio(self) -> float:
        if self.support_diameter <= 0:
            return 0.0
        return self.inradius / self.support_diameter


@dataclass(frozen=True)
class CellSummary:
    cells: tuple
    n_min_mass: float
    n_max_mass: float
    min_inradius_ratio: float
    flagged: tuple

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)


def build_partition(dm: DiscretizedMeasure, codebook) -> VoronoiPartition:
    pts = np.asarray(codebook.points if isinstance(codebook, Codebook) else codebook, dtype=float)
    if np.any(np.diff(np.sort(pts)) == 0):
        raise ValueError("duplicate code points")
    cb = codebook if isinstance(codebook, Codebook) else Codebook(pts)
    frags = split_cells(dm.lo, dm.hi, dm.mass, cb.points)
    return VoronoiPartition(cb, breakpoints(cb.points), frags, (dm.support_lo, dm.support_hi))


def cell_stats(partition: VoronoiPartition, dm: DiscretizedMeasure, r=0.0) -> CellSummary:
    r = _r(r)
    pts = partition.codebook.points
    h_lo, h_hi = partition.hull
    cells = []
    flagged = []
    for i, a in enumerate(pts):
        lo, hi, mass = partition.cell_fragments(i)
        m = float(mass.sum())
        if m > 0:
            diam = float(hi.max() - lo.min())
            dist = float(cell_moment(lo, hi, mass, a, r).sum())
            outside = bool(a < lo.min() or a > hi.max())
        else:
            diam, dist, outside = 0.0, 0.0, True
        w_lo, w_hi = partition.region_of(i)
        left, right = max(w_lo, h_lo), min(w_hi, h_hi)
        rad = 0.0 if outside else float(max(0.0, min(a - left, right - a)))
        if outside:
            flagged.append(i)
        cells.append(CellStats(i, float(a), m, diam, rad, dist, outside))
    n = len(cells)
    masses = np.array([c.mass for c in cells])
    ratio = min(c.inradius_ratio for c in cells)
    return CellSummary(tuple(cells), float(n * masses.min()), float(n * masses.max()),
                       float(ratio), tuple(flagged))


@dataclass(frozen=True)
class BandRow:
    n: int
    n_min_mass: float
    n_max_mass: float
    min_inradius_ratio: float
    objective: float


@dataclass(frozen=True)
class MassBand:
    rows: tuple
    d1: float
    d2: float
    d3: float

    def to_dict(self) -> dict:
        return {
            "d1": self.d1,
            "d2": self.d2,
            "d3": self.d3,
            "rows": [r.__dict__ for r in self.rows],
        }


def mass_band(dm: DiscretizedMeasure, n_range: Sequence[int], r=0.0, results=None,
              **dp_kw) -> MassBand:
    """Empirical d1 = inf n*min mass, d2 = sup n*max mass, d3 = inf inradius ratio."""
    ns = sorted(set(int(n) for n in n_range))
    if results is None:
        results = dp_all(dm, ns[-1], r, **dp_kw)
    rows = []
    for n in ns:
        s = cell_stats(build_partition(dm, results[n].codebook), dm, r)
        rows.append(BandRow(n, s.n_min_mass, s.n_max_mass, s.min_inradius_ratio,
                            results[n].objective))
    return MassBand(tuple(rows), min(x.n_min_mass for x in rows),
                    max(x.n_max_mass for x in rows), min(x.min_inradius_ratio for x in rows))
