"""Finite unions of closed intervals on the line.

Boundary points carry no mass for any measure handled by this package, so
set differences are returned as closures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

Pair = Tuple[float, float]


def _normalize(pairs: Iterable[Pair]) -> Tuple[Pair, ...]:
    items = sorted((float(lo), float(hi)) for lo, hi in pairs if hi >= lo)
    merged: list[list[float]] = []
    for lo, hi in items:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class IntervalSet:
    """Canonical sorted list of disjoint closed intervals."""

    pieces: Tuple[Pair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", _normalize(self.pieces))

    @classmethod
    def of(cls, *pairs: Pair) -> "IntervalSet":
        return cls(tuple(pairs))

    @classmethod
    def ball(cls, center: float, radius: float) -> "IntervalSet":
        return cls(((center - radius, center + radius),))

    @property
    def empty(self) -> bool:
        return not self.pieces

    @property
    def lo(self) -> float:
        return self.pieces[0][0]

    @property
    def hi(self) -> float:
        return self.pieces[-1][1]

    @property
    def diameter(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    @property
    def length(self) -> float:
        return sum(hi - lo for lo, hi in self.pieces)

    def as_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        arr = np.array(self.pieces, dtype=float).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.pieces + other.pieces)

    __or__ = union

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.pieces, other.pieces
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    __and__ = intersection

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for lo, hi in self.pieces:
            cur = lo
            for olo, ohi in other.pieces:
                if ohi <= cur or olo >= hi:
                    continue
                if olo > cur:
                    out.append((cur, olo))
                cur = max(cur, ohi)
                if cur >= hi:
                    break
            if cur < hi:
                out.append((cur, hi))
        # drop degenerate slivers left by touching endpoints
        return IntervalSet(tuple(p for p in out if p[1] > p[0]))

    __sub__ = difference

    def enlarge(self, t: float) -> "IntervalSet":
        """Closed t-neighbourhood."""
        return IntervalSet(tuple((lo - t, hi + t) for lo, hi in self.pieces))

    def contains_point(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self.pieces)

    def contains(self, other: "IntervalSet", tol: float = 0.0) -> bool:
        """True when every piece of `other` sits inside one piece of self."""
        for olo, ohi in other.pieces:
            if not any(lo - tol <= olo and ohi <= hi + tol for lo, hi in self.pieces):
                return False
        return True

    def intersects(self, other: "IntervalSet") -> bool:
        return not self.intersection(other).empty

    def to_list(self) -> list:
        return [[lo, hi] for lo, hi in self.pieces]


def interval_set(spec: "IntervalSet | Sequence[Pair] | Pair") -> IntervalSet:
    """Coerce a pair, a list of pairs, or an IntervalSet."""
    if isinstance(spec, IntervalSet):
        return spec
    if len(spec) == 2 and np.isscalar(spec[0]):
        return IntervalSet((tuple(spec),))
    return IntervalSet(tuple(tuple(p) for p in spec))
