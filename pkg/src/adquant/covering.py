"""Ball packings of the support, their neighbourhood graph, greedy covers and
the closed-form constants built from the Ahlfors-David bounds."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .intervals import IntervalSet, interval_set
from .measure import ADProfile, DiscretizedMeasure, MeasureError

FLOOR_GUARD = 1e-9
PACKING_FLOOR = 4.0


def _floor(x: float) -> int:
    # integer part, robust to values like 8.999999999 that are 9 in exact arithmetic
    return int(math.floor(x + FLOOR_GUARD * max(1.0, abs(x))))


def greedy_sweep(candidates: np.ndarray, separation: float) -> np.ndarray:
    """Leftmost greedy selection with consecutive gaps strictly above `separation`."""
    cand = np.sort(np.asarray(candidates, dtype=float))
    if cand.size == 0:
        return cand
    chosen = [cand[0]]
    while True:
        j = int(np.searchsorted(cand, chosen[-1] + separation, side="right"))
        if j >= cand.size:
            break
        chosen.append(cand[j])
    return np.array(chosen)


def nearest_distance(centers: np.ndarray, x) -> np.ndarray:
    """Distance from each x to the nearest of the sorted centres."""
    x = np.asarray(x, dtype=float)
    j = np.searchsorted(centers, x)
    left = np.abs(x - centers[np.clip(j - 1, 0, centers.size - 1)])
    right = np.abs(x - centers[np.clip(j, 0, centers.size - 1)])
    return np.minimum(left, right)


def max_packing_1d(dm: DiscretizedMeasure, radius: float) -> np.ndarray:
    """Centres (support cell midpoints) of a maximum packing by closed balls.

    Closed balls are disjoint only when centres are more than 2*radius apart.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    return greedy_sweep(dm.mids[dm.mass > 0], 2.0 * radius)


@dataclass(frozen=True, eq=False)
class Packing:
    m: int
    k: int
    centers: np.ndarray
    k0: int = 1

    @property
    def radius(self) -> float:
        return float(self.m) ** (-self.k)

    @property
    def phi(self) -> int:
        return int(self.centers.size)

    def E(self, i: int) -> IntervalSet:
        return IntervalSet.ball(float(self.centers[i]), self.radius)

    def A(self, i: int) -> IntervalSet:
        return IntervalSet.ball(float(self.centers[i]), 2.0 * self.radius)

    @property
    def A_diameter(self) -> float:
        return 4.0 * self.radius

    @property
    def E_diameter(self) -> float:
        return 2.0 * self.radius

    def A_union(self) -> IntervalSet:
        return IntervalSet(tuple((c - 2 * self.radius, c + 2 * self.radius) for c in self.centers))

    def owner_of(self, x: float, delta: float = 0.0) -> int:
        """First sigma whose (A_sigma)_{delta|A_sigma|} contains x, or -1."""
        reach = 2.0 * self.radius + delta * self.A_diameter
        hit = np.flatnonzero(np.abs(self.centers - x) <= reach)
        return int(hit[0]) if hit.size else -1

    def disjoint(self) -> bool:
        return bool(np.all(np.diff(self.centers) > 2.0 * self.radius))

    def covers_support(self, dm: DiscretizedMeasure) -> bool:
        d = nearest_distance(self.centers, dm.mids[dm.mass > 0])
        return bool(np.all(d <= 2.0 * self.radius))

    def to_dict(self) -> dict:
        return {"level": self.k, "m": self.m, "radius": self.radius, "phi_k": self.phi,
                "centers": self.centers.tolist()}


def packing_base(C1: float, C2: float, s0: float) -> int:
    """Smallest integer m > 2 (C2/C1)^(1/s0)."""
    return _floor(2.0 * (C2 / C1) ** (1.0 / s0)) + 1


def first_level(m: int, eps0: float) -> int:
    """Smallest k with 2 m^{-k} < eps0."""
    k = 1
    while 2.0 * float(m) ** (-k) >= eps0:
        k += 1
    return k


def build_packing(dm: DiscretizedMeasure, profile: Optional[ADProfile], k: int,
                  m: Optional[int] = None) -> Packing:
    if m is None:
        if profile is None:
            raise ValueError("either a profile or an explicit m is required")
        m = packing_base(profile.C1_hat, profile.C2_hat, profile.s0)
    k0 = first_level(m, profile.eps0_hat) if profile is not None else 1
    radius = float(m) ** (-k)
    if radius < PACKING_FLOOR * dm.max_width:
        raise MeasureError(f"m^-k = {radius:.3g} is below the discretization floor "
                           f"{PACKING_FLOOR} x {dm.max_width:.3g}")
    return Packing(int(m), int(k), max_packing_1d(dm, radius), k0)


@dataclass(frozen=True)
class NeighborGraph:
    delta: float
    neighbors: tuple
    star: tuple

    @property
    def M(self) -> List[int]:
        return [len(nb) for nb in self.neighbors]

    def to_dict(self) -> dict:
        return {"delta": self.delta, "M_sigma": self.M,
                "neighbors": [list(nb) for nb in self.neighbors]}


def neighbor_graph(packing: Packing, delta: float) -> NeighborGraph:
    """tau ~ sigma iff the 2*delta*|A|-enlargements of A_tau and A_sigma meet."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    reach = 2.0 * packing.radius + 2.0 * delta * packing.A_diameter
    c = packing.centers
    lo = np.searchsorted(c, c - 2.0 * reach, side="left")
    hi = np.searchsorted(c, c + 2.0 * reach, side="right")
    neighbors = tuple(tuple(range(int(a), int(b))) for a, b in zip(lo, hi))
    star = tuple(IntervalSet(tuple((c[t] - 2 * packing.radius, c[t] + 2 * packing.radius)
                                   for t in nb)) for nb in neighbors)
    return NeighborGraph(float(delta), neighbors, star)


COVER_KINDS = ("B_sigma", "gamma_E", "G_x", "H_sigma")


@dataclass(frozen=True, eq=False)
class CoverSet:
    kind: str
    target: IntervalSet
    radius: float
    centers: np.ndarray
    verified: bool
    uncovered: Optional[float] = None

    @property
    def count(self) -> int:
        return int(self.centers.size)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target.to_list(), "radius": self.radius,
                "count": self.count, "verified": self.verified,
                "centers": self.centers.tolist()}


class CoverError(RuntimeError):
    pass


def _probe(target: IntervalSet, pitch: float) -> np.ndarray:
    pts = []
    for lo, hi in target.pieces:
        k = max(1, int(math.ceil((hi - lo) / pitch)))
        pts.append(np.linspace(lo, hi, k + 1))
    return np.unique(np.concatenate(pts)) if pts else np.empty(0)


def greedy_cover(target, radius: float, candidates=None, kind: str = "generic",
                 strict: bool = True) -> CoverSet:
    """Pack balls of radius/2 centred in the target, then double the radii.

    Candidates default to the probe grid of pitch radius/16 over the target;
    coverage is verified on that grid.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    tgt = interval_set(target)
    probe = _probe(tgt, radius / 16.0)
    cand = probe if candidates is None else np.asarray(candidates, dtype=float)
    centers = greedy_sweep(cand, radius)
    if centers.size == 0:
        verified, worst = probe.size == 0, None
    else:
        d = nearest_distance(centers, probe)
        bad = np.flatnonzero(d > radius * (1 + 1e-12))
        verified = bad.size == 0
        worst = None if verified else float(probe[bad[0]])
    cover = CoverSet(kind, tgt, float(radius), centers, bool(verified), worst)
    if strict and not verified:
        raise CoverError(f"{kind} cover misses probe point {worst}")
    return cover


def standard_covers(packing: Packing, sigma: int, delta: float, x=None) -> Dict[str, CoverSet]:
    """The four covers attached to A_sigma: B_sigma, gamma_E, G_x and H_sigma."""
    A = packing.A(sigma)
    a = packing.A_diameter
    e = packing.E_diameter
    x = float(packing.centers[sigma]) if x is None else float(x)
    return {
        "B_sigma": greedy_cover(A.enlarge(2 * delta * a), 0.5 * delta * a, kind="B_sigma"),
        "gamma_E": greedy_cover(packing.E(sigma), 0.5 * delta * e, kind="gamma_E"),
        "G_x": greedy_cover(IntervalSet.ball(x, 0.5 * delta * a), 0.25 * delta * a, kind="G_x"),
        "H_sigma": greedy_cover(A, 0.25 * delta * a, kind="H_sigma"),
    }


@dataclass
class AuxiliaryConstants:
    C1: float
    C2: float
    s0: float
    q: int
    m: int
    delta: float
    L0: int
    L1: int
    L2: int
    n0: int
    M0: int
    eta1: float
    eta2: float
    xi1: float
    xi2: float
    xi3: float
    xi4: float
    xi: float
    zeta: float
    eta3: float
    eta4: float
    N: int
    n1: Optional[int] = None
    n2: Optional[int] = None
    n3: Optional[int] = None
    n4: Optional[int] = None
    n5: Optional[int] = None
    notes: Dict[str, str] = field(default_factory=dict)

    def cover_bound(self, kind: str) -> int:
        return {"B_sigma": self.L0, "gamma_E": self.L1, "G_x": self.L2, "H_sigma": self.n0}[kind]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def constants_from(C1: float, C2: float, s0: float, q: int = 1, m: Optional[int] = None,
                   N: Optional[int] = None, delta: Optional[float] = None) -> AuxiliaryConstants:
    """Evaluate every closed-form constant from the two-sided ball-mass bounds.

    N defaults to the volume bound (2m+1)^q: each radius-m^{-(k+1)} packing
    ball centred in the support lies in B(c_sigma, 2m^{-k} + m^{-(k+1)}).
    """
    if not (0 < C1 <= C2) or not s0 > 0:
        raise ValueError("need 0 < C1 <= C2 and s0 > 0")
    if q not in (1, 2):
        raise ValueError("q must be 1 or 2")
    d = (C1 / C2) ** (1.0 / s0) / 16.0 if delta is None else float(delta)
    if not 0 < d <= 1.0 / 16.0 + 1e-15:
        raise ValueError("delta must lie in (0, 1/16]")
    m = packing_base(C1, C2, s0) if m is None else int(m)
    L0 = _floor(2.0 / d + 10.0)
    L1 = _floor((2.0 / d + 1.0) ** q) + 1
    L2 = 6 ** q
    n0 = _floor((4.0 / d + 1.0) ** q) + 1
    M0 = _floor((8.0 * (1.0 + 2.0 * d)) ** q) + 1
    eta1 = C1 / C2
    eta2 = (C2 / C1) ** 2 * 2.0 ** s0
    xi1 = C1 * (2.0 ** -s0 - 16.0 ** -s0) * (8.0 * (1 + 2 * d)) ** -s0
    xi2 = C2 * (4.0 * (1 + 2 * d)) ** s0 * (1 - 2 * d) ** -s0
    xi3 = C2 * 4.0 ** s0 * (1 + 2 * d) ** s0
    xi4 = C1 * 4.0 ** -s0 * (4.0 * (1 + 2 * d)) ** -s0
    xi = max(1.0 / xi1, 1.0 / xi4, xi2, xi3)
    zeta = xi * (8.0 * (1 + 2 * d)) ** s0 / C1 * (0.5 - d) ** -s0
    eta3 = C2 * (3.0 + 8.0 * d) ** s0
    eta4 = C1 * 2.0 ** -s0
    notes = {}
    if N is None:
        N = (2 * m + 1) ** q
        notes["N"] = "volume bound (2m+1)^q"
    return AuxiliaryConstants(C1, C2, s0, q, m, d, L0, L1, L2, n0, M0, eta1, eta2,
                              xi1, xi2, xi3, xi4, xi, zeta, eta3, eta4, int(N), notes=notes)


def constants_from_profile(profile: ADProfile, q: int = 1, **kw) -> AuxiliaryConstants:
    return constants_from(profile.C1_hat, profile.C2_hat, profile.s0, q, **kw)


@dataclass
class PackingMassReport:
    level: int
    phi: int
    values: np.ndarray
    band: tuple
    ideal_band: tuple

    @property
    def passed(self) -> bool:
        lo, hi = self.band
        return bool(np.all((self.values >= lo) & (self.values <= hi)))

    def to_dict(self) -> dict:
        return {"level": self.level, "phi_k": self.phi, "values": self.values.tolist(),
                "band": list(self.band), "ideal_band": list(self.ideal_band),
                "passed": self.passed}


def verify_packing_mass(packing: Packing, dm: DiscretizedMeasure,
                        constants: AuxiliaryConstants) -> PackingMassReport:
    """phi_k * mu(A_sigma) for every sigma against [eta1, eta2].

    `constants` should come from the profile estimates; the idealised band
    (C1 = C2) is reported alongside.
    """
    r2 = 2.0 * packing.radius
    vals = packing.phi * dm.interval_mass(packing.centers - r2, packing.centers + r2)
    ideal = (1.0, 2.0 ** constants.s0)
    return PackingMassReport(packing.k, packing.phi, np.asarray(vals, dtype=float),
                             (constants.eta1, constants.eta2), ideal)


def dumps(obj) -> str:
    return json.dumps(obj.to_dict() if hasattr(obj, "to_dict") else obj, sort_keys=True, indent=2)
