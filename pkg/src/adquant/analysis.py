"""Verification machinery on top of the quantizer, Voronoi and packing layers.

Regions are resolved to canonical interval sets; every report is a plain
dataclass with a ``to_dict`` for JSON output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .covering import AuxiliaryConstants, NeighborGraph, Packing, max_packing_1d, nearest_distance
from .intervals import IntervalSet, interval_set
from .measure import DiscretizedMeasure, MeasureError, conditional, restrict
from .kernels import cell_moment
from .quantizer import (Codebook, QuantizerResult, _r, distortion, dp_all, dp_optimal_1d,
                        local_minima_1d, optimal_point_1d)
from .voronoi import build_partition, cell_stats, mass_band

REGION_KINDS = ("D1", "D2", "D3", "D4", "E", "F1", "F2", "F3", "G", "Ha")
BUDGET_EXCEEDED = "budget-exceeded"


def _points(codebook) -> np.ndarray:
    if codebook is None:
        return np.empty(0)
    if isinstance(codebook, QuantizerResult):
        codebook = codebook.codebook
    if isinstance(codebook, Codebook):
        return codebook.points
    return np.sort(np.asarray(codebook, dtype=float))


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class RegionSpec:
    kind: str
    region: IntervalSet
    mass: float
    diameter: float
    params: tuple = ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "pieces": self.region.to_list(), "mass": self.mass,
                "diameter": self.diameter, "params": dict(self.params)}


def voronoi_region(points: np.ndarray, i: int) -> IntervalSet:
    """W(a_i | alpha): the closed interval between neighbouring breakpoints."""
    left = -np.inf if i == 0 else 0.5 * (points[i - 1] + points[i])
    right = np.inf if i == points.size - 1 else 0.5 * (points[i] + points[i + 1])
    return IntervalSet(((float(left), float(right)),))


def enlarged_members(points: np.ndarray, packing: Packing, sigma: int, delta: float) -> np.ndarray:
    """Indices of code points in (A_sigma)_{delta |A_sigma|}."""
    reach = 2.0 * packing.radius + delta * packing.A_diameter
    return np.flatnonzero(np.abs(points - packing.centers[sigma]) <= reach * (1 + 1e-12))


def voronoi_union(points, packing: Packing, graph: NeighborGraph, omega: int) -> IntervalSet:
    """Union of W(a|alpha) & A_omega* over a in alpha & (A_omega)_{delta|A_omega|}."""
    out = IntervalSet()
    star = graph.star[omega]
    for i in enlarged_members(points, packing, omega, graph.delta):
        out = out | (voronoi_region(points, int(i)) & star)
    return out


def support_of_cell(dm: DiscretizedMeasure, points: np.ndarray, i: int) -> IntervalSet:
    """P_{a_i}(alpha) & K on the discretized support (positive-mass fragments)."""
    w = voronoi_region(points, i)
    lo, hi, m = restrict(dm, w)
    keep = m > 0
    return IntervalSet(tuple(zip(lo[keep].tolist(), hi[keep].tolist())))


def _x0_default(dm, packing: Packing, omega: int, points: np.ndarray) -> float:
    """Support point of A_omega farthest from the codebook."""
    x, _ = sup_distance(dm, packing.A(omega), points)
    return x


def sup_distance(dm: DiscretizedMeasure, region, points) -> Tuple[float, float]:
    """(argmax, max) of d(x, alpha) over the discretized support inside `region`."""
    lo, hi, m = restrict(dm, region)
    keep = m > 0
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        raise MeasureError("region carries no mass")
    pts = np.asarray(points, dtype=float)
    cand = [lo, hi]
    if pts.size > 1:
        bps = 0.5 * (pts[1:] + pts[:-1])
        j = np.searchsorted(hi, bps)
        inside = (j < lo.size) & (lo[np.minimum(j, lo.size - 1)] <= bps)
        cand.append(bps[inside])
    cand = np.concatenate(cand)
    d = nearest_distance(pts, cand)
    k = int(np.argmax(d))
    return float(cand[k]), float(d[k])


def build_region(kind: str, packing: Packing, graph: NeighborGraph, codebook,
                 dm: DiscretizedMeasure, omega: Optional[int] = None,
                 sigma: Optional[int] = None, tau: Optional[int] = None,
                 x0: Optional[float] = None, a: Optional[int] = None,
                 tau0: Optional[int] = None, allow_empty: bool = False) -> RegionSpec:
    """Resolve one of the D/E/F/G/H regions to an interval set.

    With no codebook the Voronoi union is empty.  `a` indexes a code point
    for the G and Ha kinds; tau0 defaults to the first sigma whose
    delta-enlargement holds that point.
    """
    if kind not in REGION_KINDS:
        raise ValueError(f"unknown region kind {kind!r}")
    delta = graph.delta
    pts = _points(codebook)
    params: Dict[str, object] = {}

    def need(name, val):
        if val is None:
            raise ValueError(f"region {kind} needs {name}")
        return int(val)

    if kind in ("G", "Ha"):
        ia = need("a", a)
        owner = packing.owner_of(float(pts[ia]), delta)
        if owner < 0:
            raise MeasureError("code point lies outside every delta-enlargement")
        t0 = owner if tau0 is None else int(tau0)
        if t0 not in graph.neighbors[owner]:
            raise ValueError("tau0 must be a neighbour of the owning sigma")
        H = sorted({int(b) for t in graph.neighbors[owner]
                    for b in enlarged_members(pts, packing, t, delta)})
        reg = IntervalSet()
        for b in H:
            reg = reg | support_of_cell(dm, pts, b)
        if kind == "G":
            reg = reg | packing.A(t0)
        params = {"a": ia, "sigma": owner, "tau0": t0, "T_a": len(H), "H": tuple(H)}
    else:
        w = need("omega", omega)
        E = packing.E(w)
        params["omega"] = w
        if kind == "D4" or kind == "E":
            radius = (0.5 - delta) * packing.E_diameter if kind == "D4" else packing.radius
            reg = IntervalSet.ball(float(packing.centers[w]), radius)
        else:
            base = E | voronoi_union(pts, packing, graph, w)
            if kind in ("D1", "F1"):
                x = _x0_default(dm, packing, w, pts) if x0 is None else float(x0)
                ball = IntervalSet.ball(x, 0.5 * delta * packing.A_diameter)
                reg = base - ball
                if kind == "F1":
                    reg = reg | ball
                params["x0"] = x
            elif kind in ("D2", "F2"):
                s = need("sigma", sigma)
                reg = base - packing.E(s)
                if kind == "F2":
                    reg = reg | packing.E(s)
                params["sigma"] = s
            elif kind == "D3":
                reg = base
            else:  # F3
                t = need("tau", tau)
                reg = base | IntervalSet.ball(float(packing.centers[t]),
                                              (0.5 - delta) * packing.E_diameter)
                params["tau"] = t
    mass = dm.region_mass(reg) if not reg.empty else 0.0
    if mass <= 0 and not allow_empty:
        raise MeasureError(f"region {kind} carries no mass")
    return RegionSpec(kind, reg, float(mass), reg.diameter, tuple(sorted(params.items())))


# --------------------------------------------------------------------------
# rescaling identity


@dataclass(frozen=True)
class RescalingCheck:
    kind: str
    lhs: float
    rhs: float
    mass: float
    diameter: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "mass": self.mass, "diameter": self.diameter}


def rescaling_identity_check(dm: DiscretizedMeasure, region, codebook) -> RescalingCheck:
    """I_mu(B, alpha) against mu(B) log|B| + mu(B) I_{nu_B}(f_B^{-1} alpha).

    nu_B = mu(. | B) o f_B with f_B the increasing similarity of ratio |B|
    onto the hull of B; the identity is an exact change of variables.
    """
    spec = region if isinstance(region, RegionSpec) else None
    reg = spec.region if spec else interval_set(region)
    pts = _points(codebook)
    lhs = distortion(dm, pts, 0.0, reg)
    cm = conditional(dm, reg)
    local = cm.to_local(pts)
    inner = distortion(cm.rescaled, local, 0.0)
    rhs = cm.mass_of_region * math.log(cm.region_diameter) + cm.mass_of_region * inner
    return RescalingCheck(spec.kind if spec else "custom", float(lhs), float(rhs),
                          cm.mass_of_region, cm.region_diameter)


# --------------------------------------------------------------------------
# error-curve gaps


def _holder_constant(C2_hat: float) -> float:
    return max(1.0, float(C2_hat))


def zeta_chain(k: int, C: float, t: float, q: int = 1) -> dict:
    """delta_{k,1}, delta_{k,2}, delta_k, l_k and zeta_k = log 2 / (2 l_k)."""
    d1 = (4.0 * C * (k - 1)) ** (-1.0 / t)
    d2 = (2.0 * C * (k - 1)) ** (-1.0 / t)
    dk = 0.5 * min(d1, d2 - d1)
    lk = int(math.floor((2.0 / dk + 2.0) ** q + 1e-9)) + 1
    return {"delta_k1": d1, "delta_k2": d2, "delta_k": dk, "l_k": lk,
            "zeta_k": math.log(2.0) / (2.0 * lk)}


def chi(n: int, C: float, t: float) -> float:
    """Upper bound for e_n - e_{n+1}."""
    return math.log(3.0) / (n + 1) + math.sqrt(C) * (2.0 / t) * (1.0 / (n + 1)) ** 0.5


def eta_threshold(value: float) -> float:
    """Largest eta in (0, 1/e] with -x log x < value for all 0 < x < eta."""
    cap = math.exp(-1.0)
    if value >= cap:
        return cap
    return float(brentq(lambda x: -x * math.log(x) - value, 1e-300, cap, xtol=1e-300))


@dataclass
class GapReport:
    ks: List[int]
    ehat: Dict[int, float]
    gaps: List[float]
    zeta: List[float]
    chi: List[float]
    chi_prev: List[float]
    d_low: List[float]
    d_high: List[float]
    lam: List[float]
    g_emp: List[float]
    C: float
    t: float
    diagnostics: List[dict] = field(default_factory=list)

    @property
    def lower_ok(self) -> List[bool]:
        return [g >= z for g, z in zip(self.gaps, self.zeta)]

    @property
    def upper_ok(self) -> List[bool]:
        return [g <= c for g, c in zip(self.gaps, self.chi)]

    @property
    def passed(self) -> bool:
        return all(self.lower_ok) and all(self.upper_ok) and all(g > 0 for g in self.gaps)

    def rows(self):
        for i, k in enumerate(self.ks):
            yield (k, self.gaps[i], self.zeta[i], self.chi[i], self.chi_prev[i],
                   self.d_low[i], self.d_high[i], self.lam[i], self.g_emp[i])

    def to_dict(self) -> dict:
        return {"C": self.C, "t": self.t, "passed": self.passed,
                "rows": [dict(zip(("k", "gap", "zeta_k", "chi_k", "chi_k_minus_1", "d_low",
                                   "d_high", "lambda_k", "g_k_empirical"), r))
                         for r in self.rows()],
                "diagnostics": self.diagnostics}


def gap_report(dm: DiscretizedMeasure, k_max: int, profile, q: int = 1, results=None,
               **dp_kw) -> GapReport:
    """Observed gaps e_{k-1} - e_k against zeta_k (below) and chi_k (above).

    C = max(1, C2_hat) and t = s0.  chi_k is the stricter of the two
    indexings (the bound chi_n holds for e_n - e_{n+1}); chi_{k-1} is also
    reported.
    """
    if dm.diameter > 1.0 + 1e-12:
        raise ValueError("gap_report needs a measure with support diameter at most 1")
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    C = _holder_constant(profile.C2_hat)
    t = float(profile.s0)
    if results is None:
        results = dp_all(dm, k_max, 0.0, **dp_kw)
    ehat = {n: results[n].objective for n in range(1, k_max + 1)}
    D1 = 32.0 ** (-q) * (2.0 * C) ** (-q / t)
    rep = GapReport([], ehat, [], [], [], [], [], [], [], [], C, t)
    for k in range(2, k_max + 1):
        chain = zeta_chain(k, C, t, q)
        z = chain["zeta_k"]
        pts = results[k].codebook.points
        stats = cell_stats(build_partition(dm, results[k].codebook), dm)
        masses = [c.mass for c in stats.cells]
        eta_k = eta_threshold(0.5 * t * z)
        chi_k = chi(k, C, t)
        b_k = min(t * z / (4.0 * C), eta_k)
        eps_k = min((b_k / (2.0 * C)) ** (1.0 / t), 0.5)
        s_k = 0.5 * (math.exp(z / 4.0) - 1.0) * eps_k
        chain.update(
            eta_k=eta_k,
            d_low_bound=min(eta_k, 0.5 * z / (math.log(3.0) + C / t)),
            d_high_bound=(chi_k / (D1 * math.log(2.0))) ** (t / (t + q)),
            B_k=b_k, eps_k=eps_k, s_k=s_k, g_k_bound=s_k / 3.0, D1=D1,
            delta_k3=(2.0 * C) ** (-1.0 / t) * min(masses) ** (1.0 / t),
        )
        chain["N_k"] = int(math.floor((8.0 / chain["delta_k3"]) ** q)) + 3
        rep.ks.append(k)
        rep.gaps.append(ehat[k - 1] - ehat[k])
        rep.zeta.append(z)
        rep.chi.append(chi_k)
        rep.chi_prev.append(chi(k - 1, C, t))
        rep.d_low.append(min(masses))
        rep.d_high.append(max(masses))
        rep.lam.append(float(np.min(np.diff(pts))))
        rep.g_emp.append(stats.min_inradius_ratio)
        rep.diagnostics.append(chain)
    return rep


# --------------------------------------------------------------------------
# auxiliary integers


class EhatCache:
    """e_n(nu_B) curves of conditional measures, keyed by region.

    For n beyond the cell count the value is held at the last computable
    one: the discretized measure cannot resolve finer codebooks.
    """

    def __init__(self, dm: DiscretizedMeasure, **dp_kw):
        self.dm = dm
        self.dp_kw = dp_kw
        self.curves: Dict[tuple, np.ndarray] = {}

    def curve(self, region: IntervalSet, n_max: int) -> np.ndarray:
        key = region.pieces
        have = self.curves.get(key)
        if have is None or have.size < n_max:
            nu = conditional(self.dm, region).rescaled
            top = min(n_max, len(nu))
            res = dp_all(nu, top, 0.0, **self.dp_kw)
            vals = np.array([res[n].objective for n in range(1, top + 1)])
            if top < n_max:
                vals = np.concatenate((vals, np.full(n_max - top, vals[-1])))
            self.curves[key] = vals
        return self.curves[key]

    def ehat(self, region: IntervalSet, n: int, n_max: int) -> float:
        if n < 1:
            raise ValueError("e_n needs n >= 1")
        return float(self.curve(region, n_max)[n - 1])


@dataclass
class AuxIntegerEstimate:
    n1: Union[int, str]
    n2: Union[int, str]
    n3: Union[int, str]
    n4: Union[int, str]
    n5: Union[int, str]
    budget: int
    traces: Dict[str, dict] = field(default_factory=dict)

    def found(self, name: str) -> bool:
        return isinstance(getattr(self, name), int)

    def to_dict(self) -> dict:
        return {"n1": self.n1, "n2": self.n2, "n3": self.n3, "n4": self.n4, "n5": self.n5,
                "budget": self.budget, "traces": self.traces}


def smallest_stable(start: int, budget: int, left, threshold: float) -> Tuple[Optional[int], dict]:
    """Smallest n >= start with left(n') < threshold for every probed n' in [n, budget].

    Returns (n or None, trace) where the trace records the best margin
    threshold - max_{n' >= n} left(n') over candidate n.
    """
    if start > budget:
        return None, {"threshold": threshold, "start": start, "best_margin": None,
                      "note": "start beyond budget"}
    ns = np.arange(start, budget + 1)
    vals = np.array([left(int(n)) for n in ns])
    tail_max = np.maximum.accumulate(vals[::-1])[::-1]
    margins = threshold - tail_max
    ok = np.flatnonzero(margins > 0)
    trace = {"threshold": threshold, "start": int(start), "best_margin": float(margins.max()),
             "left_at_budget": float(vals[-1])}
    if ok.size == 0:
        return None, trace
    n = int(ns[ok[0]])
    trace["margin"] = float(margins[ok[0]])
    return n, trace


def estimate_aux_integers(dm: DiscretizedMeasure, packing: Packing, graph: NeighborGraph,
                          constants: AuxiliaryConstants, budget: int = 128, codebook=None,
                          threshold_scale: float = 1.0, cache: Optional[EhatCache] = None,
                          **dp_kw) -> AuxIntegerEstimate:
    """Scan for n1..n5 over worst-case auxiliary measures at the packing level.

    Left-hand sides take the maximum over all (omega, sigma) pairs and
    right-hand sides the minimum, matching the "for every pair" quantifier.
    """
    dp_kw.setdefault("polish", False)
    cache = cache or EhatCache(dm, **dp_kw)
    K = constants
    phi = packing.phi
    span = budget + K.L1 + 1

    def regions(kind, **kw):
        out = []
        for w in range(phi):
            for s in (range(phi) if kind == "D2" else [None]):
                try:
                    out.append(build_region(kind, packing, graph, codebook, dm, omega=w,
                                            sigma=s).region)
                except MeasureError:
                    continue
        return list({r.pieces: r for r in out}.values())

    D2 = regions("D2")
    E = [packing.E(s) for s in range(phi)]
    D3 = regions("D3")
    D4 = regions("D4")
    eh = cache.ehat
    traces: Dict[str, dict] = {}

    def worst_gap(regs, lo_shift, n):
        return max(eh(r, n - lo_shift, span) - eh(r, n + K.L1, span) for r in regs)

    def least_step(regs, j):
        return min(eh(r, j - 1, span) - eh(r, j, span) for r in regs)

    thr1 = threshold_scale * K.eta1 * K.delta ** K.s0 * math.log(2.0) / K.zeta
    n1, traces["n1"] = smallest_stable(K.L0 + K.L2 + 1, budget,
                                       lambda n: worst_gap(D2, K.L0 + K.L2, n), thr1)
    n2 = n3 = n4 = n5 = None
    if n1 is not None:
        shift = K.L0 + n1 + K.L1
        thr2 = least_step(E, n1 + K.L1) / K.zeta
        n2, traces["n2"] = smallest_stable(max(n1 + K.L0 + K.L1 + 1, shift + 1), budget,
                                           lambda n: worst_gap(D2, shift, n), thr2)
    else:
        traces["n2"] = {"note": "n1 not found"}
    if n2 is not None:
        n3 = (n2 + K.n0) * K.N
        traces["n3"] = {"formula": "(n2 + n0) N"}
        shift = K.L0 + n3 + K.L1
        if n3 + K.L1 <= span:
            thr4 = least_step(D4, n3 + K.L1) / K.zeta
            n4, traces["n4"] = smallest_stable(max(K.M0 * n3 + K.L0 + K.L1 + 1, shift + 1),
                                               budget, lambda n: worst_gap(D3, shift, n), thr4)
        else:
            traces["n4"] = {"note": "n3 + L1 beyond budget"}
    if n4 is not None:
        n5 = K.M0 * n4
    val = lambda v: BUDGET_EXCEEDED if v is None else int(v)
    return AuxIntegerEstimate(val(n1), val(n2), val(n3), val(n4), val(n5), budget, traces)


# --------------------------------------------------------------------------
# local counts and neighbourhoods


@dataclass
class LocalCountReport:
    n: int
    level: int
    delta: float
    L_sigma: List[int]
    L_c: int
    sup_distance: List[float]
    bound: float
    regime_valid: Optional[bool]
    flags: List[str]
    conclusions: Dict[str, Optional[bool]]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def regime_level_ok(dm, packing: Packing, n: int, constants: AuxiliaryConstants) -> Optional[bool]:
    """(n0 + n2) phi_k <= n < (n0 + n2) phi_{k+1}, or None when n2 is unknown."""
    if not isinstance(constants.n2, int):
        return None
    phi_next = max_packing_1d(dm, float(packing.m) ** (-(packing.k + 1))).size
    base = constants.n0 + constants.n2
    return base * packing.phi <= n < base * phi_next


def local_count_report(dm: DiscretizedMeasure, n: int, packing: Packing, graph: NeighborGraph,
                       constants: AuxiliaryConstants, codebook=None, r=0.0,
                       **dp_kw) -> LocalCountReport:
    r = _r(r)
    pts = _points(codebook) if codebook is not None else dp_optimal_1d(dm, n, r, **dp_kw).codebook.points
    if pts.size != n:
        raise ValueError("codebook size differs from n")
    delta = graph.delta
    L = [int(enlarged_members(pts, packing, s, delta).size) for s in range(packing.phi)]
    reach = 2.0 * packing.radius + delta * packing.A_diameter
    stray = int(np.sum(nearest_distance(packing.centers, pts) > reach * (1 + 1e-12)))
    sups = [sup_distance(dm, packing.A(s), pts)[1] for s in range(packing.phi)]
    bound = delta * packing.A_diameter
    regime = regime_level_ok(dm, packing, n, constants)
    flags = []
    if regime is None:
        flags.append("n2 unknown: regime rule not evaluated; desk-scale check only")
    elif not regime:
        flags.append("n outside the regime window for this level")
    concl: Dict[str, Optional[bool]] = {
        "stray_zero": stray == 0,
        "stray_le_n0_phi": stray <= constants.n0 * packing.phi,
        "all_L_sigma_positive": min(L) >= 1,
        "sup_within_delta": max(sups) <= bound,
        "L_sigma_ge_n1": (min(L) >= constants.n1) if isinstance(constants.n1, int) else None,
        "L_sigma_le_n4": (max(L) <= constants.n4) if isinstance(constants.n4, int) else None,
    }
    if regime is None and not (concl["all_L_sigma_positive"] and concl["sup_within_delta"]):
        flags.append("desk-scale check failed: outside the theorem's regime")
    return LocalCountReport(n, packing.k, delta, L, stray, sups, bound, regime, flags, concl)


@dataclass
class NeighborhoodRecord:
    index: int
    point: float
    sigma: int
    tau0: int
    T_a: int
    G_diameter: float
    G_mass: float
    A_tau0_diameter: float
    contained: bool
    band: Tuple[float, float]
    band_ok: bool
    diameter_ok: bool
    T_a_ok: Optional[bool]

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["band"] = list(self.band)
        return d


def neighborhood_report(dm: DiscretizedMeasure, n: int, packing: Packing, graph: NeighborGraph,
                        constants: AuxiliaryConstants, codebook=None, tau0=None,
                        **dp_kw) -> List[NeighborhoodRecord]:
    """G(a), H(a), T_a for each code point, with containment and mass bands.

    Band: eta4 (5+16 delta)^{-s0} |G|^{s0} <= mu(G) <= eta3 |G|^{s0}.
    """
    pts = _points(codebook) if codebook is not None else dp_optimal_1d(dm, n, 0.0, **dp_kw).codebook.points
    K = constants
    d = graph.delta
    out = []
    n5 = K.n5 if isinstance(K.n5, int) else None
    for i, a in enumerate(pts):
        G = build_region("G", packing, graph, pts, dm, a=i, tau0=tau0)
        par = dict(G.params)
        P = support_of_cell(dm, pts, i)
        contained = G.region.contains(P)
        A0 = packing.A_diameter
        lo = K.eta4 * (5.0 + 16.0 * d) ** (-K.s0) * G.diameter ** K.s0
        hi = K.eta3 * G.diameter ** K.s0
        T = int(par["T_a"])
        out.append(NeighborhoodRecord(
            i, float(a), int(par["sigma"]), int(par["tau0"]), T, G.diameter, G.mass, A0,
            bool(contained), (lo, hi), bool(lo <= G.mass <= hi),
            bool(A0 * (1 - 1e-12) <= G.diameter <= (5.0 + 16.0 * d) * A0 * (1 + 1e-12)),
            (1 <= T <= n5) if n5 is not None else None))
    return out


# --------------------------------------------------------------------------
# theorem band


@dataclass
class TheoremReport:
    n_range: List[int]
    rows: list
    d1: float
    d2: float
    d3: float
    drift_factor: float
    slope: float
    slack: float

    @property
    def passed(self) -> bool:
        return (self.d1 > 0 and self.d3 > 0 and math.isfinite(self.d2)
                and self.drift_factor <= self.slack)

    def to_dict(self) -> dict:
        return {"n_range": self.n_range, "d1": self.d1, "d2": self.d2, "d3": self.d3,
                "drift_factor": self.drift_factor, "slope": self.slope, "slack": self.slack,
                "passed": self.passed, "rows": [r.__dict__ for r in self.rows]}


def drift(ns: Sequence[int], values: Sequence[float]) -> Tuple[float, float]:
    """Log-log slope of the values over the top quartile of n and the implied drift.

    The drift factor is exp(|slope| * log(n_max / n_q)), the change the fitted
    trend produces across that quartile.
    """
    ns = np.asarray(ns, dtype=float)
    v = np.asarray(values, dtype=float)
    start = int(math.floor(0.75 * ns.size))
    x, y = np.log(ns[start:]), np.log(v[start:])
    if x.size < 2 or np.ptp(x) == 0:
        return 0.0, 1.0
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, float(math.exp(abs(slope) * (x[-1] - x[0])))


def theorem_report(dm: DiscretizedMeasure, n_range: Sequence[int], r=0.0, slack: float = 2.0,
                   results=None, **dp_kw) -> TheoremReport:
    band = mass_band(dm, n_range, r, results=results, **dp_kw)
    ns = [row.n for row in band.rows]
    slope, factor = drift(ns, [row.n_min_mass for row in band.rows])
    return TheoremReport(ns, list(band.rows), band.d1, band.d2, band.d3, factor, slope, slack)


# --------------------------------------------------------------------------
# optimality inheritance


@dataclass
class InheritanceRecord:
    index: int
    point: float
    optimum: float
    displacement: float
    residual: float
    cell_width: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def optimality_inheritance_check(dm: DiscretizedMeasure, n: int, r=0.0, result=None,
                                 tie_tol: float = 1e-9, **dp_kw) -> List[InheritanceRecord]:
    """Each code point against the 1-optimal points of its own cell's conditional measure.

    The displacement is measured to the nearest minimiser whose value ties
    the best one within `tie_tol`, since symmetric cells have several.
    """
    if n > 4:
        raise ValueError("the inheritance check is limited to n <= 4")
    r = _r(r)
    res = result if result is not None else dp_optimal_1d(dm, n, r, **dp_kw)
    part = build_partition(dm, res.codebook)
    out = []
    for i, a in enumerate(res.codebook.points):
        lo, hi, m = part.cell_fragments(i)
        group = (lo, hi, m / m.sum())
        own = float(cell_moment(*group, a, r).sum())
        if r in (1, 2):
            xs, fx = (np.array([v]) for v in optimal_point_1d(group, r))
        else:
            xs, fx = local_minima_1d(group, r)
        ties = xs[fx <= fx[0] + tie_tol]
        disp = float(np.min(np.abs(ties - a)))
        width = float(np.max(hi - lo))
        out.append(InheritanceRecord(i, float(a), float(xs[0]), disp, own - float(fx[0]), width))
    return out

