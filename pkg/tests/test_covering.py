import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adquant import covering
from adquant.covering import (CoverError, Packing, build_packing, constants_from, greedy_cover,
                              max_packing_1d, neighbor_graph, packing_base, standard_covers,
                              verify_packing_mass)
from adquant.intervals import IntervalSet
from adquant.measure import MeasureError, UniformInterval, ad_validate, cantor, discretize

S_CANTOR = math.log(2) / math.log(3)


@pytest.fixture(scope="module")
def c10():
    return discretize(cantor(), 10)


@pytest.fixture(scope="module")
def c10_profile(c10):
    return ad_validate(c10, S_CANTOR)


def test_max_packing_examples():
    u = discretize(UniformInterval(0, 1), 10)
    assert max_packing_1d(u, 0.5).size == 1
    assert max_packing_1d(u, 1 / 8).size == 4
    c6 = max_packing_1d(discretize(cantor(), 6), 1 / 3)
    assert c6.size == 2 and c6[0] < 0.01 and c6[1] > 0.66


def test_constants_ideal():
    K = constants_from(1.0, 1.0, 0.7)
    assert K.delta == 1 / 16
    assert (K.L0, K.L1, K.L2, K.n0, K.M0) == (42, 34, 6, 66, 10)
    assert K.eta1 == 1 and K.eta2 == pytest.approx(2 ** 0.7)
    assert constants_from(1.0, 1.0, 1.0).eta2 == 2
    assert K.m == 3 and K.N == 7


def test_constants_ratio_two():
    K = constants_from(1.0, 2.0, 1.0)
    assert K.delta == 1 / 32 and K.M0 == 9


def test_constants_validation():
    with pytest.raises(ValueError):
        constants_from(2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        constants_from(1.0, 1.0, 1.0, delta=0.1)
    assert constants_from(1.0, 1.0, 1.0, q=2).L2 == 36


def test_packing_base():
    assert packing_base(1.0, 1.0, 0.63) == 3
    assert packing_base(1.0, 2.0, 1.0) == 5


def test_cantor_levels(c10, c10_profile):
    K = constants_from(c10_profile.C1_hat, c10_profile.C2_hat, S_CANTOR, m=3)
    phis = []
    for k in range(1, 5):
        p = build_packing(c10, c10_profile, k, m=3)
        assert p.disjoint() and p.covers_support(c10)
        phis.append(p.phi)
    assert all(a < b <= K.N * a for a, b in zip(phis, phis[1:]))


def test_coarse_level_single_ball(c10):
    p = build_packing(c10, None, 0, m=3)
    assert p.phi == 1
    K = constants_from(1.0, 1.0, S_CANTOR)
    rep = verify_packing_mass(p, c10, K)
    assert rep.values[0] == pytest.approx(1.0)
    with pytest.raises(MeasureError):
        build_packing(c10, None, 9, m=3)


def test_packing_mass_uniform():
    u = discretize(UniformInterval(0, 1), 12)
    prof = ad_validate(u, 1.0)
    K = constants_from(prof.C1_hat, prof.C2_hat, 1.0)
    rep = verify_packing_mass(build_packing(u, prof, 2, m=3), u, K)
    assert rep.passed
    lo, hi = prof.C1_hat / prof.C2_hat, (prof.C2_hat / prof.C1_hat) ** 2 * 2
    assert np.all((rep.values >= lo) & (rep.values <= hi))


def test_neighbor_graph_small():
    single = Packing(3, 1, np.array([0.5]))
    assert neighbor_graph(single, 1 / 16).M == [1]
    far = Packing(3, 2, np.array([0.0, 1.0]))
    assert neighbor_graph(far, 1 / 16).M == [1, 1]


def test_neighbor_graph_cantor(c10, c10_profile):
    p = build_packing(c10, c10_profile, 2, m=3)
    g = neighbor_graph(p, 1 / 16)
    assert max(g.M) <= constants_from(1.0, 1.0, S_CANTOR).M0
    for s, nb in enumerate(g.neighbors):
        assert s in nb
        for t in nb:
            assert s in g.neighbors[t]


def test_greedy_cover_examples():
    K = constants_from(1.0, 1.0, 1.0)
    c = greedy_cover(IntervalSet.of((0, 1)), 0.5)
    assert c.verified and c.count in (1, 2)
    c = greedy_cover(IntervalSet.of((0, 1)), 1 / 8)
    assert c.verified and c.count <= 9
    p = Packing(3, 2, np.array([0.5]))
    e = greedy_cover(p.E(0), K.delta * p.radius, kind="gamma_E")
    assert e.verified and e.count <= K.L1


def test_greedy_cover_strict():
    with pytest.raises(CoverError):
        greedy_cover(IntervalSet.of((0, 1)), 0.1, candidates=[0.0])
    assert not greedy_cover(IntervalSet.of((0, 1)), 0.1, candidates=[0.0], strict=False).verified


@settings(max_examples=40)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0.01, 2)), min_size=1, max_size=5),
       st.floats(0.05, 1))
def test_greedy_cover_bound(pieces, radius):
    tgt = IntervalSet.of(*[(a, a + w) for a, w in pieces])
    c = greedy_cover(tgt, radius)
    assert c.verified
    # consecutive centres are more than `radius` apart within a one-dimensional target
    bound = sum(math.floor((hi - lo) / radius) + 1 for lo, hi in tgt.pieces)
    assert c.count <= bound


def test_standard_covers_within_constants(c10, c10_profile):
    K = constants_from(1.0, 1.0, S_CANTOR, q=1)
    p = build_packing(c10, c10_profile, 2, m=3)
    for s in range(p.phi):
        for kind, cov in standard_covers(p, s, K.delta).items():
            assert cov.verified and cov.count <= K.cover_bound(kind), kind


def test_constants_json_roundtrip():
    import json
    K = constants_from(1.0, 1.0, 1.0)
    assert json.loads(K.to_json())["M0"] == 10
    assert json.loads(covering.dumps(K))["L0"] == 42
