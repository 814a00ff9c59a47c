import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adquant import measure, quantizer
from adquant.measure import BudgetError, UniformInterval, cantor, discretize
from adquant.quantizer import (Codebook, ErrorOrder, brute_force_oracle, distortion, dp_all,
                               dp_optimal_1d, error_curve, lloyd, objective_gradient,
                               optimal_point_1d)

LN2 = math.log(2)

# Cantor depth 6, r = 0, n = 1: minimiser and value from scipy quad + minimize_scalar
CANTOR6_N1_POINT = 0.25026199931591536
CANTOR6_N1_VALUE = -1.6580866527180695
CANTOR6_AT_HALF = -1.1674565315208476


@pytest.fixture(scope="module")
def u12():
    return discretize(UniformInterval(0, 1), 12)


@pytest.fixture(scope="module")
def c6():
    return discretize(cantor(), 6)


def test_types_validate():
    with pytest.raises(ValueError):
        ErrorOrder(-1)
    with pytest.raises(ValueError):
        Codebook.of(0.5, 0.2)
    assert Codebook.of(0.1, 0.2).map(2, 1).tolist() == pytest.approx([1.2, 1.4])


def test_distortion_examples(u12):
    assert distortion(u12, [0.5], 0) == pytest.approx(-1 - LN2, abs=1e-12)
    assert distortion(u12, [0.5], 2) == pytest.approx(1 / 12, abs=1e-12)
    assert distortion(u12, [0.25, 0.75], 0) == pytest.approx(math.log(1 / 4) - 1, abs=1e-12)


def test_distortion_region(u12):
    # restricted to [0, 1/2]: mass 1/2 times the log moment of Uniform(0, 1/2) about 1/4
    assert distortion(u12, [0.25, 0.75], 0, region=(0, 0.5)) == pytest.approx(
        0.5 * (math.log(1 / 4) - 1), abs=1e-12)


def test_optimal_point_examples(u12):
    g = (u12.lo, u12.hi, u12.mass)
    a, f = optimal_point_1d(g, 0)
    assert a == pytest.approx(0.5, abs=1e-12) and f == pytest.approx(-1 - LN2, abs=1e-12)
    a, f = optimal_point_1d(g, 2)
    assert a == pytest.approx(0.5, abs=1e-12) and f == pytest.approx(1 / 12, abs=1e-12)
    a, f = optimal_point_1d((np.array([0.0]), np.array([1 / 8]), np.array([0.3])), 0)
    assert a == pytest.approx(1 / 16, abs=1e-9)
    assert f == pytest.approx(0.3 * (math.log(1 / 16) - 1), abs=1e-12)


def test_cantor_single_point_off_centre(c6):
    # the centre is a local maximum region of the log objective; the optimum is near 1/4 or 3/4
    res = dp_optimal_1d(c6, 1, 0)
    a = res.codebook.points[0]
    assert min(abs(a - CANTOR6_N1_POINT), abs(a - (1 - CANTOR6_N1_POINT))) <= 1e-8
    assert res.objective == pytest.approx(CANTOR6_N1_VALUE, abs=1e-12)
    assert distortion(c6, [0.5], 0) == pytest.approx(CANTOR6_AT_HALF, abs=1e-12)
    # cells are narrower than the grid step, so the oracle is held to the grid error of the
    # optimum snapped to its grid
    orc = brute_force_oracle(c6, 1, 0, grid_resolution=512)
    grid = np.linspace(c6.support_lo, c6.support_hi, 512)
    snapped = grid[np.argmin(np.abs(grid - a))]
    grid_err = distortion(c6, [snapped], 0) - res.objective
    assert 0 <= orc.objective - res.objective <= grid_err + 1e-12
    coarse = discretize(cantor(), 3)
    orc = brute_force_oracle(coarse, 1, 0, grid_resolution=512)
    assert abs(orc.objective - dp_optimal_1d(coarse, 1, 0).objective) <= 1e-4


def test_cantor_self_similar_pair(c6):
    # n = 2 optimum: one point per first-level cylinder, so e_2(depth 6) = ln(1/3) + e_1(depth 5)
    e1 = dp_optimal_1d(discretize(cantor(), 5), 1, 0).objective
    assert dp_optimal_1d(c6, 2, 0).objective == pytest.approx(math.log(1 / 3) + e1, abs=1e-12)


def test_dp_uniform(u12):
    r2 = dp_optimal_1d(u12, 2, 0)
    np.testing.assert_allclose(r2.codebook.points, [0.25, 0.75], atol=1e-3)
    assert r2.objective == pytest.approx(math.log(1 / 4) - 1, abs=1e-9)
    r1 = dp_optimal_1d(u12, 1, 0)
    assert r1.codebook.points[0] == pytest.approx(0.5, abs=1e-6)
    assert r1.error == pytest.approx(1 / (2 * math.e), abs=1e-9)


def test_dp_strict_decrease_to_cell_count():
    dm = discretize(cantor(), 3)
    res = dp_all(dm, len(dm), 0)
    obj = [res[n].objective for n in range(1, len(dm) + 1)]
    assert all(b < a for a, b in zip(obj, obj[1:]))


@pytest.mark.parametrize("r", [0.0, 1.0, 2.0])
def test_engines_agree(c6, r):
    exact = dp_all(c6, 6, r, engine="exact")
    table = dp_all(c6, 6, r, engine="table")
    for n in range(1, 7):
        assert table[n].objective == pytest.approx(exact[n].objective, abs=1e-9)


def test_pruning_is_exact(c6):
    a = dp_all(c6, 5, 0, engine="exact", polish=False, prune=True)
    b = dp_all(c6, 5, 0, engine="exact", polish=False, prune=False)
    for n in range(1, 6):
        assert a[n].objective == b[n].objective


def test_dp_budgets(c6):
    with pytest.raises(BudgetError):
        dp_optimal_1d(c6, len(c6) + 1, 0)
    with pytest.raises(BudgetError):
        dp_optimal_1d(c6, 2, 0, budget_cells=10)
    with pytest.raises(ValueError):
        dp_optimal_1d(c6, 0, 0)


def test_lloyd_examples(u12):
    res = lloyd(u12, 2, 0, init=[0.1, 0.2])
    np.testing.assert_allclose(res.codebook.points, [0.25, 0.75], atol=1e-6)
    res = lloyd(u12, 3, 2)
    np.testing.assert_allclose(res.codebook.points, [1 / 6, 1 / 2, 5 / 6], atol=1e-6)


def test_lloyd_fixed_point(c6):
    dp = dp_optimal_1d(c6, 3, 0)
    res = lloyd(c6, 3, 0, init=dp.codebook)
    assert res.iterations <= 1
    assert abs(res.objective - dp.objective) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3, unique=True),
       st.sampled_from([0.0, 2.0]))
def test_lloyd_monotone(c6, init, r):
    pts = np.sort(np.array(init))
    if np.min(np.diff(pts)) < 1e-3:
        return
    res = lloyd(c6, 3, r, init=pts, max_iter=30)
    h = np.array(res.diagnostics["history"])
    assert np.all(np.diff(h) <= 1e-12 * np.maximum(1, np.abs(h[:-1])))


@pytest.mark.parametrize("r", [0.0, 2.0])
def test_dp_dominance(c6, r):
    for n in (2, 3):
        dp = dp_optimal_1d(c6, n, r)
        ll = lloyd(c6, n, r)
        orc = brute_force_oracle(c6, n, r, grid_resolution=256)
        assert dp.objective <= ll.objective + 1e-12
        assert dp.objective <= orc.objective + 1e-12


def test_oracle_matches_enumeration(c6):
    grid = np.linspace(c6.support_lo, c6.support_hi, 24)
    for r in (0.0, 2.0):
        best = min(distortion(c6, np.array(t), r) for t in itertools.combinations(grid, 2))
        orc = brute_force_oracle(c6, 2, r, grid_resolution=24)
        assert orc.objective == pytest.approx(best, abs=1e-12)


def test_oracle_examples(u12):
    orc = brute_force_oracle(u12, 1, 0, grid_resolution=512)
    assert abs(orc.objective - (-1 - LN2)) <= 1e-4
    orc = brute_force_oracle(u12, 2, 0, grid_resolution=512)
    step = orc.diagnostics["grid_step"]
    assert np.max(np.abs(orc.codebook.points - [0.25, 0.75])) <= step
    with pytest.raises(BudgetError):
        brute_force_oracle(u12, 4, 0)


def test_oracle_cannot_beat_dp():
    dm = discretize(cantor(), 10)
    assert brute_force_oracle(dm, 2, 0).objective >= dp_optimal_1d(dm, 2, 0).objective - 1e-9


def test_error_curve_uniform(u12):
    curve = error_curve(u12, 4, 0)
    for n, obj, err in curve:
        assert obj == pytest.approx(math.log(1 / (2 * n)) - 1, abs=1e-9)
        assert err == pytest.approx(1 / (2 * math.e * n), rel=1e-8)
    with pytest.raises(BudgetError):
        error_curve(u12, 10, 0, budget=5)


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0])
def test_gradient_matches_finite_difference(c6, r):
    # points in gaps of the support, outside every cell
    pts = np.array([0.2, 0.5, 0.85])
    _, grad = objective_gradient(c6, pts, r)
    h = 1e-6
    for i in range(pts.size):
        e = np.zeros_like(pts)
        e[i] = h
        fd = (distortion(c6, pts + e, r) - distortion(c6, pts - e, r)) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("c,b", [(1 / 3, 5.0), (2.0, -1.0)])
def test_codebook_covariance(c, b):
    dm = discretize(UniformInterval(0, 1), 8)
    img = measure.scale_translate(dm, c, b)
    for r in (0.0, 2.0):
        base = dp_optimal_1d(dm, 3, r)
        moved = dp_optimal_1d(img, 3, r)
        np.testing.assert_allclose(moved.codebook.points, c * base.codebook.points + b,
                                   atol=1e-9 * max(1, abs(b)))
        if r == 0:
            assert moved.objective - base.objective == pytest.approx(math.log(c), abs=1e-9)
        else:
            assert moved.error == pytest.approx(c * base.error, rel=1e-9)


def test_result_serialises(c6):
    d = dp_optimal_1d(c6, 2, 0).to_dict()
    assert set(d) >= {"n", "r", "codebook", "objective", "error", "method"}
