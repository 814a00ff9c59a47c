import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from adquant.kernels import (breakpoints, cell_log_moment, cell_moment, cell_moment_derivative,
                             split_cells)

LN2 = math.log(2)


def quad_moment(lo, hi, mass, a, r):
    f = (lambda x: math.log(abs(x - a))) if r == 0 else (lambda x: abs(x - a) ** r)
    pts = [a] if lo < a < hi else None
    return mass / (hi - lo) * quad(f, lo, hi, points=pts, limit=200)[0]


def test_log_moment_examples():
    assert cell_log_moment(0, 1, 1, 0) == pytest.approx(-1, abs=1e-15)
    assert cell_log_moment(0, 1, 1, 0.5) == pytest.approx(-1 - LN2, abs=1e-15)
    assert cell_log_moment(2, 3, 1, 2.5) == pytest.approx(-1 - LN2, abs=1e-14)
    w = 0.3
    assert cell_log_moment(0, 1 / 8, w, 1 / 16) == pytest.approx(w * (math.log(1 / 16) - 1))


@given(st.floats(-2, 2), st.floats(0.01, 1), st.floats(-3, 3), st.sampled_from([0, 0.5, 1, 2, 3.5]))
def test_moment_matches_quadrature(lo, w, a, r):
    hi = lo + w
    if r == 0 and min(abs(a - lo), abs(a - hi)) < 1e-6:
        a += 1e-3
    assert cell_moment(lo, hi, 0.7, a, r) == pytest.approx(quad_moment(lo, hi, 0.7, a, r),
                                                           rel=1e-8, abs=1e-10)


@given(st.floats(0.01, 1), st.sampled_from([0, 1]))
def test_log_moment_continuous_at_edges(w, side):
    lo, hi = 0.0, w
    edge = (lo, hi)[side]
    left = cell_log_moment(lo, hi, 1, edge - 1e-13)
    right = cell_log_moment(lo, hi, 1, edge + 1e-13)
    assert abs(left - right) <= 1e-9
    assert abs(cell_log_moment(lo, hi, 1, edge) - left) <= 1e-9


@given(st.floats(-1, 1), st.floats(0.05, 1), st.sampled_from([0, 1, 2, 0.5]))
def test_derivative_matches_finite_difference(lo, w, r):
    hi = lo + w
    a = hi + 0.5  # outside the cell, where the derivative is smooth
    h = 1e-6
    fd = (cell_moment(lo, hi, 1, a + h, r) - cell_moment(lo, hi, 1, a - h, r)) / (2 * h)
    assert cell_moment_derivative(lo, hi, 1, a, r) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        cell_moment(0, 1, 1, 0.5, -1)


def test_breakpoints_and_split():
    np.testing.assert_allclose(breakpoints(np.array([0.25, 0.75])), [0.5])
    f = split_cells(np.array([0.45]), np.array([0.55]), np.array([1.0]), np.array([0.3, 0.7]))
    np.testing.assert_allclose(f.mass, [0.5, 0.5])
    np.testing.assert_allclose(f.hi[0], 0.5)
    assert f.owner.tolist() == [0, 1]


def test_split_conserves_mass():
    rng = np.random.default_rng(0)
    edges = np.sort(rng.uniform(0, 1, 41))
    lo, hi = edges[:-1], edges[1:]
    mass = rng.uniform(0.1, 1, 40)
    mass /= mass.sum()
    f = split_cells(lo, hi, mass, np.sort(rng.uniform(0, 1, 7)))
    assert f.mass.sum() == pytest.approx(1, abs=1e-14)
