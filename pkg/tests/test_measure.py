import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adquant import measure
from adquant.measure import (BudgetError, IfsSelfSimilar, MeasureError, Mixture, UniformInterval,
                             ad_validate, ball_mass, cantor, conditional, discretize,
                             scale_translate)

S_CANTOR = math.log(2) / math.log(3)


def cantor_function(x, digits=60):
    """Devil's staircase from the ternary expansion; independent of the cell code."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    out, scale = 0.0, 0.5
    for _ in range(digits):
        x *= 3
        d = int(x)
        x -= d
        if d == 1:
            return out + scale
        out += scale * (d // 2)
        scale /= 2
    return out


@pytest.fixture(scope="module")
def c10():
    return discretize(cantor(), 10)


def test_uniform_cells():
    dm = discretize(UniformInterval(0, 1), 3)
    assert len(dm) == 8
    np.testing.assert_allclose(dm.widths, 1 / 8)
    np.testing.assert_allclose(dm.mass, 1 / 8)


def test_cantor_cells():
    dm = discretize(cantor(), 3)
    assert len(dm) == 8
    np.testing.assert_allclose(dm.widths, 1 / 27)
    np.testing.assert_allclose(dm.mass, 1 / 8)
    assert dm.lo[1] == pytest.approx(2 / 27)


def test_mixture_cells():
    mix = Mixture(((0.5, UniformInterval(0, 1)), (0.5, UniformInterval(2, 3))))
    dm = discretize(mix, 1)
    assert len(dm) == 4
    assert dm.mass.sum() == pytest.approx(1.0, abs=1e-15)


def test_model_validation():
    with pytest.raises(MeasureError):
        IfsSelfSimilar(((0.6, 0.0, 0.5), (0.6, 0.4, 0.5)))
    with pytest.raises(MeasureError):
        IfsSelfSimilar(((0.3, 0.0, 0.5), (0.3, 0.7, 0.6)))
    with pytest.raises(MeasureError):
        measure.DiscretizedMeasure(np.array([2.0]), np.array([3.0]), np.array([0.0]))
    with pytest.raises(MeasureError):
        Mixture(((0.5, UniformInterval(0, 1)), (0.6, UniformInterval(2, 3))))


def test_overlapping_mixture_rejected():
    with pytest.raises(MeasureError):
        discretize(Mixture(((0.5, UniformInterval(0, 1)), (0.5, UniformInterval(0.5, 2)))), 2)


def test_cell_budget():
    with pytest.raises(BudgetError):
        discretize(cantor(), 20, budget=1000)


def test_dimensions():
    assert cantor().similarity_dimension == pytest.approx(S_CANTOR, abs=1e-12)
    assert cantor().natural_dimension == pytest.approx(S_CANTOR, abs=1e-12)


def test_ball_mass_examples(c10):
    u = discretize(UniformInterval(0, 1), 8)
    assert ball_mass(u, 0.5, 0.25) == pytest.approx(0.5)
    assert ball_mass(u, 0.0, 0.25) == pytest.approx(0.25)
    assert ball_mass(c10, 0.0, 1 / 3) == pytest.approx(0.5, abs=1e-12)


@given(st.floats(-0.2, 1.2), st.floats(1e-3, 0.7))
def test_ball_mass_matches_cantor_function(c10, x, r):
    exact = cantor_function(x + r) - cantor_function(x - r)
    # each ball endpoint can fall inside one depth-10 cell
    assert abs(ball_mass(c10, x, r) - exact) <= 2 * 2.0 ** -10 + 1e-12


@given(st.floats(0.0, 1.0), st.floats(0.01, 0.5))
def test_refinement_consistency(x, r):
    coarse, fine = discretize(cantor(), 6), discretize(cantor(), 8)
    bound = 2 * coarse.max_width * float(np.max(coarse.density))
    assert abs(ball_mass(coarse, x, r) - ball_mass(fine, x, r)) <= bound


def test_ad_uniform():
    prof = ad_validate(discretize(UniformInterval(0, 1), 12), 1.0)
    assert prof.C1_hat == pytest.approx(1.0, rel=0.05)
    assert prof.C2_hat == pytest.approx(2.0, rel=0.05)
    assert prof.is_ad


def test_ad_cantor_stable(c10):
    prof = ad_validate(c10, S_CANTOR)
    assert prof.is_ad
    assert 0 < prof.C1_hat <= prof.C2_hat < 10
    np.testing.assert_array_less(prof.min_ratio * (1 - 1e-12), prof.max_ratio)


def test_ad_cantor_wrong_exponent(c10):
    prof = ad_validate(c10, 1.0)
    assert not prof.is_ad
    small = prof.eps < 0.01
    assert prof.sup_ratio[small].max() > 5 * prof.sup_ratio[-1]


def test_ad_sandwich_rescan():
    dm = discretize(cantor(), 8)
    # sample_count above the cell count: every cell midpoint is a centre
    prof = ad_validate(dm, S_CANTOR, sample_count=10 ** 6)
    for e in prof.eps:
        ratio = ball_mass(dm, dm.mids, e) / e ** S_CANTOR
        assert ratio.min() >= prof.C1_hat * (1 - 1e-12)
        assert ratio.max() <= prof.C2_hat * (1 + 1e-12)


def test_ad_determinism(c10):
    a = ad_validate(c10, S_CANTOR, sample_count=128, seed=5)
    b = ad_validate(c10, S_CANTOR, sample_count=128, seed=5)
    assert a.to_dict() == b.to_dict()


def test_ad_rejects_fine_grid(c10):
    with pytest.raises(MeasureError):
        ad_validate(c10, S_CANTOR, eps_grid=[1e-6, 0.1])


def test_conditional_uniform_half():
    dm = discretize(UniformInterval(0, 1), 6)
    cm = conditional(dm, (0, 0.5))
    assert cm.mass_of_region == pytest.approx(0.5)
    assert cm.scale_ratio == pytest.approx(0.5)
    nu = cm.rescaled
    np.testing.assert_allclose(nu.lo, np.linspace(0, 1, 33)[:-1], atol=1e-15)
    np.testing.assert_allclose(nu.mass, 1 / 32)


def test_conditional_cantor_third():
    nu = conditional(discretize(cantor(), 8), (0, 1 / 3)).rescaled
    ref = discretize(cantor(), 7)
    np.testing.assert_allclose(nu.lo, ref.lo, atol=1e-14)
    np.testing.assert_allclose(nu.hi, ref.hi, atol=1e-14)
    np.testing.assert_allclose(nu.mass, ref.mass, atol=1e-15)


def test_conditional_full_support(c10):
    cm = conditional(c10, (0, 1))
    assert cm.mass_of_region == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(cm.rescaled.lo, c10.lo, atol=1e-15)


def test_conditional_empty_region(c10):
    with pytest.raises(MeasureError):
        conditional(c10, (0.4, 0.6))


def test_scale_translate_examples():
    u = discretize(UniformInterval(0, 1), 4)
    np.testing.assert_allclose(scale_translate(u, 2).hi, 2 * u.hi)
    c = discretize(cantor(), 6)
    left = scale_translate(c, 1 / 3)
    ref = discretize(cantor(), 7)
    np.testing.assert_allclose(left.lo, ref.lo[: len(ref) // 2], atol=1e-15)
    moved = scale_translate(c, 1, 5)
    assert moved.diameter == pytest.approx(c.diameter, abs=1e-12)
    with pytest.raises(ValueError):
        scale_translate(c, -1)


@settings(max_examples=40)
@given(st.floats(1e-3, 1e3), st.floats(-100, 100))
def test_mass_conservation_scale(c, b):
    dm = scale_translate(discretize(cantor(), 6), c, b)
    assert dm.mass.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40)
@given(st.floats(0, 0.9), st.floats(0.05, 1))
def test_mass_conservation_conditional(a, w):
    dm = discretize(UniformInterval(0, 1), 7)
    cm = conditional(dm, (a, min(1.0, a + w)))
    assert cm.base.mass.sum() == pytest.approx(1.0, abs=1e-12)
    nu = cm.rescaled
    assert nu.mass.sum() == pytest.approx(1.0, abs=1e-12)
    # normalisation: rescaled support diameter at most 1
    assert nu.diameter <= 1 + 1e-12
