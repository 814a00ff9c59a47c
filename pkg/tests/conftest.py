import time

import pytest

from adquant import covering, measure, quantizer


@pytest.fixture(scope="session")
def uniform14():
    return measure.discretize(measure.UniformInterval(0.0, 1.0), 14)


@pytest.fixture(scope="session")
def uniform14_sweep(uniform14):
    t0 = time.perf_counter()
    res = {n: quantizer.dp_optimal_1d(uniform14, n, 0.0) for n in range(1, 17)}
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def cantor12():
    return measure.discretize(measure.cantor(), 12)


@pytest.fixture(scope="session")
def cantor12_profile(cantor12):
    return measure.ad_validate(cantor12, measure.cantor().similarity_dimension)


@pytest.fixture(scope="session")
def cantor12_sweep(cantor12):
    return quantizer.dp_all(cantor12, 64, 0.0)


@pytest.fixture(scope="session")
def cantor12_level2(cantor12, cantor12_profile):
    prof = cantor12_profile
    K = covering.constants_from(prof.C1_hat, prof.C2_hat, prof.s0, m=3, delta=1.0 / 16)
    p = covering.build_packing(cantor12, prof, 2, m=3)
    return p, covering.neighbor_graph(p, K.delta), K
