"""Initial-design tests: LHS stratification, Sobol reference points."""

import numpy as np
import pytest
from scipy.stats import qmc

from spartanopt.design import lhs, sobol


def assert_stratified(pts):
    p, d = pts.shape
    for j in range(d):
        strata = np.floor(pts[:, j] * p).astype(int)
        assert sorted(strata) == list(range(p))


def test_lhs_stratification_exact():
    pts = lhs(10, 3, np.random.default_rng(0))
    assert pts.shape == (10, 3)
    assert_stratified(pts)


def test_lhs_stratification_property():
    rng = np.random.default_rng(42)
    for _ in range(20):
        p = int(rng.integers(1, 40))
        d = int(rng.integers(1, 8))
        pts = lhs(p, d, rng)
        assert np.all(pts >= 0.0) and np.all(pts < 1.0)
        assert_stratified(pts)


def test_lhs_single_point():
    pts = lhs(1, 4, np.random.default_rng(1))
    assert pts.shape == (1, 4)
    assert np.all((pts >= 0) & (pts < 1))


def test_lhs_seed_determinism():
    a = lhs(8, 2, np.random.default_rng(7))
    b = lhs(8, 2, np.random.default_rng(7))
    c = lhs(8, 2, np.random.default_rng(8))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sobol_reference_points():
    for d in (1, 2, 5, 32):
        pts = sobol(1, d)
        np.testing.assert_array_equal(pts, np.full((1, d), 0.5))
    np.testing.assert_array_equal(sobol(2, 2)[1], [0.75, 0.25])


def test_sobol_deterministic_and_in_range():
    a = sobol(100, 3)
    b = sobol(100, 3)
    np.testing.assert_array_equal(a, b)
    assert np.all(a >= 0.0) and np.all(a < 1.0)


def test_sobol_dimension_limit():
    with pytest.raises(ValueError):
        sobol(4, 33)
    with pytest.raises(ValueError):
        sobol(0, 2)


def test_sobol_beats_uniform_discrepancy():
    sob = qmc.discrepancy(sobol(256, 2), method="L2-star")
    rng = np.random.default_rng(3)
    uniform = [
        qmc.discrepancy(rng.random((256, 2)), method="L2-star") for _ in range(20)
    ]
    assert sob < np.median(uniform)
