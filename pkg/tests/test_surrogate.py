"""GP surrogate tests against brute-force dense-inverse oracles."""

import math

import numpy as np
import pytest

from spartanopt.kernels import gram_matrix, matern_spec
from spartanopt.surrogate import (
    ObservationSet,
    SingularModelError,
    fit,
    log_marginal_likelihood,
    predict,
    predict_batch,
)
from spartanopt.warp import WarpParams

from test_kernels import random_spartan_spec


def dense_oracle(obs, spec, noise, Xq):
    """Reference posterior by explicit matrix inversion."""
    K = gram_matrix(obs.X, spec, noise)
    Kinv = np.linalg.inv(K)
    ones = np.ones(obs.n)
    m_hat = float(ones @ Kinv @ obs.y) / float(ones @ Kinv @ ones)
    resid = obs.y - m_hat
    kq = np.array([[_kval(x, xi, spec) for xi in obs.X] for x in Xq])
    mean = m_hat + kq @ Kinv @ resid
    var = np.array([_kval(x, x, spec) for x in Xq]) - np.einsum(
        "ij,jk,ik->i", kq, Kinv, kq
    )
    sign, logdet = np.linalg.slogdet(K)
    lml = -0.5 * float(resid @ Kinv @ resid) - 0.5 * logdet - 0.5 * obs.n * math.log(2 * math.pi)
    return mean, var, lml


def _kval(x, x2, spec):
    from spartanopt.kernels import kernel_value

    return kernel_value(x, x2, spec)


def make_obs(rng, n, d):
    X = rng.uniform(0, 1, (n, d))
    y = rng.normal(0, 2.0, n) + 5.0
    return ObservationSet.from_data(X, y)


def test_single_observation_zero_mean():
    obs = ObservationSet.from_data(np.array([[0.4]]), np.array([0.0]))
    post = fit(obs, matern_spec([1.0]), noise=0.0)
    assert post.m_hat == 0.0
    np.testing.assert_array_equal(post.alpha, [0.0])


def test_two_point_model_matches_explicit_inverse():
    rng = np.random.default_rng(0)
    obs = make_obs(rng, 2, 1)
    spec = matern_spec([0.5])
    noise = 1e-4
    post = fit(obs, spec, noise)
    Xq = rng.uniform(0, 1, (20, 1))

    # hand-coded 2x2 inverse
    K = gram_matrix(obs.X, spec, noise)
    a, b, c = K[0, 0], K[0, 1], K[1, 1]
    det = a * c - b * b
    Kinv = np.array([[c, -b], [-b, a]]) / det
    ones = np.ones(2)
    m_hat = float(ones @ Kinv @ obs.y) / float(ones @ Kinv @ ones)
    resid = obs.y - m_hat
    for x in Xq:
        kq = np.array([_kval(x, xi, spec) for xi in obs.X])
        mu = m_hat + kq @ Kinv @ resid
        var = _kval(x, x, spec) - kq @ Kinv @ kq
        pred = predict(post, x)
        assert pred.mean == pytest.approx(mu, abs=1e-8)
        assert pred.variance == pytest.approx(max(var, 0.0), abs=1e-8)


def test_duplicated_points_engage_jitter_ladder():
    X = np.array([[0.3, 0.3], [0.3, 0.3], [0.7, 0.1]])
    obs = ObservationSet.from_data(X, np.array([1.0, 1.0, 2.0]))
    post = fit(obs, matern_spec([1.0, 1.0]), noise=0.0)
    assert 0.0 < post.jitter <= 1e-4


def test_far_query_recovers_prior():
    obs = ObservationSet.from_data(np.array([[0.0, 0.0]]), np.array([3.0]))
    spec = matern_spec([1e-3, 1e-3])  # correlation dies within a tiny radius
    post = fit(obs, spec, noise=1e-6)
    pred = predict(post, np.array([1.0, 1.0]))
    assert pred.mean == pytest.approx(post.m_hat, abs=1e-6)
    assert pred.variance == pytest.approx(1.0, abs=1e-6)


def test_interpolation_with_tiny_noise():
    rng = np.random.default_rng(1)
    obs = make_obs(rng, 8, 2)
    post = fit(obs, matern_spec([0.5, 0.5]), noise=1e-10)
    for i in range(obs.n):
        pred = predict(post, obs.X[i])
        assert abs(pred.mean - obs.y[i]) <= 1e-4
        assert pred.variance <= 1e-4


def test_matches_dense_oracle_matern():
    rng = np.random.default_rng(2)
    obs = make_obs(rng, 10, 2)
    spec = matern_spec([0.4, 0.8])
    noise = 1e-6
    post = fit(obs, spec, noise)
    Xq = rng.uniform(0, 1, (50, 2))
    mean, var = predict_batch(post, Xq)
    o_mean, o_var, o_lml = dense_oracle(obs, spec, noise, Xq)
    np.testing.assert_allclose(mean, o_mean, atol=1e-8)
    np.testing.assert_allclose(var, np.maximum(o_var, 0.0), atol=1e-8)
    assert log_marginal_likelihood(post, obs) == pytest.approx(o_lml, abs=1e-8)


def test_matches_dense_oracle_spartan_sizes():
    rng = np.random.default_rng(3)
    for n in (1, 3, 6, 12):
        obs = make_obs(rng, n, 2)
        spec = random_spartan_spec(rng, 2)
        post = fit(obs, spec, noise=1e-6)
        Xq = rng.uniform(0, 1, (10, 2))
        mean, var = predict_batch(post, Xq)
        o_mean, o_var, o_lml = dense_oracle(obs, spec, 1e-6, Xq)
        np.testing.assert_allclose(mean, o_mean, atol=1e-8)
        np.testing.assert_allclose(var, np.maximum(o_var, 0.0), atol=1e-8)
        assert log_marginal_likelihood(post, obs) == pytest.approx(o_lml, abs=1e-8)


def test_variance_bounds():
    rng = np.random.default_rng(4)
    obs = make_obs(rng, 12, 3)
    noise = 1e-3
    post = fit(obs, matern_spec([0.3, 0.6, 1.0]), noise)
    _, var = predict_batch(post, rng.uniform(0, 1, (200, 3)))
    assert np.all(var >= 0.0)
    assert np.all(var <= 1.0 + noise)


def test_standardization_idempotent_under_affine_outcomes():
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 1, (9, 2))
    y = rng.normal(0, 1, 9)
    obs_a = ObservationSet.from_data(X, y)
    obs_b = ObservationSet.from_data(X, 3.5 * y - 7.0)
    np.testing.assert_allclose(obs_a.y, obs_b.y, atol=1e-12)
    spec = matern_spec([0.5, 0.5])
    post_a = fit(obs_a, spec, 1e-6)
    post_b = fit(obs_b, spec, 1e-6)
    np.testing.assert_allclose(post_a.alpha, post_b.alpha, atol=1e-12)


def test_lml_single_point_standard_normal():
    obs = ObservationSet.from_data(np.array([[0.2]]), np.array([0.0]))
    post = fit(obs, matern_spec([1.0]), noise=0.0)  # k(x,x) + noise = 1
    got = log_marginal_likelihood(post, obs)
    assert got == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-5)


def test_lml_decreases_when_residuals_grow():
    # bypass standardization to scale residuals directly
    rng = np.random.default_rng(6)
    X = rng.uniform(0, 1, (6, 1))
    y = rng.normal(0, 1, 6)
    spec = matern_spec([0.5])
    base = ObservationSet(X=X, y_raw=y, y=y, y_mean=0.0, y_std=1.0)
    scaled = ObservationSet(X=X, y_raw=y, y=2.0 * y, y_mean=0.0, y_std=1.0)
    lml_base = log_marginal_likelihood(fit(base, spec, 1e-6), base)
    lml_scaled = log_marginal_likelihood(fit(scaled, spec, 1e-6), scaled)
    assert lml_scaled < lml_base


def test_fit_rejects_empty_and_negative_noise():
    obs = ObservationSet.from_data(np.empty((0, 2)), np.empty(0))
    with pytest.raises(ValueError):
        fit(obs, matern_spec([1.0, 1.0]), 1e-6)
    obs2 = ObservationSet.from_data(np.array([[0.1, 0.2]]), np.array([1.0]))
    with pytest.raises(ValueError):
        fit(obs2, matern_spec([1.0, 1.0]), -1.0)


def test_warped_fit_matches_manually_warped_inputs():
    rng = np.random.default_rng(7)
    X = rng.uniform(0, 1, (7, 2))
    y = rng.normal(0, 1, 7)
    w = WarpParams(np.array([2.0, 0.5]), np.array([0.8, 1.7]))
    spec = matern_spec([0.4, 0.6])

    from spartanopt.warp import warp_point

    obs = ObservationSet.from_data(X, y)
    obs_warped = ObservationSet.from_data(warp_point(X, w), y)
    post = fit(obs, spec, 1e-6, warp=w)
    post_manual = fit(obs_warped, spec, 1e-6)
    Xq = rng.uniform(0, 1, (9, 2))
    mean, var = predict_batch(post, Xq)
    mean2, var2 = predict_batch(post_manual, warp_point(Xq, w))
    np.testing.assert_allclose(mean, mean2, atol=1e-12)
    np.testing.assert_allclose(var, var2, atol=1e-12)
