import numpy as np
import pytest
from scipy import special, stats

from sshnet.distributions import (
    InverseGammaParams,
    RngStream,
    sample_gaussian_factored,
    sample_half_cauchy,
    sample_half_cauchy_via_mixture,
    sample_inverse_gamma,
    sample_ssh_prior,
    shrinkage_coefficient,
    shrinkage_profile,
    shrinkage_samples,
)
from sshnet.errors import ParameterError, ShapeError


def invgamma_cdf(x, a, b):
    # P(X <= x) = P(G >= b/x) for G ~ Gamma(a, 1): regularized upper incomplete gamma
    return special.gammaincc(a, b / np.asarray(x))


def half_cauchy_cdf(x):
    return 2.0 / np.pi * np.arctan(x)


def test_inverse_gamma_support_and_params():
    rng = RngStream(0)
    assert sample_inverse_gamma(InverseGammaParams(0.5, 1.0), rng) > 0
    for a, b in [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)]:
        with pytest.raises(ParameterError):
            InverseGammaParams(a, b)


def test_inverse_gamma_moments_and_cdf():
    x = sample_inverse_gamma(InverseGammaParams(3.0, 2.0), RngStream(1), 10**6)
    assert abs(x.mean() - 1.0) < 0.01
    assert abs(np.mean(x < 1.0) - invgamma_cdf(1.0, 3.0, 2.0)) < 0.005


@pytest.mark.parametrize("a,b", [(0.5, 1.0), (1.0, 1.0), (3.0, 2.0)])
def test_inverse_gamma_ks(a, b):
    x = sample_inverse_gamma(InverseGammaParams(a, b), RngStream(2), 10**5)
    ks = stats.kstest(x, lambda t: invgamma_cdf(t, a, b)).statistic
    assert ks < 0.01


def test_half_cauchy_direct():
    x = sample_half_cauchy(RngStream(3), 10**6)
    assert np.all(x > 0)
    assert abs(np.median(x) - 1.0) < 0.01
    assert abs(np.mean(x < np.tan(3 * np.pi / 8)) - 0.75) < 0.005
    assert sample_half_cauchy(RngStream(3)) > 0


def test_half_cauchy_mixture():
    lam2, nu = sample_half_cauchy_via_mixture(RngStream(4), 10**5)
    assert np.all(lam2 > 0) and np.all(nu > 0)
    assert stats.kstest(np.sqrt(lam2), half_cauchy_cdf).statistic < 0.01
    lam2, _ = sample_half_cauchy_via_mixture(RngStream(5), 10**6)
    assert abs(np.median(np.sqrt(lam2)) - 1.0) < 0.02


def test_gaussian_factored():
    assert sample_gaussian_factored([5.0], [[0.0]], RngStream(0)).tolist() == [5.0]
    rng = RngStream(6)
    A = np.array([[1.0, 0.0], [1.0, 1.0]])
    draws = np.array([sample_gaussian_factored(np.zeros(2), A, rng) for _ in range(2000)])
    assert draws.shape == (2000, 2)
    # vectorized equivalent for the 1e6-sample moment check
    omega = RngStream(7).normal((10**6, 2))
    big = omega @ A.T + np.array([0.3, -0.2])
    np.testing.assert_allclose(np.cov(big.T), [[1, 1], [1, 2]], atol=0.01)
    np.testing.assert_allclose(big.mean(axis=0), [0.3, -0.2], atol=0.005)
    with pytest.raises(ShapeError):
        sample_gaussian_factored(np.zeros(3), A, rng)


def test_gaussian_factored_moments_per_call():
    rng = RngStream(8)
    A = np.array([[1.0, 0.0], [1.0, 1.0]])
    mean = np.array([1.0, 2.0])
    draws = np.array([sample_gaussian_factored(mean, A, rng) for _ in range(50000)])
    np.testing.assert_allclose(np.cov(draws.T), A @ A.T, atol=0.05)
    np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.03)


def test_shrinkage_first_lag():
    assert shrinkage_coefficient(1, 0.3, 1.0) == 0.5
    c1 = shrinkage_samples(1, 0.8, 10**5, RngStream(9))
    assert abs(np.mean(c1 < 0.5) - 0.5) < 0.01
    assert stats.kstest(c1, stats.beta(0.5, 0.5).cdf).statistic < 0.01


def test_shrinkage_mass_moves_to_zero_with_lag():
    means = [shrinkage_samples(i, 0.8, 10**5, RngStream(10 + i)).mean() for i in (1, 5, 10)]
    assert means[0] >= means[1] >= means[2]
    assert means[0] - means[2] >= 0.05


def test_shrinkage_profile_histogram():
    edges, probs = shrinkage_profile(5, 0.8, 10**5, 0.01, RngStream(11))
    assert len(edges) == 100 and edges[-1] == pytest.approx(1.0)
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)
    # right-closed bins: compare with a direct count on the same stream
    c = shrinkage_samples(5, 0.8, 10**5, RngStream(11))
    assert probs[0] == pytest.approx(np.mean(c <= 0.01))
    with pytest.raises(ParameterError):
        shrinkage_profile(1, 0.8, 10, 0.03, RngStream(0))


def test_reproducible_streams():
    def run(seed):
        rng = RngStream(seed)
        return np.concatenate([
            np.atleast_1d(sample_inverse_gamma(InverseGammaParams(2.0, 1.0), rng, 5)),
            sample_half_cauchy(rng, 5),
            np.concatenate(sample_half_cauchy_via_mixture(rng, 3)),
            sample_gaussian_factored(np.zeros(2), np.eye(2), rng),
        ])
    assert np.array_equal(run(42), run(42))
    assert not np.array_equal(run(42), run(43))
    a = RngStream(42).child(0).normal(4)
    b = RngStream(42).child(1).normal(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, RngStream(42).child(0).normal(4))


def test_prior_draws_shape():
    lambdas, thetas = sample_ssh_prior(50, 0.8, 100, RngStream(12))
    assert thetas.shape == (100, 50) and lambdas.shape == (100,)
    norms = np.linalg.norm(thetas, axis=1)
    # heavy-tailed scales: some draws near zero, some large
    assert norms.min() < 0.1 * np.median(norms) < norms.max() / 10
