"""Seeded samplers for the hierarchy's distributions.

Every sampler takes an explicit :class:`RngStream`; nothing touches global
numpy state. Inverse-gamma draws are reciprocals of gamma(shape, rate) draws
and half-Cauchy draws use the inverse CDF ``tan(pi * u / 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


class RngStream:
    """Single-owner random stream backed by PCG64.

    Child streams are derived from ``(seed, *stream_ids)`` through
    :class:`numpy.random.SeedSequence`, so chain ``i`` of root seed ``s``
    always sees the same sequence regardless of how many siblings exist.
    """

    def __init__(self, seed: int, stream_ids: tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.stream_ids = tuple(int(i) for i in stream_ids)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream_ids)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_ids + (int(index),))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_ids={self.stream_ids})"

    # thin passthroughs; keep call sites short in the sampler loop
    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def gamma(self, shape, size=None):
        return self.generator.standard_gamma(shape, size)


@dataclass(frozen=True)
class InverseGammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ParameterError(
                f"inverse-gamma needs shape > 0 and scale > 0, got ({self.shape}, {self.scale})"
            )

    def mean(self) -> float:
        return self.scale / (self.shape - 1) if self.shape > 1 else np.inf


def sample_inverse_gamma(params: InverseGammaParams, rng: RngStream, size=None):
    # X ~ Gamma(a, rate b)  =>  1/X ~ IG(a, b); standard_gamma has unit rate
    g = rng.gamma(params.shape, size)
    return params.scale / g


def inverse_gamma(shape: float, scale: float, rng: RngStream) -> float:
    """Scalar fast path used by the sampler (no dataclass allocation)."""
    return scale / rng.generator.standard_gamma(shape)


def sample_half_cauchy(rng: RngStream, size=None):
    u = rng.uniform(size)
    # u == 0 has probability 2**-53 and would give an exact zero
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    x = np.tan(0.5 * np.pi * u)
    return float(x) if size is None else x


def sample_half_cauchy_via_mixture(rng: RngStream, size=None):
    """Return ``(lambda2, nu)`` with ``nu ~ IG(1/2, 1)`` and ``lambda2 | nu ~ IG(1/2, 1/nu)``.

    The marginal of ``sqrt(lambda2)`` is the standard half-Cauchy.
    """
    nu = sample_inverse_gamma(InverseGammaParams(0.5, 1.0), rng, size)
    lambda2 = (1.0 / nu) / rng.gamma(0.5, size)
    return lambda2, nu


def sample_gaussian_factored(mean, factor, rng: RngStream) -> np.ndarray:
    """Draw from ``N(mean, A @ A.T)`` as ``mean + A @ omega``."""
    mean = np.asarray(mean, dtype=float)
    A = np.asarray(factor, dtype=float)
    if mean.ndim != 1 or A.ndim != 2 or A.shape[0] != mean.shape[0]:
        raise ShapeError(f"factor shape {A.shape} does not match mean length {mean.shape}")
    omega = rng.normal(A.shape[1])
    return mean + A @ omega


def shrinkage_coefficient(i: int, alpha: float, lambda2):
    """Weight ``alpha**(i-1) * lambda2 / (1 + alpha**(i-1) * lambda2)`` for lag ``i`` (1-based)."""
    s = alpha ** (i - 1) * np.asarray(lambda2, dtype=float)
    return s / (1.0 + s)


def _check_bin_width(bin_width: float) -> int:
    if not 0 < bin_width <= 1:
        raise ParameterError(f"bin width must lie in (0, 1], got {bin_width}")
    nbins = int(round(1.0 / bin_width))
    if abs(nbins * bin_width - 1.0) > 1e-9:
        raise ParameterError(f"bin width {bin_width} does not divide the unit interval")
    return nbins


def shrinkage_samples(i: int, alpha: float, n_samples: int, rng: RngStream) -> np.ndarray:
    lam = sample_half_cauchy(rng, n_samples)
    return shrinkage_coefficient(i, alpha, lam * lam)


def shrinkage_profile(i: int, alpha: float, n_samples: int, bin_width: float, rng: RngStream):
    """Histogram of the lag-``i`` shrinkage weight under a half-Cauchy local scale.

    Bins are right-closed, ``(x - bin_width, x]`` for
    ``x = bin_width, 2 * bin_width, ..., 1``.

    Returns
    -------
    edges : ndarray
        Right bin edges ``x``.
    probs : ndarray
        Empirical probability of each bin; sums to one.
    """
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if i < 1 or n_samples < 1:
        raise ParameterError("lag i and n_samples must be positive")
    nbins = _check_bin_width(bin_width)
    c = shrinkage_samples(i, alpha, n_samples, rng)
    # right-closed bins; exact 0 (underflow) joins the first bin
    idx = np.clip(np.ceil(c * nbins).astype(int), 1, nbins) - 1
    counts = np.bincount(idx, minlength=nbins)
    edges = np.arange(1, nbins + 1) / nbins
    return edges, counts / counts.sum()


def sample_ssh_prior(m: int, alpha: float, count: int, rng: RngStream, tau: float = 1.0):
    """Impulse responses from the stable spline horseshoe prior at fixed global scale.

    Returns ``(lambdas, thetas)`` with ``thetas`` of shape ``(count, m)``.
    """
    from .kernel import build_kernel

    kern = build_kernel(m, alpha)
    lambdas = sample_half_cauchy(rng, count)
    omega = rng.normal((count, m))
    thetas = (tau * lambdas)[:, None] * (omega @ kern.M.T)
    return lambdas, thetas
