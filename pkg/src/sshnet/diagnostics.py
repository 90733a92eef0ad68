"""Chain diagnostics: effective sample size and Monte Carlo standard errors."""

from __future__ import annotations

import numpy as np


def autocorrelation(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    if acov[0] == 0:
        return np.ones(1)
    return acov / acov[0]


def effective_sample_size(x) -> float:
    """Geyer's initial monotone sequence estimate for a single chain."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 4 or np.all(x == x[0]):
        return float(n)
    rho = autocorrelation(x)
    # pair sums Gamma_t = rho[2t] + rho[2t+1], truncated at the first negative one
    m = (len(rho) - 1) // 2
    gam = rho[0 : 2 * m : 2] + rho[1 : 2 * m + 1 : 2]
    neg = np.nonzero(gam < 0)[0]
    if neg.size:
        gam = gam[: neg[0]]
    gam = np.minimum.accumulate(gam)
    tau = -1.0 + 2.0 * np.sum(gam)
    return float(n / max(tau, 1.0 / n))


def batch_means_se(x, n_batches: int = 50) -> float:
    """Standard error of the mean of an autocorrelated series by non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    b = x.shape[0] // n_batches
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def winsorize(x, lo: float, hi: float) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), lo, hi)
