"""Toeplitz regressors, network prediction and incremental residuals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InsufficientHistoryError, ShapeError


def build_toeplitz(u, n: int, m: int) -> np.ndarray:
    """Convolution matrix with ``G[i, j] = u[m - 1 + i - j]``.

    The first ``m - 1`` raw samples are warm-up, so row ``i`` holds the
    ``m`` most recent inputs ending at the sample aligned with output ``i``.
    Extra trailing samples beyond ``n + m - 1`` are ignored.

    >>> build_toeplitz([1, 2, 3, 4], n=2, m=3)
    array([[3., 2., 1.],
           [4., 3., 2.]])
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ShapeError(f"input signal must be 1-D, got shape {u.shape}")
    need = n + m - 1
    if u.shape[0] < need:
        raise InsufficientHistoryError(
            f"input has {u.shape[0]} samples; n={n}, m={m} requires at least {need}"
        )
    return linalg.toeplitz(u[m - 1 : m - 1 + n], u[m - 1 :: -1])


@dataclass(frozen=True)
class RegressorSet:
    G: tuple
    n: int
    m: int
    p: int

    @classmethod
    def from_inputs(cls, inputs, n: int, m: int) -> "RegressorSet":
        G = tuple(build_toeplitz(u, n, m) for u in inputs)
        for g in G:
            g.setflags(write=False)
        return cls(G=G, n=n, m=m, p=len(G))

    def stacked(self) -> np.ndarray:
        """``[G_1 ... G_p]`` as one ``n x (m p)`` matrix."""
        return np.hstack(self.G)


def predict(regressors: RegressorSet, thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (regressors.p, regressors.m):
        raise ShapeError(
            f"thetas must have shape ({regressors.p}, {regressors.m}), got {thetas.shape}"
        )
    out = np.zeros(regressors.n)
    for G_k, th in zip(regressors.G, thetas):
        out += G_k @ th
    return out


def residual(Y, regressors: RegressorSet, thetas) -> np.ndarray:
    return np.asarray(Y, dtype=float) - predict(regressors, thetas)


def residual_swap_module(res: np.ndarray, G_k: np.ndarray, theta_old, theta_new) -> np.ndarray:
    """In-place ``res += G_k @ (theta_old - theta_new)``; returns ``res``."""
    if G_k.shape[0] != res.shape[0] or G_k.shape[1] != np.shape(theta_old)[0] \
            or np.shape(theta_old) != np.shape(theta_new):
        raise ShapeError(
            f"cannot swap module: G {G_k.shape}, residual {res.shape}, "
            f"thetas {np.shape(theta_old)} / {np.shape(theta_new)}"
        )
    res += G_k @ (theta_old - theta_new)
    return res
