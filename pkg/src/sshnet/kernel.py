"""First-order stable spline kernel, ``K[i, j] = alpha ** max(i, j)`` (0-based)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ConditioningError, ParameterError, ShapeError

ALPHA_MIN = 1e-6
ALPHA_MAX = 0.999


@dataclass(frozen=True)
class StableSplineKernel:
    """Kernel matrix with its Cholesky factor ``M`` (``K = M @ M.T``) and inverse."""

    m: int
    alpha: float
    K: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    K_inv: np.ndarray = field(repr=False)


def kernel_matrix(m: int, alpha: float) -> np.ndarray:
    idx = np.arange(m)
    return alpha ** np.maximum.outer(idx, idx).astype(float)


def build_kernel(m: int, alpha: float) -> StableSplineKernel:
    if int(m) != m or m < 1:
        raise ParameterError(f"FIR length m must be a positive integer, got {m!r}")
    m = int(m)
    alpha = float(alpha)
    if not ALPHA_MIN <= alpha <= ALPHA_MAX:
        raise ParameterError(
            f"alpha={alpha} outside admissible range [{ALPHA_MIN}, {ALPHA_MAX}]"
        )
    K = kernel_matrix(m, alpha)
    try:
        M = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"stable spline kernel is numerically indefinite (alpha={alpha}, m={m})"
        ) from exc
    M_inv = linalg.solve_triangular(M, np.eye(m), lower=True)
    K_inv = M_inv.T @ M_inv
    K_inv = 0.5 * (K_inv + K_inv.T)
    for arr in (K, M, K_inv):
        arr.setflags(write=False)
    return StableSplineKernel(m=m, alpha=alpha, K=K, M=M, K_inv=K_inv)


def kernel_quadratic_norm(v, kernel: StableSplineKernel) -> float:
    """Return ``v.T @ inv(K) @ v`` as ``||inv(M) @ v||**2``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (kernel.m,):
        raise ShapeError(f"expected vector of length {kernel.m}, got shape {v.shape}")
    z = linalg.solve_triangular(kernel.M, v, lower=True, check_finite=False)
    return float(z @ z)


def kernel_factor_apply(kernel: StableSplineKernel, X, side: str = "left") -> np.ndarray:
    """Return ``M @ X`` (``side="left"``) or ``X @ M.T`` (``side="right"``)."""
    X = np.asarray(X, dtype=float)
    if side == "left":
        if X.shape[0] != kernel.m:
            raise ShapeError(f"left factor needs {kernel.m} rows, got {X.shape}")
        return kernel.M @ X
    if side == "right":
        if X.ndim != 2 or X.shape[1] != kernel.m:
            raise ShapeError(f"right factor needs {kernel.m} columns, got {X.shape}")
        return X @ kernel.M.T
    raise ParameterError(f"side must be 'left' or 'right', got {side!r}")
