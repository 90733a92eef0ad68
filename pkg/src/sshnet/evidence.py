"""Optimized marginal likelihood and grid selection of the kernel decay rate."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .distributions import RngStream
from .errors import ConditioningError, ParameterError
from .kernel import build_kernel

log = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


def half_cauchy_logpdf(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.log(2.0 / np.pi) - np.log1p(x * x)


class EvidenceEvaluator:
    """Caches the products needed to evaluate ``log N(Y; 0, Sigma_Y)`` repeatedly.

    ``Sigma_Y = sigma2 I_n + sum_k tau2 lambda2_k G_k K G_k^T``. With
    ``method="auto"`` the ``(m p) x (m p)`` Woodbury form is used when
    ``m p < n``, otherwise the ``n x n`` covariance is factored directly.
    """

    def __init__(self, Y, regressors, kernel, method: str = "auto"):
        if method not in ("auto", "direct", "woodbury"):
            raise ParameterError(f"unknown evidence method {method!r}")
        self.Y = np.asarray(Y, dtype=float)
        self.n, self.m, self.p = regressors.n, regressors.m, regressors.p
        if method == "auto":
            method = "woodbury" if self.m * self.p < self.n else "direct"
        self.method = method
        GM = [G @ kernel.M for G in regressors.G]
        self.yy = float(self.Y @ self.Y)
        if method == "direct":
            self._gkg = np.stack([A @ A.T for A in GM])
        else:
            W = np.hstack(GM)
            self._wtw = W.T @ W
            self._wty = W.T @ self.Y

    def gaussian_part(self, sigma2: float, lambda2, tau2: float) -> float:
        c = tau2 * np.asarray(lambda2, dtype=float)
        if self.method == "direct":
            S = np.tensordot(c, self._gkg, axes=1)
            S[np.diag_indices_from(S)] += sigma2
            L = self._cholesky(S)
            z = linalg.solve_triangular(L, self.Y, lower=True, check_finite=False)
            logdet = 2.0 * np.sum(np.log(np.diag(L)))
            quad = float(z @ z)
        else:
            s = np.repeat(np.sqrt(c), self.m)
            C = (s[:, None] * self._wtw * s[None, :]) / sigma2
            C[np.diag_indices_from(C)] += 1.0
            L = self._cholesky(C)
            v = linalg.solve_triangular(L, s * self._wty, lower=True, check_finite=False)
            logdet = self.n * np.log(sigma2) + 2.0 * np.sum(np.log(np.diag(L)))
            quad = (self.yy - float(v @ v) / sigma2) / sigma2
        return float(-0.5 * (self.n * LOG_2PI + logdet + quad))

    @staticmethod
    def _cholesky(S):
        try:
            return linalg.cholesky(S, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            pivot = float(np.min(linalg.eigvalsh(S)))
            raise ConditioningError(
                f"marginal covariance is not positive definite (smallest pivot ~ {pivot:.3e})"
            ) from exc

    def log_evidence(self, sigma2: float, lambda2, tau2: float) -> float:
        lambda2 = np.asarray(lambda2, dtype=float)
        return (
            self.gaussian_part(sigma2, lambda2, tau2)
            - np.log(sigma2)
            + float(half_cauchy_logpdf(np.sqrt(tau2)))
            + float(np.sum(half_cauchy_logpdf(np.sqrt(lambda2))))
        )

    def from_state(self, state) -> float:
        return self.log_evidence(state.sigma2, state.lambda2, state.tau2)


def gaussian_log_density(Y, regressors, kernel, sigma2, lambda2, tau2, method: str = "auto") -> float:
    return EvidenceEvaluator(Y, regressors, kernel, method).gaussian_part(sigma2, lambda2, tau2)


def log_marginal_likelihood(Y, regressors, kernel, sigma2, lambda2, tau2, method: str = "auto") -> float:
    """Log of the optimized evidence at the given variances.

    Sum of the Gaussian log-density of ``Y`` with modules integrated out,
    ``-log sigma2``, and half-Cauchy log-densities of ``sqrt(tau2)`` and
    each ``sqrt(lambda2_k)``.
    """
    if sigma2 <= 0 or tau2 <= 0 or np.any(np.asarray(lambda2) <= 0):
        raise ParameterError("all variances must be positive")
    return EvidenceEvaluator(Y, regressors, kernel, method).log_evidence(sigma2, lambda2, tau2)


@dataclass
class EvidenceRecord:
    alpha: float
    log_ml_trace: list                       # [(sweep, value), ...]
    best_log_ml: float
    best_hyperparams: Optional[tuple] = None  # (sigma2, lambda2, tau2)
    chain: object = field(default=None, repr=False)

    @classmethod
    def from_chain(cls, alpha: float, chain) -> "EvidenceRecord":
        trace = chain.evidence_trace
        if not trace:
            raise ParameterError("chain carries no evidence evaluations; set evidence_stride")
        i = int(np.argmax([v for _, v, _ in trace]))
        return cls(
            alpha=alpha,
            log_ml_trace=[(s, v) for s, v, _ in trace],
            best_log_ml=trace[i][1],
            best_hyperparams=trace[i][2],
            chain=chain,
        )


def argmax_alpha(records) -> float:
    """Grid value with the largest evidence; ties go to the smaller alpha."""
    best = None
    for rec in sorted(records, key=lambda r: r.alpha):
        if best is None or rec.best_log_ml > best.best_log_ml:
            best = rec
    return best.alpha


def select_alpha(grid, dataset, config, regressors=None, rng: Optional[RngStream] = None,
                 runner=None):
    """Run one chain per grid value and return ``(alpha_best, records)``.

    Chains use child streams ``rng.child(i)`` of the root stream (default
    ``RngStream(config.seed)``). ``runner`` replaces the per-alpha chain with
    any callable ``(alpha, index) -> EvidenceRecord`` (used for parallel
    execution and for tests that inject traces).
    """
    from dataclasses import replace

    from .gibbs import run_chain

    grid = [float(a) for a in grid]
    if not grid:
        raise ParameterError("alpha grid is empty")
    for a in grid:
        build_kernel(1, a)  # range check up front
    if config.evidence_stride is None:
        config = replace(config, evidence_stride=50)
    if regressors is None:
        regressors = dataset.regressors()
    root = rng if rng is not None else RngStream(config.seed)

    def default_runner(alpha, i):
        kern = build_kernel(regressors.m, alpha)
        try:
            chain = run_chain(dataset, regressors, kern, config, rng=root.child(i))
        except Exception as exc:
            raise type(exc)(f"alpha={alpha}: {exc}") from exc
        return EvidenceRecord.from_chain(alpha, chain)

    run = runner or default_runner
    records = [run(a, i) for i, a in enumerate(grid)]
    for rec in records:
        log.info("alpha=%.4g best log evidence %.3f", rec.alpha, rec.best_log_ml)
    return argmax_alpha(records), records
