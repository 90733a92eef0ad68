"""Sparse dynamic network identification with the stable spline horseshoe prior."""

from .distributions import RngStream
from .evidence import log_marginal_likelihood, select_alpha
from .gibbs import ChainConfig, run_chain, summarize_posterior
from .kernel import build_kernel
from .netsim import NetworkDataset, synthesize_dataset
from .regressors import RegressorSet, build_toeplitz

__version__ = "0.1.0"

__all__ = [
    "ChainConfig", "NetworkDataset", "RegressorSet", "RngStream", "build_kernel",
    "build_toeplitz", "log_marginal_likelihood", "run_chain", "select_alpha",
    "summarize_posterior", "synthesize_dataset",
]
