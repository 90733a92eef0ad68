"""Synthetic sparse networks: random rational modules, inputs, noisy outputs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal

from .distributions import RngStream
from .errors import ParameterError
from .regressors import RegressorSet, predict

MODEL_ORDER = 10
ROOT_RADIUS = 0.95
NORM_RANGE = (0.2, 1.0)
LOWPASS_POLE = 0.9


def draw_roots(order: int, rng: RngStream, radius: float = ROOT_RADIUS) -> np.ndarray:
    """Add a real root or a conjugate pair with equal probability until ``order`` is reached.

    When a single slot is left, only a real root fits.
    """
    roots: list[complex] = []
    while len(roots) < order:
        pair = rng.uniform() < 0.5
        if pair and order - len(roots) >= 2:
            r = radius * rng.uniform()
            phase = np.pi * rng.uniform()
            z = r * np.exp(1j * phase)
            roots.extend([z, np.conj(z)])
        else:
            roots.append(complex(radius * (2.0 * rng.uniform() - 1.0)))
    return np.asarray(roots)


@dataclass
class RandomModuleSpec:
    poles: np.ndarray
    zeros: np.ndarray
    target_norm: float
    gain: float = 1.0

    def raw_impulse_response(self, m: int) -> np.ndarray:
        # H(z) = N(z)/D(z), deg N = deg D - 1: one sample of pure delay
        num = np.real(np.poly(self.zeros)) if len(self.zeros) else np.ones(1)
        den = np.real(np.poly(self.poles)) if len(self.poles) else np.ones(1)
        b = np.concatenate([np.zeros(len(den) - len(num)), num])
        impulse = np.zeros(m)
        impulse[0] = 1.0
        return signal.lfilter(b, den, impulse)

    def impulse_response(self, m: int) -> np.ndarray:
        h = self.raw_impulse_response(m)
        nrm = np.linalg.norm(h)
        self.gain = self.target_norm / nrm
        return h * self.gain


def random_module_spec(rng: RngStream, poles: Optional[np.ndarray] = None) -> RandomModuleSpec:
    """Order-10 module; ``poles`` overrides the drawn denominator roots (test hook)."""
    drawn_poles = draw_roots(MODEL_ORDER, rng)
    zeros = draw_roots(MODEL_ORDER - 1, rng)
    lo, hi = NORM_RANGE
    target = lo + (hi - lo) * rng.uniform()
    if poles is not None:
        drawn_poles = np.asarray(poles, dtype=complex)
    return RandomModuleSpec(poles=drawn_poles, zeros=zeros, target_norm=float(target))


def random_impulse_response(m: int, rng: RngStream, poles=None) -> np.ndarray:
    if m < 20:
        raise ParameterError(f"FIR length m must be at least 20 to capture the response, got {m}")
    return random_module_spec(rng, poles=poles).impulse_response(m)


def generate_input(kind: str, n_raw: int, rng: RngStream) -> np.ndarray:
    """White N(0, 1) noise, or the same noise through ``1/(z - 0.9)`` started at rest."""
    if n_raw < 1:
        raise ParameterError("input length must be positive")
    w = rng.normal(n_raw)
    if kind == "white":
        return w
    if kind == "lowpass":
        # x[t] = 0.9 x[t-1] + w[t-1], x[0] = 0
        return signal.lfilter([0.0, 1.0], [1.0, -LOWPASS_POLE], w)
    raise ParameterError(f"unknown input kind {kind!r}; expected 'white' or 'lowpass'")


@dataclass
class NetworkDataset:
    inputs: np.ndarray          # (p, n + m - 1)
    outputs: np.ndarray         # (n,)
    n: int
    m: int
    p: int
    truth: Optional[np.ndarray] = None      # (p, m)
    sigma2_true: Optional[float] = None
    active_set: Optional[list] = None       # 0-based module indices
    seed: Optional[int] = None
    input_kind: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.n, self.m, self.p

    def regressors(self) -> RegressorSet:
        return RegressorSet.from_inputs(self.inputs, self.n, self.m)


def synthesize_dataset(
    p: int,
    q: int,
    n: int,
    m: int,
    snr: float,
    kind: str,
    rng: RngStream,
    active: Optional[list] = None,
) -> NetworkDataset:
    """Sparse network with ``q`` random active modules out of ``p``.

    The noise variance is ``var(z) / snr`` (population variance of the noiseless
    output ``z``), or 1 when the network is empty. ``active`` pins the active
    indices instead of drawing them.
    """
    if not 0 <= q <= p:
        raise ParameterError(f"need 0 <= q <= p, got q={q}, p={p}")
    if n < 1 or m < 20 or snr <= 0:
        raise ParameterError(f"invalid dimensions or snr (n={n}, m={m}, snr={snr})")
    if active is None:
        active = sorted(int(i) for i in rng.generator.choice(p, size=q, replace=False))
    else:
        active = sorted(int(i) for i in active)
        if len(active) != q:
            raise ParameterError("len(active) must equal q")
    truth = np.zeros((p, m))
    for k in active:
        truth[k] = random_impulse_response(m, rng)
    inputs = np.vstack([generate_input(kind, n + m - 1, rng) for _ in range(p)])
    regs = RegressorSet.from_inputs(inputs, n, m)
    z = predict(regs, truth)
    sigma2 = float(np.var(z) / snr) if q > 0 else 1.0
    Y = z + np.sqrt(sigma2) * rng.normal(n)
    return NetworkDataset(
        inputs=inputs, outputs=Y, n=n, m=m, p=p, truth=truth, sigma2_true=sigma2,
        active_set=active, seed=rng.seed, input_kind=kind,
    )
