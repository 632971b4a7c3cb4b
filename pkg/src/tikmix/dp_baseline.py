"""Discrete-phase (DP) message passing: the phase is quantized to ``L`` levels and
the forward/backward recursions become circular convolutions on that grid.

With large ``L`` this is the numerical reference for the mixture algorithm;
with ``L=8`` it is the low-resolution comparison point.
"""

from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np
from scipy.special import logsumexp

from .channel import FrameConfig, ReceivedBlock, constellation
from .dirstat import wrapped_gaussian_pdf
from .ldpc import LdpcCode, bits_to_symbol_probs, decode_pass, symbol_probs_to_bit_llrs, uniform_symbol_probs
from .phase_spa import DetectorConfig

DIRECT_CONVOLUTION_MAX_L = 64


def build_transition_kernel(L: int, sigma_delta: float) -> np.ndarray:
    """Wrapped-Gaussian increment density sampled at ``2 pi d / L``, normalized to sum 1."""
    if L < 2:
        raise ValueError("L must be >= 2")
    if sigma_delta < 0:
        raise ValueError("sigma_delta must be >= 0")
    if sigma_delta == 0:
        kernel = np.zeros(L)
        kernel[0] = 1.0
        return kernel
    kernel = wrapped_gaussian_pdf(2 * np.pi * np.arange(L) / L, sigma_delta)
    kernel = 0.5 * (kernel + np.roll(kernel[::-1], 1))
    return kernel / kernel.sum()


def circular_convolve(v, kernel, method: Optional[str] = None) -> np.ndarray:
    """``out[l] = sum_d kernel[d] * v[(l - d) mod L]`` along the last axis."""
    v = np.asarray(v, dtype=float)
    L = kernel.size
    if method is None:
        method = "direct" if L <= DIRECT_CONVOLUTION_MAX_L else "fft"
    if method == "direct":
        idx = (np.arange(L)[:, None] - np.arange(L)[None, :]) % L
        return v @ kernel[idx].T
    out = np.fft.irfft(np.fft.rfft(v, axis=-1) * np.fft.rfft(kernel), n=L, axis=-1)
    return np.maximum(out, 0.0)


@dataclass
class DiscretePhaseMessages:
    """Log probabilities over the ``L`` grid phases ``2 pi l / L``, one row per symbol."""

    forward: np.ndarray
    backward: np.ndarray

    @property
    def L(self):
        return self.forward.shape[1]


def grid_log_likelihood(r, M: int, sigma2: float, L: int) -> np.ndarray:
    """``Re[r_k conj(c_m) exp(-j theta_l)] / sigma2``, shape (K, M, L)."""
    theta = 2 * np.pi * np.arange(L) / L
    obs = np.asarray(r)[:, None] * np.conj(constellation(M))[None, :] / sigma2
    return np.real(obs[:, :, None] * np.exp(-1j * theta)[None, None, :])


@nb.njit(cache=True)
def _recurse_direct(log_pd_grid, kernel):
    K, L = log_pd_grid.shape
    out = np.empty((K, L))
    v = np.empty(L)
    w = np.empty(L)
    out[0, :] = -np.log(L)
    for k in range(1, K):
        hi = -np.inf
        for l in range(L):
            v[l] = out[k - 1, l] + log_pd_grid[k - 1, l]
            hi = max(hi, v[l])
        for l in range(L):
            v[l] = np.exp(v[l] - hi)
        total = 0.0
        for l in range(L):
            acc = 0.0
            for d in range(L):
                acc += kernel[d] * v[(l - d) % L]
            w[l] = acc
            total += acc
        for l in range(L):
            out[k, l] = np.log(w[l] / total) if w[l] > 0.0 else -np.inf
    return out


def _recurse(log_pd_grid, kernel):
    K, L = log_pd_grid.shape
    if L <= DIRECT_CONVOLUTION_MAX_L:
        return _recurse_direct(np.ascontiguousarray(log_pd_grid), kernel)
    out = np.empty((K, L))
    out[0] = -np.log(L)
    for k in range(1, K):
        v = out[k - 1] + log_pd_grid[k - 1]
        hi = v.max()
        with np.errstate(divide="ignore"):
            w = np.log(circular_convolve(np.exp(v - hi), kernel))
        out[k] = w - logsumexp(w)
    return out


def dp_messages(received: ReceivedBlock, log_pd, L: int, sigma2: float, sigma_delta: float):
    log_pd = np.asarray(log_pd, dtype=float)
    ll = grid_log_likelihood(received.r, log_pd.shape[1], sigma2, L)
    log_pd_grid = logsumexp(log_pd[:, :, None] + ll, axis=1)
    kernel = build_transition_kernel(L, sigma_delta)
    fwd = _recurse(log_pd_grid, kernel)
    bwd = _recurse(log_pd_grid[::-1], kernel)[::-1]
    return DiscretePhaseMessages(fwd, bwd), ll


def dp_forward_backward(received: ReceivedBlock, log_pd, L: int, sigma2: float, sigma_delta: float):
    """Log upward symbol probabilities (K, M) from grid forward/backward recursions."""
    msgs, ll = dp_messages(received, log_pd, L, sigma2, sigma_delta)
    rows = logsumexp((msgs.forward + msgs.backward)[:, None, :] + ll, axis=2)
    return rows - logsumexp(rows, axis=1, keepdims=True)


def dp_joint_decode(received: ReceivedBlock, code: LdpcCode, frame: FrameConfig, L: int,
                    schedule: DetectorConfig, sigma2: Optional[float] = None):
    """Same outer loop as :func:`tikmix.phase_spa.joint_decode` with grid messages.

    Returns:
        (hard_bits, FrameStats) where the order statistics are absent.
    """
    from .phase_spa import FrameStats

    sigma2 = frame.sigma2 if sigma2 is None else sigma2
    stats = FrameStats()
    log_pd = uniform_symbol_probs(frame)
    best_bits, best_weight = None, None
    for it in range(schedule.n_outer):
        log_pu = dp_forward_backward(received, log_pd, L, sigma2, schedule.sigma_delta)
        res = decode_pass(code, symbol_probs_to_bit_llrs(log_pu, frame), schedule.n_inner_ldpc)
        stats.iterations = it + 1
        stats.decoder_iterations += res.iterations
        weight = int(code.syndrome(res.hard_bits).sum())
        if best_weight is None or weight < best_weight:
            best_bits, best_weight = res.hard_bits, weight
        if res.syndrome_ok:
            stats.syndrome_ok = True
            best_bits = res.hard_bits
            if schedule.early_exit:
                break
        log_pd = bits_to_symbol_probs(res.extrinsic, frame)
    return best_bits, stats
