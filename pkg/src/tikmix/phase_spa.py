"""Joint phase estimation and LDPC decoding with Tikhonov-mixture phase messages.

Per symbol and direction the recursion multiplies the incoming mixture by the
observation factor (order grows by M), widens every component for the Wiener
step, and then reduces the order adaptively. ``barb_mode`` caps the order at one,
which gives the single-Tikhonov tracker used as a baseline.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import _kernels
from .channel import FrameConfig, ReceivedBlock, constellation
from .ldpc import (LdpcCode, bits_to_symbol_probs, decode_pass, symbol_probs_to_bit_llrs,
                   uniform_symbol_probs)
from .mixture import ReductionConfig, TikhonovMixture

# abstract (operations, table lookups) charged per primitive event
OP_COSTS = {
    _kernels.OPS_EXPAND: (7, 1),
    _kernels.OPS_CONVOLVE: (4, 1),
    _kernels.OPS_KL: (6, 1),
    _kernels.OPS_MERGE: (4, 1),
    _kernels.OPS_PU: (9, 2),
}


@dataclass(frozen=True)
class DetectorConfig:
    """Joint-loop schedule and reduction settings.

    ``sigma_delta`` is the receiver's model of the phase-increment deviation.
    ``early_exit=False`` keeps iterating after the syndrome clears, which is what
    per-iteration order statistics need.
    """

    reduction: ReductionConfig = field(default_factory=ReductionConfig)
    n_outer: int = 10
    n_inner_ldpc: int = 5
    barb_mode: bool = False
    sigma_delta: float = 0.1
    early_exit: bool = True

    def __post_init__(self):
        if self.n_outer < 1 or self.n_inner_ldpc < 1:
            raise ValueError("n_outer and n_inner_ldpc must be >= 1")
        if self.sigma_delta < 0:
            raise ValueError("sigma_delta must be >= 0")

    @property
    def effective_reduction(self) -> ReductionConfig:
        if self.barb_mode:
            return ReductionConfig(mu=math.inf, n_max=1, weighted=False)
        return self.reduction


@dataclass
class PhaseMessages:
    """Mixture messages for one direction, padded to ``n_max`` columns.

    Row ``k`` holds the message arriving at symbol ``k`` from the other side of
    the chain; only the first ``order[k]`` columns are meaningful.
    """

    z: np.ndarray
    log_weights: np.ndarray
    order: np.ndarray
    ops: np.ndarray

    def mixture(self, k: int) -> TikhonovMixture:
        n = self.order[k]
        return TikhonovMixture(self.z[k, :n], self.log_weights[k, :n])

    def __len__(self):
        return self.order.size


def observation_z(r, M: int, sigma2: float) -> np.ndarray:
    """``r_k * conj(c_m) / sigma2`` for every symbol and constellation point, shape (K, M)."""
    return np.asarray(r, dtype=np.complex128)[:, None] * np.conj(constellation(M))[None, :] / sigma2


def observation_expand(m: TikhonovMixture, log_pd_row, r_k: complex, sigma2: float) -> TikhonovMixture:
    """Product of a mixture with the soft observation factor of one symbol.

    Returns the order ``len(m) * M`` mixture (zero-probability symbols dropped),
    normalized.
    """
    log_pd_row = np.ascontiguousarray(log_pd_row, dtype=float)
    M = log_pd_row.size
    obs = observation_z(np.array([r_k]), M, sigma2)[0]
    n_out = len(m) * M
    out_z = np.empty(n_out, dtype=np.complex128)
    out_lw = np.empty(n_out)
    ops = np.zeros(_kernels.N_OPS, dtype=np.int64)
    n = _kernels.expand_into(np.ascontiguousarray(m.z), np.ascontiguousarray(m.log_weights), len(m),
                             log_pd_row, obs, out_z, out_lw, ops)
    return TikhonovMixture(out_z[:n], out_lw[:n])


def _run(obs_z, log_pd, cfg: DetectorConfig) -> PhaseMessages:
    red = cfg.effective_reduction
    K = obs_z.shape[0]
    n_max = int(red.n_max)
    z = np.zeros((K, n_max), dtype=np.complex128)
    lw = np.full((K, n_max), -np.inf)
    order = np.zeros(K, dtype=np.int64)
    ops = np.zeros(_kernels.N_OPS, dtype=np.int64)
    _kernels.recursion(np.ascontiguousarray(obs_z), np.ascontiguousarray(log_pd),
                       float(cfg.sigma_delta) ** 2, float(red.mu), n_max, bool(red.weighted),
                       float(red.protect_kl), float(red.prune_weight), z, lw, order, ops)
    return PhaseMessages(z, lw, order, ops)


def forward_pass(received: ReceivedBlock, log_pd, cfg: DetectorConfig, sigma2: float) -> PhaseMessages:
    """Forward messages; ``log_pd`` is the (K, M) table of log symbol priors."""
    log_pd = np.asarray(log_pd, dtype=float)
    obs = observation_z(received.r, log_pd.shape[1], sigma2)
    return _run(obs, log_pd, cfg)


def backward_pass(received: ReceivedBlock, log_pd, cfg: DetectorConfig, sigma2: float) -> PhaseMessages:
    """Backward messages, computed as the forward recursion of the time-reversed block."""
    log_pd = np.asarray(log_pd, dtype=float)
    obs = observation_z(received.r, log_pd.shape[1], sigma2)
    rev = _run(obs[::-1], log_pd[::-1], cfg)
    return PhaseMessages(rev.z[::-1].copy(), rev.log_weights[::-1].copy(), rev.order[::-1].copy(), rev.ops)


def compute_pu(forward: PhaseMessages, backward: PhaseMessages, r, sigma2: float, M: int):
    """Log upward symbol probabilities (K, M), each row normalized.

    Closed form of the integral of forward x backward x observation likelihood:
    every (forward, backward, symbol) triple contributes one Bessel term.
    """
    obs = observation_z(r, M, sigma2)
    out = np.empty(obs.shape)
    ops = np.zeros(_kernels.N_OPS, dtype=np.int64)
    _kernels.upward_rows(obs, forward.z, forward.log_weights, forward.order,
                         backward.z, backward.log_weights, backward.order, out, ops)
    return out, ops


def abstract_cost(ops) -> tuple:
    """(operations, table lookups) implied by an event-count vector."""
    ops_total = sum(OP_COSTS[i][0] * int(ops[i]) for i in OP_COSTS)
    lut_total = sum(OP_COSTS[i][1] * int(ops[i]) for i in OP_COSTS)
    return ops_total, lut_total


@dataclass
class FrameStats:
    """Per-frame diagnostics of the joint loop, one list entry per outer iteration."""

    gamma: List[float] = field(default_factory=list)
    gamma_forward: List[float] = field(default_factory=list)
    gamma_backward: List[float] = field(default_factory=list)
    order_hist: List[np.ndarray] = field(default_factory=list)
    ops_per_symbol_direction: List[float] = field(default_factory=list)
    lut_per_symbol_direction: List[float] = field(default_factory=list)
    ops_pu_per_symbol: List[float] = field(default_factory=list)
    syndrome_ok: bool = False
    iterations: int = 0
    decoder_iterations: int = 0


def _initial_log_pd(frame: FrameConfig):
    return uniform_symbol_probs(frame)


def joint_decode(received: ReceivedBlock, code: LdpcCode, frame: FrameConfig,
                 cfg: DetectorConfig, sigma2: Optional[float] = None):
    """Iterate phase-graph passes and LDPC decoding.

    Returns:
        (hard_bits, FrameStats). If no outer iteration clears the syndrome, the
        decision with the fewest unsatisfied checks is returned.
    """
    sigma2 = frame.sigma2 if sigma2 is None else sigma2
    if code.n != frame.n_data * frame.bits_per_symbol:
        raise ValueError("code length does not match the frame's data capacity")
    stats = FrameStats()
    n_max = int(cfg.effective_reduction.n_max)
    log_pd = _initial_log_pd(frame)
    best_bits, best_weight = None, None
    K = frame.K
    for it in range(cfg.n_outer):
        fwd = forward_pass(received, log_pd, cfg, sigma2)
        bwd = backward_pass(received, log_pd, cfg, sigma2)
        log_pu, pu_ops = compute_pu(fwd, bwd, received.r, sigma2, frame.M)
        llr_in = symbol_probs_to_bit_llrs(log_pu, frame)
        res = decode_pass(code, llr_in, cfg.n_inner_ldpc)

        stats.gamma_forward.append(float(fwd.order.mean()))
        stats.gamma_backward.append(float(bwd.order.mean()))
        stats.gamma.append(0.5 * (stats.gamma_forward[-1] + stats.gamma_backward[-1]))
        hist = np.bincount(np.concatenate([fwd.order, bwd.order]), minlength=n_max + 1)
        stats.order_hist.append(hist)
        ops, lut = abstract_cost(fwd.ops + bwd.ops)
        stats.ops_per_symbol_direction.append(ops / (2.0 * K))
        stats.lut_per_symbol_direction.append(lut / (2.0 * K))
        stats.ops_pu_per_symbol.append(abstract_cost(pu_ops)[0] / K)
        stats.iterations = it + 1
        stats.decoder_iterations += res.iterations

        weight = int(code.syndrome(res.hard_bits).sum())
        if best_weight is None or weight < best_weight:
            best_bits, best_weight = res.hard_bits, weight
        if res.syndrome_ok:
            stats.syndrome_ok = True
            best_bits = res.hard_bits
            if cfg.early_exit:
                break
        log_pd = bits_to_symbol_probs(res.extrinsic, frame)
    return best_bits, stats
