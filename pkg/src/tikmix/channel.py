"""MPSK modulation, pilot insertion, Wiener phase noise and AWGN."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence(entropy=seed, spawn_key=...)"


@dataclass(frozen=True)
class FrameConfig:
    """Frame layout and channel parameters.

    Pilots sit at symbol indices ``0, pilot_period, 2*pilot_period, ...``;
    ``pilot_period=None`` means no pilots at all. Noise uses Es/N0 = 1/(2 sigma^2)
    with unit symbol energy.
    """

    M: int = 4
    K: int = 64
    pilot_period: Optional[int] = 60
    pilot_symbol_index: int = 0
    sigma_delta: float = 0.1
    es_n0_db: float = 4.5
    seed: int = 0

    def __post_init__(self):
        if self.M < 2 or self.M & (self.M - 1):
            raise ValueError(f"M must be a power of two >= 2, got {self.M}")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.pilot_period is not None and self.pilot_period < 1:
            raise ValueError("pilot_period must be a positive integer or None")
        if not 0 <= self.pilot_symbol_index < self.M:
            raise ValueError("pilot_symbol_index out of range")
        if self.sigma_delta < 0:
            raise ValueError("sigma_delta must be >= 0")

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.M))

    @property
    def sigma2(self) -> float:
        return es_n0_to_sigma2(self.es_n0_db)

    @property
    def pilot_mask(self) -> np.ndarray:
        mask = np.zeros(self.K, dtype=bool)
        if self.pilot_period is not None:
            mask[:: self.pilot_period] = True
        return mask

    @property
    def n_data(self) -> int:
        return int(self.K - self.pilot_mask.sum())


@dataclass(frozen=True)
class ReceivedBlock:
    r: np.ndarray
    pilot_mask: np.ndarray
    # diagnostics only; detectors never read this
    true_theta: Optional[np.ndarray] = None


def es_n0_to_sigma2(es_n0_db: float) -> float:
    """Per-dimension noise variance for unit-energy symbols."""
    return 1.0 / (2.0 * 10.0 ** (es_n0_db / 10.0))


def es_n0_to_eb_n0_db(es_n0_db: float, bits_per_symbol: int, rate: float) -> float:
    return es_n0_db - 10.0 * math.log10(bits_per_symbol * rate)


def frame_length(n_data: int, pilot_period: Optional[int]) -> int:
    """Smallest K whose data positions number exactly ``n_data``."""
    if pilot_period is None:
        return n_data
    if pilot_period == 1:
        raise ValueError("pilot_period=1 leaves no room for data")
    k = n_data + (n_data + pilot_period - 2) // (pilot_period - 1)
    while k - (k + pilot_period - 1) // pilot_period > n_data:
        k -= 1
    while k - (k + pilot_period - 1) // pilot_period < n_data:
        k += 1
    return k


def gray_labels(M: int) -> np.ndarray:
    """Bit labels (MSB first) of constellation points ``exp(j 2 pi m / M)``, shape (M, log2 M)."""
    b = int(math.log2(M))
    g = np.arange(M) ^ (np.arange(M) >> 1)
    return ((g[:, None] >> np.arange(b - 1, -1, -1)) & 1).astype(np.uint8)


def constellation(M: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(M) / M)


def bits_to_indices(bits, M: int) -> np.ndarray:
    b = int(math.log2(M))
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1, b)
    label_value = bits @ (1 << np.arange(b - 1, -1, -1))
    # inverse Gray: position m whose label equals label_value
    lookup = np.empty(M, dtype=np.int64)
    lookup[gray_labels(M) @ (1 << np.arange(b - 1, -1, -1))] = np.arange(M)
    return lookup[label_value]


def symbol_indices(bits, cfg: FrameConfig) -> np.ndarray:
    """Constellation index per symbol, pilots included."""
    bits = np.asarray(bits)
    need = cfg.bits_per_symbol * cfg.n_data
    if bits.size != need:
        raise ValueError(f"expected {need} bits for {cfg.n_data} data symbols, got {bits.size}")
    idx = np.full(cfg.K, cfg.pilot_symbol_index, dtype=np.int64)
    idx[~cfg.pilot_mask] = bits_to_indices(bits, cfg.M)
    return idx


def modulate(bits, cfg: FrameConfig) -> np.ndarray:
    """Gray-mapped unit-energy MPSK symbols with pilots inserted."""
    return constellation(cfg.M)[symbol_indices(bits, cfg)]


def generate_phase_path(cfg: FrameConfig, rng: np.random.Generator) -> np.ndarray:
    """Wiener phase: uniform start, Gaussian increments; wrapped to [0, 2 pi)."""
    theta0 = rng.uniform(0.0, 2 * np.pi)
    steps = rng.normal(0.0, cfg.sigma_delta, size=cfg.K - 1) if cfg.sigma_delta > 0 else np.zeros(cfg.K - 1)
    path = theta0 + np.concatenate(([0.0], np.cumsum(steps)))
    return np.mod(path, 2 * np.pi)


def apply_channel(symbols, theta_path, cfg: FrameConfig, rng: np.random.Generator) -> ReceivedBlock:
    symbols = np.asarray(symbols, dtype=np.complex128)
    theta_path = np.asarray(theta_path, dtype=float)
    if symbols.shape != theta_path.shape:
        raise ValueError("symbols and phase path must have equal length")
    sigma = math.sqrt(cfg.sigma2)
    noise = sigma * (rng.standard_normal(symbols.size) + 1j * rng.standard_normal(symbols.size))
    r = symbols * np.exp(1j * theta_path) + noise
    return ReceivedBlock(r=r, pilot_mask=cfg.pilot_mask, true_theta=theta_path)


def frame_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the substream identified by ``key``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))
