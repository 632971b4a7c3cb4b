"""Monte Carlo packet-error-rate experiments.

An experiment sweeps an SNR grid, simulates frames until either
``target_frame_errors`` frame errors or ``max_frames`` frames have been seen,
and aggregates error counts, per-iteration mixture orders and abstract
operation counts. Every frame draws from its own substream keyed by
``(seed, snr_index, frame_index)``, so results do not depend on the number of
worker processes.
"""

import csv
import io
import logging
import math
import os
import subprocess
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import beta

from . import __version__
from .channel import (RNG_ALGORITHM, FrameConfig, apply_channel, es_n0_to_eb_n0_db, frame_length,
                      frame_rng, generate_phase_path, modulate)
from .dp_baseline import dp_joint_decode
from .ldpc import LdpcCode, encode, load_alist
from .mixture import ReductionConfig
from .peg import peg_code
from .phase_spa import DetectorConfig, FrameStats, joint_decode

logger = logging.getLogger(__name__)

ALGORITHMS = ("multi_hyp", "dp", "barb")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run.

    ``frame.K`` and ``frame.es_n0_db`` are placeholders: the block length follows
    from the code and the pilot period, and the SNR from ``snr_grid_db``.
    ``code_source`` is an alist path or ``peg:n=...,rate=...,dv=...,seed=...``.
    """

    frame: FrameConfig = field(default_factory=FrameConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    algorithm: str = "multi_hyp"
    dp_levels: int = 8
    snr_grid_db: tuple = (5.0,)
    max_frames: int = 100000
    target_frame_errors: int = 100
    seed: int = 1
    code_source: str = "peg:n=1008,rate=0.75,dv=3,seed=1"
    threads: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must not be empty")
        if self.max_frames < 1 or self.target_frame_errors < 1:
            raise ConfigError("max_frames and target_frame_errors must be >= 1")
        if self.dp_levels < 2:
            raise ConfigError("dp_levels must be >= 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @property
    def effective_detector(self) -> DetectorConfig:
        if self.algorithm == "barb":
            return replace(self.detector, barb_mode=True)
        return self.detector


# ------------------------------------------------------------------ config text

# key -> (section, field name, parser)
def _parse_bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_int(text):
    return None if text.lower() in ("none", "0", "off") else int(text)


def _parse_float(text):
    return float(text)


def _parse_grid(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


_KEYS = {
    "M": ("frame", "M", int),
    "pilot_period": ("frame", "pilot_period", _parse_optional_int),
    "pilot_symbol_index": ("frame", "pilot_symbol_index", int),
    "sigma_delta": ("frame", "sigma_delta", _parse_float),
    "mu": ("reduction", "mu", _parse_float),
    "n_max": ("reduction", "n_max", int),
    "weighted_kl": ("reduction", "weighted", _parse_bool),
    "protect_kl": ("reduction", "protect_kl", _parse_float),
    "prune_weight": ("reduction", "prune_weight", _parse_float),
    "n_outer": ("detector", "n_outer", int),
    "n_inner_ldpc": ("detector", "n_inner_ldpc", int),
    "early_exit": ("detector", "early_exit", _parse_bool),
    "algorithm": ("top", "algorithm", str),
    "dp_levels": ("top", "dp_levels", int),
    "snr_grid_db": ("top", "snr_grid_db", _parse_grid),
    "max_frames": ("top", "max_frames", int),
    "target_frame_errors": ("top", "target_frame_errors", int),
    "seed": ("top", "seed", int),
    "code": ("top", "code_source", str),
    "threads": ("top", "threads", int),
}


def parse_config(text: str, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors.

    A relative alist path in ``code`` is resolved against ``base_dir``.
    """
    sections: Dict[str, dict] = {"frame": {}, "reduction": {}, "detector": {}, "top": {}}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        section, name, parse = _KEYS[key]
        try:
            sections[section][name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None

    top = sections["top"]
    src = top.get("code_source")
    if src and not src.startswith("peg:") and base_dir is not None and not os.path.isabs(src):
        top["code_source"] = str(Path(base_dir) / src)
    try:
        frame = FrameConfig(**sections["frame"])
        reduction = ReductionConfig(**sections["reduction"])
        detector = DetectorConfig(reduction=reduction, sigma_delta=frame.sigma_delta, **sections["detector"])
        return ExperimentConfig(frame=frame, detector=detector, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`; a stable echo for run metadata."""
    values = {
        "M": cfg.frame.M,
        "pilot_period": cfg.frame.pilot_period if cfg.frame.pilot_period is not None else "none",
        "pilot_symbol_index": cfg.frame.pilot_symbol_index,
        "sigma_delta": repr(cfg.frame.sigma_delta),
        "mu": repr(cfg.detector.reduction.mu),
        "n_max": cfg.detector.reduction.n_max,
        "weighted_kl": str(cfg.detector.reduction.weighted).lower(),
        "protect_kl": repr(cfg.detector.reduction.protect_kl),
        "prune_weight": repr(cfg.detector.reduction.prune_weight),
        "n_outer": cfg.detector.n_outer,
        "n_inner_ldpc": cfg.detector.n_inner_ldpc,
        "early_exit": str(cfg.detector.early_exit).lower(),
        "algorithm": cfg.algorithm,
        "dp_levels": cfg.dp_levels,
        "snr_grid_db": ", ".join(repr(float(s)) for s in cfg.snr_grid_db),
        "max_frames": cfg.max_frames,
        "target_frame_errors": cfg.target_frame_errors,
        "seed": cfg.seed,
        "code": cfg.code_source,
        "threads": cfg.threads,
    }
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def load_code(source: str) -> LdpcCode:
    """Build a code from ``peg:n=..,rate=..,dv=..,seed=..`` or read an alist file."""
    if source.startswith("peg:"):
        params = {"n": "1008", "rate": "0.75", "dv": "3", "seed": "1"}
        for item in filter(None, source[4:].split(",")):
            k, _, v = item.partition("=")
            if k.strip() not in params:
                raise ConfigError(f"unknown PEG parameter {k!r}")
            params[k.strip()] = v.strip()
        return peg_code(int(params["n"]), float(params["rate"]), int(params["dv"]), int(params["seed"]))
    try:
        return load_alist(Path(source).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read code {source!r}: {exc}") from None


def frame_for(cfg: ExperimentConfig, code: LdpcCode, es_n0_db: float) -> FrameConfig:
    b = cfg.frame.bits_per_symbol
    if code.n % b:
        raise ConfigError(f"code length {code.n} is not a multiple of {b} bits per symbol")
    K = frame_length(code.n // b, cfg.frame.pilot_period)
    return replace(cfg.frame, K=K, es_n0_db=es_n0_db, seed=cfg.seed)


# ------------------------------------------------------------------ statistics

@dataclass
class PointStats:
    """Aggregates for one SNR point. Per-iteration lists are indexed by outer iteration."""

    snr_db: float
    eb_n0_db: float
    frames: int = 0
    frame_errors: int = 0
    bit_errors: int = 0
    info_bits: int = 0
    frame_exceptions: int = 0
    iteration_frames: List[int] = field(default_factory=list)
    gamma_sum: List[float] = field(default_factory=list)
    gamma_forward_sum: List[float] = field(default_factory=list)
    gamma_backward_sum: List[float] = field(default_factory=list)
    ops_sum: List[float] = field(default_factory=list)
    lut_sum: List[float] = field(default_factory=list)
    order_hist: List[np.ndarray] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def per(self) -> float:
        return self.frame_errors / self.frames if self.frames else math.nan

    @property
    def ber(self) -> float:
        return self.bit_errors / self.info_bits if self.info_bits else math.nan

    @property
    def per_upper95(self) -> float:
        """One-sided 95% Clopper-Pearson upper bound on the PER."""
        if self.frames == 0:
            return math.nan
        if self.frame_errors >= self.frames:
            return 1.0
        return float(beta.ppf(0.95, self.frame_errors + 1, self.frames - self.frame_errors))

    @property
    def gamma(self) -> List[float]:
        return [s / n for s, n in zip(self.gamma_sum, self.iteration_frames)]

    @property
    def gamma_forward(self) -> List[float]:
        return [s / n for s, n in zip(self.gamma_forward_sum, self.iteration_frames)]

    @property
    def gamma_backward(self) -> List[float]:
        return [s / n for s, n in zip(self.gamma_backward_sum, self.iteration_frames)]

    @property
    def ops_per_symbol(self) -> List[float]:
        return [s / n for s, n in zip(self.ops_sum, self.iteration_frames)]

    @property
    def lut_per_symbol(self) -> List[float]:
        return [s / n for s, n in zip(self.lut_sum, self.iteration_frames)]

    def add(self, frame_error: bool, bit_errors: int, info_bits: int, st: Optional[FrameStats]):
        self.frames += 1
        self.frame_errors += int(frame_error)
        self.bit_errors += int(bit_errors)
        self.info_bits += int(info_bits)
        if st is None:
            self.frame_exceptions += 1
            return
        for i, g in enumerate(st.gamma):
            if i == len(self.iteration_frames):
                self.iteration_frames.append(0)
                for lst in (self.gamma_sum, self.gamma_forward_sum, self.gamma_backward_sum,
                            self.ops_sum, self.lut_sum):
                    lst.append(0.0)
                self.order_hist.append(np.zeros(0, dtype=np.int64))
            self.iteration_frames[i] += 1
            self.gamma_sum[i] += g
            self.gamma_forward_sum[i] += st.gamma_forward[i]
            self.gamma_backward_sum[i] += st.gamma_backward[i]
            self.ops_sum[i] += st.ops_per_symbol_direction[i]
            self.lut_sum[i] += st.lut_per_symbol_direction[i]
            h = st.order_hist[i]
            acc = self.order_hist[i]
            if acc.size < h.size:
                acc = np.concatenate([acc, np.zeros(h.size - acc.size, dtype=np.int64)])
            acc[:h.size] += h
            self.order_hist[i] = acc


@dataclass
class TrialStats:
    config: ExperimentConfig
    points: List[PointStats] = field(default_factory=list)
    code_n: int = 0
    code_k: int = 0
    frame_K: int = 0


# ------------------------------------------------------------------ frames

@dataclass(frozen=True)
class FrameOutcome:
    frame_error: bool
    bit_errors: int
    info_bits: int
    stats: Optional[FrameStats]


def simulate_frame(cfg: ExperimentConfig, code: LdpcCode, frame: FrameConfig,
                   snr_index: int, frame_index: int) -> FrameOutcome:
    """Transmit and decode one frame drawn from substream ``(seed, snr_index, frame_index)``."""
    rng = frame_rng(cfg.seed, snr_index, frame_index)
    info = rng.integers(0, 2, code.k, dtype=np.uint8)
    codeword = encode(info, code)
    theta = generate_phase_path(frame, rng)
    received = apply_channel(modulate(codeword, frame), theta, frame, rng)
    try:
        if cfg.algorithm == "dp":
            bits, st = dp_joint_decode(received, code, frame, cfg.dp_levels, cfg.detector)
        else:
            bits, st = joint_decode(received, code, frame, cfg.effective_detector)
    except Exception:
        logger.exception("frame %d at SNR index %d failed", frame_index, snr_index)
        return FrameOutcome(True, code.k, code.k, None)
    errs = int(np.count_nonzero(bits[code.info_positions] != info))
    frame_error = bool(np.any(bits != codeword))
    return FrameOutcome(frame_error, errs, code.k, st)


_WORKER = {}


def _worker_init(cfg, code):
    _WORKER["cfg"] = cfg
    _WORKER["code"] = code


def _worker_frame(args):
    frame, snr_index, frame_index = args
    return simulate_frame(_WORKER["cfg"], _WORKER["code"], frame, snr_index, frame_index)


def run_point(cfg: ExperimentConfig, code: LdpcCode, snr_index: int, pool=None) -> PointStats:
    snr = float(cfg.snr_grid_db[snr_index])
    frame = frame_for(cfg, code, snr)
    point = PointStats(snr_db=snr, eb_n0_db=es_n0_to_eb_n0_db(snr, frame.bits_per_symbol, code.rate))
    start = time.perf_counter()
    next_index = 0
    batch = cfg.threads if pool is not None else 1
    while point.frames < cfg.max_frames and point.frame_errors < cfg.target_frame_errors:
        count = min(batch, cfg.max_frames - next_index)
        jobs = [(frame, snr_index, next_index + j) for j in range(count)]
        next_index += count
        if pool is None:
            outcomes = [simulate_frame(cfg, code, *job) for job in jobs]
        else:
            outcomes = pool.map(_worker_frame, jobs)
        for out in outcomes:
            # frames finished past the stopping point are discarded, so the
            # aggregate matches a sequential run exactly
            if point.frames >= cfg.max_frames or point.frame_errors >= cfg.target_frame_errors:
                break
            point.add(out.frame_error, out.bit_errors, out.info_bits,
                      out.stats if cfg.algorithm != "dp" or out.stats is None else _strip_orders(out.stats))
    point.wall_time = time.perf_counter() - start
    logger.info("SNR %.2f dB: %d/%d frame errors, PER %.3g", snr, point.frame_errors, point.frames, point.per)
    return point


def _strip_orders(st: FrameStats) -> FrameStats:
    return FrameStats(syndrome_ok=st.syndrome_ok, iterations=st.iterations,
                      decoder_iterations=st.decoder_iterations)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> TrialStats:
    """Run every SNR point; write CSVs to ``out_dir`` when given."""
    code = load_code(cfg.code_source)
    frame = frame_for(cfg, code, cfg.snr_grid_db[0])
    stats = TrialStats(config=cfg, code_n=code.n, code_k=code.k, frame_K=frame.K)
    pool = None
    if cfg.threads > 1:
        import multiprocessing

        pool = multiprocessing.get_context("spawn").Pool(cfg.threads, _worker_init, (cfg, code))
    try:
        for i in range(len(cfg.snr_grid_db)):
            stats.points.append(run_point(cfg, code, i, pool))
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    if out_dir is not None:
        emit_report(stats, out_dir)
    return stats


# ------------------------------------------------------------------ complexity

def complexity_model(M: int, gamma: float):
    """(operations, table lookups) per code symbol per iteration of the mixture algorithm."""
    if M < 2 or gamma < 1:
        raise ValueError("need M >= 2 and gamma >= 1")
    return M * gamma * (11 + 5 * gamma) + M, M * gamma * (6 + gamma)


def complexity_model_dp(M: int, L: int, Q: float):
    """(operations, table lookups) per code symbol per iteration of the discrete-phase algorithm."""
    if M < 1 or L < 1 or Q <= 0:
        raise ValueError("M, L and Q must be positive")
    return 13 * M * L + 10 * Q * L - 9 * L - 3 * M, 3 * M * L + 2 * Q * L - 3 * L - M


# ------------------------------------------------------------------ reports

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _write_csv(path: Path, header: Sequence[str], rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def version_string() -> str:
    here = Path(__file__).resolve().parent
    try:
        desc = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                              capture_output=True, text=True, timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def emit_report(stats: TrialStats, path) -> List[Path]:
    """Write ``per_curve.csv``, ``gamma.csv``, ``order_hist.csv`` and ``run_meta.txt``.

    CSV content depends only on the aggregate counts, so repeated emission of
    the same statistics is byte-identical.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    M = stats.config.frame.M

    per_rows = [(p.snr_db, p.per, p.ber, p.frames, p.frame_errors, p.bit_errors, p.eb_n0_db, p.per_upper95)
                for p in stats.points]
    gamma_rows, hist_rows = [], []
    for p in stats.points:
        for i, g in enumerate(p.gamma):
            ops_model, lut_model = complexity_model(M, max(g, 1.0))
            gamma_rows.append((p.snr_db, i + 1, g, p.gamma_forward[i], p.gamma_backward[i],
                               p.iteration_frames[i], p.ops_per_symbol[i], p.lut_per_symbol[i],
                               ops_model, lut_model))
            for order, count in enumerate(p.order_hist[i]):
                if order >= 1:
                    hist_rows.append((p.snr_db, i + 1, order, int(count)))

    files = [out / "per_curve.csv", out / "gamma.csv", out / "order_hist.csv"]
    _write_csv(files[0], ["snr_db", "per", "ber", "frames", "errors", "bit_errors", "eb_n0_db", "per_upper95"],
               per_rows)
    _write_csv(files[1], ["snr_db", "iteration", "mean_order", "mean_order_forward", "mean_order_backward",
                          "frames", "ops_per_symbol", "lut_per_symbol", "model_ops", "model_lut"], gamma_rows)
    _write_csv(files[2], ["snr_db", "iteration", "order", "count"], hist_rows)

    meta = io.StringIO()
    meta.write(f"# tikmix {version_string()}\n")
    meta.write(f"# rng: {RNG_ALGORITHM}\n")
    meta.write("# snr axis: Es/N0 dB with N0 = 2 sigma^2; eb_n0_db column adds the code-rate conversion\n")
    meta.write(f"# code: n={stats.code_n} k={stats.code_k}; frame K={stats.frame_K} symbols\n")
    meta.write(format_config(stats.config))
    files.append(out / "run_meta.txt")
    files[-1].write_text(meta.getvalue(), encoding="utf-8")
    return files
