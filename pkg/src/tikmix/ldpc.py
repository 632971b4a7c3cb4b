"""LDPC codes: alist ingestion, systematic encoding, sum-product decoding and the
bit/symbol soft-information conversions between the decoder and the phase graph.

LLR convention: ``ln P(bit=0) - ln P(bit=1)``, positive favours 0.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .channel import FrameConfig, gray_labels

LLR_CLIP = 50.0


class AlistError(ValueError):
    """Malformed alist text; the message carries the offending line number."""


class NotEncodableError(ValueError):
    pass


@dataclass
class LdpcCode:
    """Parity-check structure plus a systematic encoder.

    ``checks[e], variables[e]`` list the edges of H sorted by check then variable.
    Information bits occupy ``info_positions`` of every codeword; the remaining
    ``parity_positions`` are solved from H in reduced row-echelon form.
    """

    n: int
    m: int
    checks: np.ndarray
    variables: np.ndarray
    info_positions: np.ndarray = field(init=False, repr=False)
    parity_positions: np.ndarray = field(init=False, repr=False)
    _parity_map: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        order = np.lexsort((self.variables, self.checks))
        self.checks = np.asarray(self.checks, dtype=np.int64)[order]
        self.variables = np.asarray(self.variables, dtype=np.int64)[order]
        if self.checks.size and (self.checks.min() < 0 or self.checks.max() >= self.m
                                 or self.variables.min() < 0 or self.variables.max() >= self.n):
            raise ValueError("edge index out of range")
        pairs = self.checks * self.n + self.variables
        if np.unique(pairs).size != pairs.size:
            raise ValueError("duplicate edge in parity-check structure")
        if np.any(np.bincount(self.variables, minlength=self.n) == 0):
            raise ValueError("every variable node needs at least one check")
        self._build_encoder()

    @classmethod
    def from_dense(cls, H):
        H = np.asarray(H)
        c, v = np.nonzero(H)
        return cls(n=H.shape[1], m=H.shape[0], checks=c, variables=v)

    @property
    def k(self) -> int:
        return self.info_positions.size

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def edges(self) -> int:
        return self.checks.size

    def dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        H[self.checks, self.variables] = 1
        return H

    def variable_degrees(self):
        return np.bincount(self.variables, minlength=self.n)

    def check_degrees(self):
        return np.bincount(self.checks, minlength=self.m)

    def syndrome(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        return np.bincount(self.checks, weights=bits[self.variables], minlength=self.m).astype(np.int64) % 2

    def _build_encoder(self):
        A = self.dense().astype(bool)
        pivots = []
        row = 0
        for col in range(self.n):
            if row == self.m:
                break
            hit = np.flatnonzero(A[row:, col])
            if hit.size == 0:
                continue
            p = row + hit[0]
            if p != row:
                A[[row, p]] = A[[p, row]]
            others = np.flatnonzero(A[:, col])
            others = others[others != row]
            A[others] ^= A[row]
            pivots.append(col)
            row += 1
        if row == 0:
            raise NotEncodableError("parity-check matrix has rank 0")
        pivots = np.array(pivots, dtype=np.int64)
        free = np.setdiff1d(np.arange(self.n), pivots)
        self.parity_positions = pivots
        self.info_positions = free
        self._parity_map = A[:row][:, free].astype(np.uint8)


def encode(info_bits, code: LdpcCode) -> np.ndarray:
    """Systematic codeword with ``info_bits`` at ``code.info_positions``."""
    u = np.asarray(info_bits, dtype=np.uint8)
    if u.shape != (code.k,):
        raise ValueError(f"expected {code.k} information bits, got {u.shape}")
    c = np.zeros(code.n, dtype=np.uint8)
    c[code.info_positions] = u
    c[code.parity_positions] = (code._parity_map.astype(np.int64) @ u) % 2
    return c


# ---------------------------------------------------------------- alist I/O

def _int_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        try:
            yield lineno, [int(t) for t in tokens]
        except ValueError:
            raise AlistError(f"line {lineno}: non-integer token in {raw.strip()!r}") from None


def load_alist(text: str) -> LdpcCode:
    """Parse MacKay's alist format (1-indexed, zero padding allowed)."""
    lines = list(_int_lines(text))
    if len(lines) < 4:
        raise AlistError(f"line {lines[-1][0] if lines else 1}: truncated header")

    def expect(i, count, what):
        lineno, vals = lines[i]
        if len(vals) != count:
            raise AlistError(f"line {lineno}: expected {count} values for {what}, got {len(vals)}")
        return vals

    n, m = expect(0, 2, "'n m'")
    if n < 1 or m < 1:
        raise AlistError(f"line {lines[0][0]}: n and m must be positive")
    max_col, max_row = expect(1, 2, "maximum degrees")
    col_deg = expect(2, n, "column degrees")
    row_deg = expect(3, m, "row degrees")
    if len(lines) < 4 + n + m:
        raise AlistError(f"line {lines[-1][0]}: expected {n + m} adjacency lines, found {len(lines) - 4}")
    if max(col_deg) != max_col or max(row_deg) != max_row:
        raise AlistError(f"line {lines[1][0]}: maximum degrees disagree with degree lists")

    def adjacency(first, count, degrees, bound, what):
        out = []
        for j in range(count):
            lineno, vals = lines[first + j]
            d = degrees[j]
            if len(vals) < d or any(v != 0 for v in vals[d:]):
                raise AlistError(f"line {lineno}: {what} {j + 1} should list {d} indices")
            idx = vals[:d]
            if any(v < 1 or v > bound for v in idx):
                raise AlistError(f"line {lineno}: index out of range 1..{bound} in {what} {j + 1}")
            if len(set(idx)) != d:
                raise AlistError(f"line {lineno}: repeated index in {what} {j + 1}")
            out.append([v - 1 for v in idx])
        return out

    var_adj = adjacency(4, n, col_deg, m, "variable")
    chk_adj = adjacency(4 + n, m, row_deg, n, "check")
    from_vars = {(c, v) for v, cs in enumerate(var_adj) for c in cs}
    from_chks = {(c, v) for c, vs in enumerate(chk_adj) for v in vs}
    if from_vars != from_chks:
        raise AlistError(f"line {lines[4 + n][0]}: check lists disagree with variable lists")
    if any(d == 0 for d in col_deg):
        raise AlistError(f"line {lines[2][0]}: variable of degree 0")
    edges = np.array(sorted(from_vars), dtype=np.int64).reshape(-1, 2)
    return LdpcCode(n=n, m=m, checks=edges[:, 0], variables=edges[:, 1])


def write_alist(code: LdpcCode, pad: bool = True) -> str:
    col_deg = code.variable_degrees()
    row_deg = code.check_degrees()
    var_adj = [[] for _ in range(code.n)]
    chk_adj = [[] for _ in range(code.m)]
    for c, v in zip(code.checks.tolist(), code.variables.tolist()):
        var_adj[v].append(c + 1)
        chk_adj[c].append(v + 1)

    def row(vals, width):
        vals = sorted(vals) + ([0] * (width - len(vals)) if pad else [])
        return " ".join(map(str, vals))

    out = [f"{code.n} {code.m}", f"{col_deg.max()} {row_deg.max()}",
           " ".join(map(str, col_deg)), " ".join(map(str, row_deg))]
    out += [row(a, col_deg.max()) for a in var_adj]
    out += [row(a, row_deg.max()) for a in chk_adj]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- decoding

class DecodeResult(NamedTuple):
    extrinsic: np.ndarray
    hard_bits: np.ndarray
    syndrome_ok: bool
    iterations: int


def _log_abs_tanh_half(x):
    a = np.abs(x)
    with np.errstate(divide="ignore"):
        return np.log1p(-np.exp(-a)) - np.log1p(np.exp(-a))


def decode_pass(code: LdpcCode, bit_llrs, n_iters: int) -> DecodeResult:
    """Flooding sum-product decoding with the tanh rule at the checks.

    Returns extrinsic LLRs (posterior minus channel input), hard decisions and
    whether the syndrome vanished. Stops at the first zero syndrome, including
    before any iteration when the input already is a codeword.
    """
    llr = np.clip(np.asarray(bit_llrs, dtype=float), -LLR_CLIP, LLR_CLIP)
    if llr.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got {llr.shape}")
    ch, var = code.checks, code.variables
    hard = (llr < 0).astype(np.uint8)
    ext = np.zeros(code.n)
    if not code.syndrome(hard).any():
        return DecodeResult(ext, hard, True, 0)

    v2c = llr[var]
    it = 0
    for it in range(1, n_iters + 1):
        log_mag = _log_abs_tanh_half(v2c)
        zero = np.isneginf(log_mag)
        finite_mag = np.where(zero, 0.0, log_mag)
        row_sum = np.bincount(ch, weights=finite_mag, minlength=code.m)
        row_zeros = np.bincount(ch, weights=zero, minlength=code.m)
        neg = v2c < 0
        row_neg = np.bincount(ch, weights=neg, minlength=code.m).astype(np.int64)

        loo = row_sum[ch] - finite_mag
        has_zero = (row_zeros[ch] - zero) > 0
        # 2 atanh(exp(loo)) = log((1 + p) / (1 - p)), p = exp(loo)
        with np.errstate(divide="ignore"):
            mag = np.log1p(np.exp(loo)) - np.log(-np.expm1(loo))
        mag = np.where(has_zero, 0.0, np.minimum(mag, LLR_CLIP))
        sign = 1 - 2 * ((row_neg[ch] - neg) % 2)
        c2v = sign * mag

        ext = np.bincount(var, weights=c2v, minlength=code.n)
        total = np.clip(llr + ext, -LLR_CLIP, LLR_CLIP)
        hard = (total < 0).astype(np.uint8)
        if not code.syndrome(hard).any():
            return DecodeResult(np.clip(ext, -LLR_CLIP, LLR_CLIP), hard, True, it)
        v2c = np.clip(total[var] - c2v, -LLR_CLIP, LLR_CLIP)
    return DecodeResult(np.clip(ext, -LLR_CLIP, LLR_CLIP), hard, False, it)


# ---------------------------------------------------------------- soft info

def bits_to_symbol_probs(bit_llrs, cfg: FrameConfig) -> np.ndarray:
    """Log symbol probabilities (K, M) from bit LLRs of the data symbols.

    Pilot rows are a point mass on the pilot symbol.
    """
    b = cfg.bits_per_symbol
    llr = np.asarray(bit_llrs, dtype=float).reshape(-1, b)
    if llr.shape[0] != cfg.n_data:
        raise ValueError(f"expected {cfg.n_data * b} LLRs, got {llr.size}")
    log_p0 = -np.logaddexp(0.0, -llr)
    log_p1 = -np.logaddexp(0.0, llr)
    labels = gray_labels(cfg.M)
    # (n_data, M): sum over bits of log P(bit = label bit)
    rows = np.where(labels[None, :, :] == 0, log_p0[:, None, :], log_p1[:, None, :]).sum(axis=-1)
    rows -= logsumexp(rows, axis=1, keepdims=True)
    out = np.full((cfg.K, cfg.M), -np.inf)
    out[~cfg.pilot_mask] = rows
    out[cfg.pilot_mask, cfg.pilot_symbol_index] = 0.0
    return out


def uniform_symbol_probs(cfg: FrameConfig) -> np.ndarray:
    return bits_to_symbol_probs(np.zeros(cfg.n_data * cfg.bits_per_symbol), cfg)


def symbol_probs_to_bit_llrs(log_pu, cfg: FrameConfig) -> np.ndarray:
    """Bit LLRs of the data symbols from log symbol probabilities (K, M)."""
    log_pu = np.asarray(log_pu, dtype=float)[~cfg.pilot_mask]
    labels = gray_labels(cfg.M)
    zero = np.where(labels.T[None, :, :] == 0, log_pu[:, None, :], -np.inf)
    one = np.where(labels.T[None, :, :] == 1, log_pu[:, None, :], -np.inf)
    with np.errstate(invalid="ignore"):
        llr = logsumexp(zero, axis=-1) - logsumexp(one, axis=-1)
    llr = np.nan_to_num(llr, nan=0.0, posinf=LLR_CLIP, neginf=-LLR_CLIP)
    return np.clip(llr, -LLR_CLIP, LLR_CLIP).reshape(-1)
