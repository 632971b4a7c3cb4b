"""Independent reference computations used only by the tests.

Nothing here calls into the closed forms under test: densities are evaluated
pointwise, integrals are periodic trapezoid sums, Bessel values come from mpmath,
and exact symbol posteriors come from enumerating symbol sequences.
"""

import itertools
import math

import mpmath
import numpy as np
from scipy.special import logsumexp

N_QUAD = 4096


def grid(n=N_QUAD):
    return 2 * np.pi * np.arange(n) / n


def log_i0_mp(x, dps=40):
    with mpmath.workdps(dps):
        return float(mpmath.log(mpmath.besseli(0, x)))


def i0_power_series(x, dps=40):
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        total = mpmath.mpf(0)
        m = 0
        while True:
            term = (x / 2) ** (2 * m) / mpmath.factorial(m) ** 2
            total += term
            if m > 5 and term < total * mpmath.mpf(10) ** (-dps):
                return total
            m += 1


def bessel_ratio_mp(x, dps=40):
    with mpmath.workdps(dps):
        return float(mpmath.besseli(1, x) / mpmath.besseli(0, x))


def tikhonov_logpdf(z, theta):
    """Log density with the normaliser computed by mpmath."""
    return np.real(z * np.exp(-1j * np.asarray(theta))) - log_i0_mp(abs(z)) - math.log(2 * math.pi)


def quad(values, n=None):
    values = np.asarray(values)
    n = values.shape[-1] if n is None else n
    return values.sum(axis=-1) * 2 * np.pi / n


def kl_quadrature(logp, logq):
    """KL between densities given as log values on the uniform grid."""
    p = np.exp(logp)
    return quad(p * (logp - logq))


def wrapped_normal_direct(theta, sigma, wraps=6):
    theta = np.asarray(theta, dtype=float)
    ls = np.arange(-wraps, wraps + 1)
    d = theta[..., None] - 2 * np.pi * ls
    return np.exp(-0.5 * (d / sigma) ** 2).sum(axis=-1) / (sigma * math.sqrt(2 * math.pi))


def convolve_density(values, sigma, n=N_QUAD):
    """Circular convolution of grid density values with the wrapped Gaussian (FFT)."""
    kernel = wrapped_normal_direct(grid(n), sigma) * 2 * np.pi / n
    out = np.real(np.fft.ifft(np.fft.fft(values) * np.fft.fft(kernel)))
    # round-off leaves tiny negative values far in the tails
    return np.maximum(out, 1e-300)


def mixture_logpdf(z, weights, theta):
    theta = np.asarray(theta)
    terms = [math.log(w) + tikhonov_logpdf(zi, theta) for zi, w in zip(z, weights) if w > 0]
    return logsumexp(np.array(terms), axis=0)


def tv(p, q):
    return 0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum(axis=-1)


def exact_symbol_posteriors(r, log_pd, sigma2, sigma_delta, n_grid=256):
    """Extrinsic symbol probabilities from the exact joint posterior (log domain, (K, M)).

    Enumerates every symbol sequence allowed by ``log_pd`` and integrates the
    phase chain for each one on an ``n_grid`` trapezoid grid with a directly
    summed wrapped-Gaussian transition matrix. Uniform prior on the first phase.
    """
    r = np.asarray(r)
    K, M = log_pd.shape
    theta = grid(n_grid)
    h = 2 * np.pi / n_grid
    diff = theta[:, None] - theta[None, :]
    T = wrapped_normal_direct(diff, sigma_delta) * h if sigma_delta > 0 else np.eye(n_grid)
    const = np.exp(2j * np.pi * np.arange(M) / M)
    loglik = np.real((r[:, None, None] * np.conj(const)[None, :, None]) * np.exp(-1j * theta)[None, None, :]) / sigma2

    # every symbol may take every value: the prior of position k is left out of its own row
    seqs = np.array(list(itertools.product(range(M), repeat=K)), dtype=np.int64)  # (S, K)
    S = seqs.shape[0]
    log_scale = np.zeros(S)
    V = np.exp(loglik[0][seqs[:, 0]].T)  # (n_grid, S)
    for k in range(1, K):
        V = T @ V
        V *= np.exp(loglik[k][seqs[:, k]].T)
        top = V.max(axis=0)
        V /= top
        log_scale += np.log(top)
    log_z = np.log(V.sum(axis=0)) + log_scale
    prior = log_pd[np.arange(K)[None, :], seqs]  # (S, K)
    out = np.empty((K, M))
    for k in range(K):
        others = np.delete(prior, k, axis=1).sum(axis=1)
        w = log_z + others
        for m in range(M):
            out[k, m] = logsumexp(w[seqs[:, k] == m])
        out[k] -= logsumexp(out[k])
    return out
