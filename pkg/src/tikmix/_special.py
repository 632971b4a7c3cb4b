"""Scalar log-domain Bessel kernels shared by the Python API and the jitted recursions.

Power series below ``_ASYMPTOTIC_FROM`` and the Hankel asymptotic expansion above it.
Both branches stay in the log domain or return ratios, so nothing overflows for
arguments up to the float64 range.
"""

import math

import numba as nb

_ASYMPTOTIC_FROM = 15.0
_LOG_2PI = math.log(2.0 * math.pi)


@nb.njit(cache=True)
def _series_i0_minus_one(x):
    q = 0.25 * x * x
    term = 1.0
    total = 0.0
    m = 0
    while True:
        m += 1
        term *= q / (m * m)
        total += term
        if term < 1e-17 * total or m > 200:
            return total


@nb.njit(cache=True)
def _series_i1_over_half_x(x):
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + 1.0))
        total += term
        if term < 1e-17 * total or m > 200:
            return total


@nb.njit(cache=True)
def _hankel_sum(nu, x):
    # sum_k (-1)^k a_k(nu) / x^k, truncated at the smallest term
    four_nu2 = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    prev = 1.0
    k = 0
    while True:
        k += 1
        odd = 2.0 * k - 1.0
        term *= -(four_nu2 - odd * odd) / (8.0 * k * x)
        mag = abs(term)
        if mag >= prev or mag < 1e-17 * abs(total):
            if mag < prev:
                total += term
            return total
        total += term
        prev = mag


@nb.njit(cache=True)
def log_i0(x):
    """ln I0(x) for x >= 0."""
    if x < _ASYMPTOTIC_FROM:
        return math.log1p(_series_i0_minus_one(x))
    return x - 0.5 * (_LOG_2PI + math.log(x)) + math.log(_hankel_sum(0.0, x))


@nb.njit(cache=True)
def i1_over_i0(x):
    """I1(x) / I0(x) for x >= 0."""
    if x == 0.0:
        return 0.0
    if x < _ASYMPTOTIC_FROM:
        return 0.5 * x * _series_i1_over_half_x(x) / (1.0 + _series_i0_minus_one(x))
    if x > 1e17:
        return 1.0 - 0.5 / x
    return _hankel_sum(1.0, x) / _hankel_sum(0.0, x)


@nb.njit(cache=True)
def i1_over_i0_derivative(x, ratio):
    if x == 0.0:
        return 0.5
    if x > 50.0:
        # the direct form cancels catastrophically; only Newton's speed depends on this
        ix = 1.0 / x
        return ix * ix * (0.5 + ix * (0.25 + 0.375 * ix))
    return 1.0 - ratio / x - ratio * ratio


@nb.njit(cache=True)
def inverse_i1_over_i0(rho):
    """Solve I1(k)/I0(k) = rho for k >= 0 by safeguarded Newton iteration."""
    if rho <= 0.0:
        return 0.0
    # Best & Fisher starting point
    if rho < 0.53:
        k = 2.0 * rho + rho ** 3 + 5.0 * rho ** 5 / 6.0
    elif rho < 0.85:
        k = -0.4 + 1.39 * rho + 0.43 / (1.0 - rho)
    else:
        k = 1.0 / (rho ** 3 - 4.0 * rho ** 2 + 3.0 * rho)
    lo = 0.0
    hi = math.inf
    for _ in range(200):
        a = i1_over_i0(k)
        f = a - rho
        if f == 0.0:
            return k
        if f > 0.0:
            hi = min(hi, k)
        else:
            lo = max(lo, k)
        d = i1_over_i0_derivative(k, a)
        k_new = k - f / d if d > 0.0 else -1.0
        if not (lo < k_new < hi):
            k_new = 0.5 * (lo + hi) if hi < math.inf else 2.0 * k + 1.0
        if abs(k_new - k) <= 1e-15 * k_new:
            return k_new
        k = k_new
    return k
