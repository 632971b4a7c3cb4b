"""Quick property checks against independent numerical references.

Each check compares a closed form with scipy quadrature, scipy's scaled Bessel
functions or a brute-force enumeration. ``run_selftest`` is what the
``tikmix selftest`` command executes.
"""

import math
from typing import Callable, List, NamedTuple

import numpy as np
from scipy import integrate, special

from . import dirstat, mixture
from .dirstat import TikhonovComponent, WrappedGaussianStep
from .dp_baseline import build_transition_kernel, circular_convolve
from .ldpc import encode
from .peg import peg_code


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_z(rng, n, kmax):
    return rng.uniform(0, kmax, n) * np.exp(1j * rng.uniform(-np.pi, np.pi, n))


def _density(z):
    c = TikhonovComponent(z)
    return lambda t: float(c.pdf(t))


def _circ_quad(f):
    return integrate.quad(f, 0.0, 2 * np.pi, limit=400, epsabs=1e-13, epsrel=1e-12)[0]


def check_bessel(rng):
    x = np.concatenate([rng.uniform(0, 30, 200), np.logspace(-6, 5, 200)])
    ref_log = np.log(special.i0e(x)) + x
    ref_ratio = special.i1e(x) / special.i0e(x)
    # the scipy reference cancels for small x, so small values get an absolute bound
    err_log = np.max(np.abs(dirstat.log_bessel_i0(x) - ref_log) / np.maximum(ref_log, 1.0))
    err_ratio = np.max(np.abs(dirstat.bessel_ratio(x) - ref_ratio) / np.maximum(ref_ratio, 1e-300))
    return err_log <= 1e-12 and err_ratio <= 1e-12, f"err ln I0 {err_log:.1e}, I1/I0 {err_ratio:.1e}"


def check_inverse(rng):
    kappas = np.concatenate([[0.0], np.logspace(-5, 4, 300)])
    err = max(abs(dirstat.inverse_bessel_ratio(dirstat.bessel_ratio(k)) - k) for k in kappas)
    return err <= 1e-6, f"max round-trip error {err:.1e}"


def check_kl(rng):
    worst = 0.0
    for p, q in zip(_random_z(rng, 20, 100), _random_z(rng, 20, 100)):
        fp = TikhonovComponent(p)
        fq = TikhonovComponent(q)
        ref = _circ_quad(lambda t: float(fp.pdf(t)) * float(fp.logpdf(t) - fq.logpdf(t)))
        worst = max(worst, abs(dirstat.tikhonov_kl(fp, fq) - ref))
    return worst <= 1e-8, f"max |KL - quadrature| {worst:.1e}"


def check_cmvm(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 6))
        w = rng.dirichlet(np.ones(n))
        comps = [TikhonovComponent(z) for z in _random_z(rng, n, 100)]
        out = dirstat.cmvm(w, comps)
        re = sum(wi * _circ_quad(lambda t, c=c: float(c.pdf(t)) * math.cos(t)) for wi, c in zip(w, comps))
        im = sum(wi * _circ_quad(lambda t, c=c: float(c.pdf(t)) * math.sin(t)) for wi, c in zip(w, comps))
        worst = max(worst, abs(out.first_moment() - complex(re, im)))
    return worst <= 1e-8, f"max moment mismatch {worst:.1e}"


def check_convolution(rng):
    n = 4096
    theta = 2 * np.pi * np.arange(n) / n
    worst = 0.0
    for z, sd in zip(_random_z(rng, 20, 200), rng.uniform(0.01, 0.15, 20)):
        dens = TikhonovComponent(z).pdf(theta)
        kernel = dirstat.wrapped_gaussian_pdf(theta, sd) * 2 * np.pi / n
        num = np.maximum(np.real(np.fft.ifft(np.fft.fft(dens) * np.fft.fft(kernel))), 1e-300)
        approx = dirstat.convolve_wrapped_gaussian(TikhonovComponent(z), WrappedGaussianStep(sd))
        kl = float(np.sum(num * (np.log(num) - approx.logpdf(theta))) * 2 * np.pi / n)
        worst = max(worst, kl)
    return worst <= 0.01, f"max KL(numeric || closed form) {worst:.2e}"


def check_reduction(rng):
    for _ in range(100):
        n = int(rng.integers(1, 20))
        m = mixture.TikhonovMixture(_random_z(rng, n, 100), np.log(rng.dirichlet(np.ones(n))))
        cfg = mixture.ReductionConfig(mu=float(rng.choice([0.0, 0.03, 1.0])), n_max=int(rng.integers(1, 21)))
        out = mixture.reduce(m, cfg)
        m1 = sum(w * c.first_moment() for w, c in zip(m.weights, m.components))
        m2 = sum(w * c.first_moment() for w, c in zip(out.weights, out.components))
        if len(out) > min(n, cfg.n_max) or abs(out.weights.sum() - 1) > 1e-12 or abs(m1 - m2) > 1e-8:
            return False, f"invariant broken for order {n}, {cfg}"
    return True, "order cap, normalization and first moment hold on 100 mixtures"


def check_dp_convolution(rng):
    worst = 0.0
    for L in (8, 17, 64):
        v = rng.random(L)
        k = build_transition_kernel(L, 0.3)
        loop = np.array([sum(k[d] * v[(l - d) % L] for d in range(L)) for l in range(L)])
        worst = max(worst, np.max(np.abs(circular_convolve(v, k, "direct") - loop)),
                    np.max(np.abs(circular_convolve(v, k, "fft") - loop)))
    return worst <= 1e-12, f"max deviation from the O(L^2) sum {worst:.1e}"


def check_encoder(rng):
    code = peg_code(204, 0.5, seed=3)
    bad = sum(int(code.syndrome(encode(rng.integers(0, 2, code.k, dtype=np.uint8), code)).any())
              for _ in range(50))
    return bad == 0, f"{bad} of 50 codewords with nonzero syndrome"


CHECKS: List[Callable] = [check_bessel, check_inverse, check_kl, check_cmvm, check_convolution,
                          check_reduction, check_dp_convolution, check_encoder]


def run_selftest(seed: int = 0) -> List[CheckResult]:
    results = []
    for check in CHECKS:
        ok, detail = check(np.random.default_rng(seed))
        results.append(CheckResult(check.__name__.removeprefix("check_"), bool(ok), detail))
    return results
