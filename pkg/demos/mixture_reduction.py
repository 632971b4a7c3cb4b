"""Follow a Tikhonov-mixture phase message through a few recursion steps.

A confident forward message meets QPSK observations with no prior symbol
information, so every step multiplies its order by four before the Wiener drift
and the reduction. The script prints how each reduction setting trades mixture
order against total-variation distance to the unreduced density.
"""
import math

import numpy as np

from tikmix.channel import constellation, es_n0_to_sigma2
from tikmix.dirstat import WrappedGaussianStep, convolve_wrapped_gaussian
from tikmix.mixture import ReductionConfig, TikhonovMixture, evaluate, reduce
from tikmix.phase_spa import observation_expand

M, ES_N0_DB, SIGMA_DELTA, STEPS = 4, 5.0, 0.1, 3
sigma2 = es_n0_to_sigma2(ES_N0_DB)
step = WrappedGaussianStep(SIGMA_DELTA)
uniform_pd = np.full(M, -math.log(M))
theta = np.linspace(-math.pi, math.pi, 4096, endpoint=False)

rng = np.random.default_rng(3)
phase = 0.2 + np.cumsum(rng.normal(0, SIGMA_DELTA, STEPS))
symbols = constellation(M)[rng.integers(0, M, STEPS)]
noise = math.sqrt(sigma2) * (rng.normal(size=STEPS) + 1j * rng.normal(size=STEPS))
r = symbols * np.exp(1j * phase) + noise


def advance(m, r_k):
    expanded = observation_expand(m, uniform_pd, r_k, sigma2)
    return TikhonovMixture([convolve_wrapped_gaussian(c, step).z for c in expanded.components],
                           expanded.log_weights)


def tv(a, b):
    return 0.5 * np.mean(np.abs(evaluate(a, theta) - evaluate(b, theta))) * 2 * math.pi


settings = {
    "exact (mu=0)": ReductionConfig(mu=0.0, n_max=M ** STEPS, prune_weight=0.0),
    "default": ReductionConfig(),
    "default without protection": ReductionConfig(protect_kl=math.inf),
    "unweighted KL, mu=0.05": ReductionConfig(mu=0.05, weighted=False),
    "single component": ReductionConfig(mu=math.inf, n_max=1, weighted=False),
}

start = TikhonovMixture([8.0 * np.exp(0.2j)], [0.0])
exact = start
for r_k in r:
    exact = advance(exact, r_k)

print(f"{STEPS} steps at Es/N0 {ES_N0_DB} dB, sigma_delta {SIGMA_DELTA}, true final phase {phase[-1]:+.3f}")
print(f"{'setting':30s} {'order':>5s} {'TV':>8s}   heaviest components (weight @ mean)")
for name, cfg in settings.items():
    m = start
    for r_k in r:
        m = reduce(advance(m, r_k), cfg)
    top = sorted(zip(m.weights, m.components), key=lambda t: -t[0])[:3]
    desc = ", ".join(f"{w:.2e} @ {c.mean_direction:+.2f}" for w, c in top)
    print(f"{name:30s} {len(m):5d} {tv(m, exact):8.4f}   {desc}")
