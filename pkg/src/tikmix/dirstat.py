"""Directional statistics for Tikhonov (von Mises) components.

A Tikhonov density on [0, 2pi) is

    t(theta) = exp(Re[z exp(-j theta)]) / (2 pi I0(|z|))

so a single complex number ``z`` carries both the concentration ``|z|`` and the
mean direction ``angle(z)``. Everything here works on ``ln I0`` rather than
``I0`` so that concentrations in the thousands are routine.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels, _special

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TikhonovComponent:
    """One Tikhonov density, ``z = kappa * exp(j * mean_direction)``."""

    z: complex = 0j

    def __post_init__(self):
        z = complex(self.z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"concentration must be finite, got {z!r}")
        object.__setattr__(self, "z", z)

    @property
    def kappa(self) -> float:
        return abs(self.z)

    @property
    def mean_direction(self) -> float:
        return float(np.angle(self.z))

    def logpdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = self.kappa
        return np.real(self.z * np.exp(-1j * theta)) - _special.log_i0(k) - LOG_2PI

    def pdf(self, theta):
        return np.exp(self.logpdf(theta))

    def first_moment(self) -> complex:
        """E[exp(j theta)]."""
        k = self.kappa
        if k == 0.0:
            return 0j
        return _special.i1_over_i0(k) * self.z / k


@dataclass(frozen=True)
class WrappedGaussianStep:
    """Per-symbol phase increment with standard deviation ``sigma_delta`` (radians)."""

    sigma_delta: float = 0.0

    def __post_init__(self):
        if not (self.sigma_delta >= 0.0 and math.isfinite(self.sigma_delta)):
            raise ValueError(f"sigma_delta must be finite and >= 0, got {self.sigma_delta}")


def _check_nonnegative(x, name):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError(f"{name} must be finite and >= 0")
    return x


def log_bessel_i0(x):
    """Natural log of the modified Bessel function I0, for scalar or array ``x >= 0``."""
    x = _check_nonnegative(x, "x")
    if x.ndim == 0:
        return _special.log_i0(float(x))
    return np.array([_special.log_i0(v) for v in x.ravel()]).reshape(x.shape)


def bessel_ratio(kappa):
    """I1(kappa) / I0(kappa), the mean resultant length of a Tikhonov density."""
    kappa = _check_nonnegative(kappa, "kappa")
    if kappa.ndim == 0:
        return _special.i1_over_i0(float(kappa))
    return np.array([_special.i1_over_i0(v) for v in kappa.ravel()]).reshape(kappa.shape)


def inverse_bessel_ratio(rho: float) -> float:
    """Concentration whose mean resultant length is ``rho``; ``0 <= rho < 1``."""
    rho = float(rho)
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    return _special.inverse_i1_over_i0(rho)


def tikhonov_product(a: TikhonovComponent, b: TikhonovComponent):
    """Pointwise product ``t_a * t_b = exp(log_scale) * t_{a+b}``.

    Returns:
        (TikhonovComponent, log_scale)
    """
    z = a.z + b.z
    log_scale = (_special.log_i0(abs(z)) - _special.log_i0(a.kappa)
                 - _special.log_i0(b.kappa) - LOG_2PI)
    return TikhonovComponent(z), log_scale


def convolve_wrapped_gaussian(c: TikhonovComponent, step: WrappedGaussianStep) -> TikhonovComponent:
    """Approximate ``t * p_delta`` by a Tikhonov density with shrunken concentration.

    ``z' = z / (1 + sigma_delta**2 * |z|)``: the mean direction is kept and the
    circular variance grows by roughly ``sigma_delta**2``.
    """
    s2 = step.sigma_delta ** 2
    if s2 == 0.0:
        return c
    return TikhonovComponent(c.z / (1.0 + s2 * c.kappa))


def tikhonov_kl(p: TikhonovComponent, q: TikhonovComponent) -> float:
    """Closed-form KL(p || q) in nats."""
    return _kernels.kl(p.z, q.z)


def cmvm(weights: Sequence[float], components: Sequence[TikhonovComponent]) -> TikhonovComponent:
    """Collapse a Tikhonov mixture to one component by matching the first circular moment."""
    weights = np.asarray(weights, dtype=float)
    if len(components) == 0 or weights.shape != (len(components),):
        raise ValueError("weights and components must be nonempty and of equal length")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    m = sum(w * c.first_moment() for w, c in zip(weights, components))
    z, clamped = _kernels.moment_to_component(complex(m))
    if clamped:
        logger.warning("cmvm: mixture moment |m|=%.17g clamped below 1", abs(m))
    return TikhonovComponent(z)


def wrapped_gaussian_pdf(theta, sigma: float):
    """Density of a zero-mean Gaussian wrapped onto the circle.

    The wrap sum runs over ``|l| <= L`` with ``L`` chosen so the first omitted
    translate is below 1e-15 of the peak.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    theta = np.asarray(theta, dtype=float)
    wrapped = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    reach = sigma * math.sqrt(2.0 * math.log(1e15))
    n_wrap = int(math.ceil(reach / (2 * np.pi))) + 1
    shifts = 2 * np.pi * np.arange(-n_wrap, n_wrap + 1)
    d = wrapped[..., None] - shifts
    dens = np.exp(-0.5 * (d / sigma) ** 2).sum(axis=-1)
    return dens / (sigma * math.sqrt(2 * np.pi))
