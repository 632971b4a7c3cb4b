"""Tikhonov mixtures and adaptive-order mixture reduction."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _kernels, _special
from .dirstat import LOG_2PI, TikhonovComponent


class DegenerateMixtureError(ValueError):
    """Raised when every mixture weight is zero."""


@dataclass(frozen=True)
class TikhonovMixture:
    """Weighted sum of Tikhonov components with natural-log weights.

    Stored as two parallel arrays rather than a list of objects; ``components``
    builds the object view on demand.
    """

    z: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=np.complex128))
        lw = np.atleast_1d(np.asarray(self.log_weights, dtype=float))
        if z.ndim != 1 or z.shape != lw.shape or z.size == 0:
            raise ValueError("z and log_weights must be nonempty 1-d arrays of equal length")
        if not np.all(np.isfinite(z)):
            raise ValueError("concentrations must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "log_weights", lw)

    @classmethod
    def from_components(cls, components, weights=None):
        z = [c.z for c in components]
        if weights is None:
            weights = np.full(len(z), 1.0 / len(z))
        with np.errstate(divide="ignore"):
            return cls(z, np.log(np.asarray(weights, dtype=float)))

    @classmethod
    def uniform(cls):
        return cls(np.zeros(1, dtype=complex), np.zeros(1))

    @property
    def components(self):
        return [TikhonovComponent(v) for v in self.z]

    @property
    def weights(self):
        return np.exp(self.log_weights)

    def __len__(self):
        return self.z.size


@dataclass(frozen=True)
class ReductionConfig:
    """Mixture-reduction settings.

    ``mu`` is the clustering threshold in nats and ``n_max`` the hard cap on the
    output order. With ``weighted`` (the default) a component joins the lead's
    cluster when ``weight * KL(component || lead) <= mu``, except that a
    component more than ``protect_kl`` nats from the lead is kept on its own
    unless its weight is at most ``prune_weight``. A light hypothesis far from
    the lead is exactly what the next pilot may turn into the dominant one.

    With ``weighted=False`` the bare divergence is compared with ``mu``. That
    test never discards a far-off component however light, so recursions
    saturate at ``n_max``.
    """

    mu: float = 0.03
    n_max: int = 20
    weighted: bool = True
    protect_kl: float = 10.0
    prune_weight: float = 1e-6

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be a positive integer, got {self.n_max}")
        if not self.protect_kl >= 0 or not 0 <= self.prune_weight <= 1:
            raise ValueError("protect_kl must be >= 0 and prune_weight in [0, 1]")


def normalize(m: TikhonovMixture) -> TikhonovMixture:
    total = logsumexp(m.log_weights)
    if not np.isfinite(total):
        raise DegenerateMixtureError("all mixture weights are zero")
    return TikhonovMixture(m.z, m.log_weights - total)


def log_evaluate(m: TikhonovMixture, theta):
    theta = np.asarray(theta, dtype=float)
    log_norm = np.array([_special.log_i0(k) for k in np.abs(m.z)]) + LOG_2PI
    terms = (np.real(m.z * np.exp(-1j * theta[..., None]))
             + m.log_weights - log_norm)
    return logsumexp(terms, axis=-1)


def evaluate(m: TikhonovMixture, theta):
    """Mixture density at ``theta`` (scalar or array)."""
    return np.exp(log_evaluate(m, theta))


def reduce(m: TikhonovMixture, cfg: ReductionConfig) -> TikhonovMixture:
    """Greedy KL clustering around the heaviest remaining component.

    Each round takes the heaviest surviving component as the lead (lowest index on
    ties), gathers every survivor passing the KL test of ``cfg``, and
    replaces the group by its moment-matched merge carrying the group's weight.
    Round ``n_max`` absorbs whatever is left. Output weights are normalized.
    """
    m = normalize(m)
    z = np.ascontiguousarray(m.z)
    lw = np.ascontiguousarray(m.log_weights)
    n = z.size
    out_z = np.empty(n, dtype=np.complex128)
    out_lw = np.empty(n)
    ops = np.zeros(_kernels.N_OPS, dtype=np.int64)
    order = _kernels.reduce_into(z, lw, n, float(cfg.mu), int(cfg.n_max), bool(cfg.weighted),
                                 float(cfg.protect_kl), float(cfg.prune_weight), out_z, out_lw, ops)
    return TikhonovMixture(out_z[:order], out_lw[:order])


def mixture_order(m: TikhonovMixture) -> int:
    return len(m)


def collapse(m: TikhonovMixture) -> TikhonovComponent:
    """Moment-matched single component of a normalized mixture."""
    return reduce(m, ReductionConfig(mu=math.inf, n_max=1, weighted=False)).components[0]
