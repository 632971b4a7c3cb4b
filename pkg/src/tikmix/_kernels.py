"""Jitted Tikhonov-mixture primitives.

Mixtures are passed around as a pair of flat arrays: complex concentrations ``z``
and natural-log weights ``lw``, plus an explicit count where buffers are reused.
The public classes in :mod:`tikmix.dirstat` and :mod:`tikmix.mixture` wrap these.
"""

import math

import numba as nb
import numpy as np

from ._special import i1_over_i0, inverse_i1_over_i0, log_i0

_MOMENT_CLAMP = 1.0 - 1e-12

# slots of the operation counter filled by the recursions
OPS_EXPAND = 0
OPS_CONVOLVE = 1
OPS_KL = 2
OPS_MERGE = 3
OPS_PU = 4
N_OPS = 5


@nb.njit(cache=True)
def kl(pz, qz):
    if pz == qz:
        return 0.0
    kp = abs(pz)
    kq = abs(qz)
    if kp == 0.0:
        return log_i0(kq)
    proj = (qz * pz.conjugate()).real / kp
    d = log_i0(kq) - log_i0(kp) + i1_over_i0(kp) * (kp - proj)
    return d if d > 0.0 else 0.0


@nb.njit(cache=True)
def logsumexp(lw, n):
    hi = -math.inf
    for i in range(n):
        if lw[i] > hi:
            hi = lw[i]
    if hi == -math.inf:
        return hi
    s = 0.0
    for i in range(n):
        s += math.exp(lw[i] - hi)
    return hi + math.log(s)


@nb.njit(cache=True)
def first_moment(z, lw, members, n_members, lw_total):
    m = 0j
    for t in range(n_members):
        i = members[t]
        k = abs(z[i])
        if k > 0.0:
            m += math.exp(lw[i] - lw_total) * i1_over_i0(k) * (z[i] / k)
    return m


@nb.njit(cache=True)
def moment_to_component(m):
    """Return (z, clamped) for the Tikhonov component whose first moment is ``m``."""
    rho = abs(m)
    clamped = False
    if rho >= _MOMENT_CLAMP:
        rho = _MOMENT_CLAMP
        clamped = True
    if rho == 0.0:
        return 0j, clamped
    kappa = inverse_i1_over_i0(rho)
    return kappa * (m / abs(m)), clamped


@nb.njit(cache=True)
def reduce_into(z, lw, n, mu, n_max, weighted, protect_kl, prune_weight, out_z, out_lw, ops):
    """Greedy lead-based clustering. ``lw[:n]`` must be normalized. Returns output order.

    With ``weighted`` a component joins the lead when ``alpha_i * KL <= mu`` and
    ``KL <= protect_kl``, or when ``alpha_i <= prune_weight`` (weights on the
    input's scale); ``mu = inf`` merges everything. Otherwise the test is the
    bare ``KL(f_i || f_lead) <= mu``.
    """
    alive = np.ones(n, dtype=np.bool_)
    members = np.empty(n, dtype=np.int64)
    remaining = n
    j = 0
    while remaining > 0 and j < n_max:
        lead = -1
        best = -math.inf
        for i in range(n):
            if alive[i] and (lead < 0 or lw[i] > best):
                lead = i
                best = lw[i]
        last = j == n_max - 1
        n_members = 0
        for i in range(n):
            if not alive[i]:
                continue
            take = i == lead or last
            if not take:
                ops[OPS_KL] += 1
                d = kl(z[i], z[lead])
                if weighted:
                    w = math.exp(lw[i])
                    take = w <= prune_weight or (d * w <= mu and (d <= protect_kl or mu == math.inf))
                else:
                    take = d <= mu
            if take:
                members[n_members] = i
                n_members += 1
                alive[i] = False
        remaining -= n_members
        if n_members == 1:
            out_z[j] = z[lead]
            out_lw[j] = lw[lead]
        else:
            ops[OPS_MERGE] += n_members
            sub = np.empty(n_members)
            for t in range(n_members):
                sub[t] = lw[members[t]]
            total = logsumexp(sub, n_members)
            m = first_moment(z, lw, members, n_members, total)
            out_z[j], _ = moment_to_component(m)
            out_lw[j] = total
        j += 1
    norm = logsumexp(out_lw, j)
    for i in range(j):
        out_lw[i] -= norm
    return j


@nb.njit(cache=True)
def expand_into(z, lw, n, log_pd, obs_z, out_z, out_lw, ops):
    """Multiply a mixture by the observation factor. ``obs_z[m] = r * conj(c_m) / sigma2``."""
    n_out = 0
    for i in range(n):
        base = lw[i] - log_i0(abs(z[i]))
        for m in range(log_pd.shape[0]):
            if log_pd[m] == -math.inf:
                continue
            zn = z[i] + obs_z[m]
            out_z[n_out] = zn
            out_lw[n_out] = base + log_pd[m] + log_i0(abs(zn))
            n_out += 1
    ops[OPS_EXPAND] += n_out
    norm = logsumexp(out_lw, n_out)
    for i in range(n_out):
        out_lw[i] -= norm
    return n_out


@nb.njit(cache=True)
def convolve_inplace(z, n, sigma_delta2, ops):
    if sigma_delta2 == 0.0:
        return
    ops[OPS_CONVOLVE] += n
    for i in range(n):
        z[i] = z[i] / (1.0 + sigma_delta2 * abs(z[i]))


@nb.njit(cache=True)
def recursion(obs_z, log_pd, sigma_delta2, mu, n_max, weighted, protect_kl, prune_weight,
              msg_z, msg_lw, msg_n, ops):
    """Forward recursion over K symbols; msg_*[k] holds the message entering symbol k.

    ``obs_z`` is (K, M), ``log_pd`` is (K, M); ``msg_z``/``msg_lw`` are (K, n_max).
    """
    n_sym, n_const = obs_z.shape
    work_z = np.empty(n_max * n_const, dtype=np.complex128)
    work_lw = np.empty(n_max * n_const)
    msg_z[0, 0] = 0j
    msg_lw[0, 0] = 0.0
    msg_n[0] = 1
    for k in range(1, n_sym):
        n = expand_into(msg_z[k - 1], msg_lw[k - 1], msg_n[k - 1], log_pd[k - 1],
                        obs_z[k - 1], work_z, work_lw, ops)
        convolve_inplace(work_z, n, sigma_delta2, ops)
        msg_n[k] = reduce_into(work_z, work_lw, n, mu, n_max, weighted, protect_kl, prune_weight,
                               msg_z[k], msg_lw[k], ops)


@nb.njit(cache=True)
def upward_rows(obs_z, fz, flw, fn, bz, blw, bn, out, ops):
    """Log P_u rows, normalized, from forward/backward messages."""
    n_sym, n_const = obs_z.shape
    for k in range(n_sym):
        nf = fn[k]
        nb_ = bn[k]
        terms = np.empty(nf * nb_)
        base_f = np.empty(nf)
        base_b = np.empty(nb_)
        for i in range(nf):
            base_f[i] = flw[k, i] - log_i0(abs(fz[k, i]))
        for j in range(nb_):
            base_b[j] = blw[k, j] - log_i0(abs(bz[k, j]))
        for m in range(n_const):
            t = 0
            for i in range(nf):
                for j in range(nb_):
                    terms[t] = base_f[i] + base_b[j] + log_i0(abs(fz[k, i] + bz[k, j] + obs_z[k, m]))
                    t += 1
            out[k, m] = logsumexp(terms, t)
        ops[OPS_PU] += n_const * nf * nb_
        norm = logsumexp(out[k], n_const)
        for m in range(n_const):
            out[k, m] -= norm
