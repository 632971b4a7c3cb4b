"""Progressive edge-growth construction of column-regular LDPC codes."""

import numba as nb
import numpy as np

from .ldpc import LdpcCode


@nb.njit(cache=True)
def _grow(n, m, dv, var_checks, check_vars, check_deg, tie_break):
    max_row = check_vars.shape[1]
    seen_c = np.zeros(m, dtype=np.int64)
    seen_v = np.zeros(n, dtype=np.int64)
    frontier = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    stamp = 0
    for j in range(n):
        for e in range(dv):
            if e == 0:
                cand = np.ones(m, dtype=np.bool_)
            else:
                # BFS from j; keep the checks not reached at the last depth that still left some out
                stamp += 1
                reached = 0
                seen_v[j] = stamp
                nf = 1
                frontier[0] = j
                cand = np.ones(m, dtype=np.bool_)
                for t in range(e):
                    c = var_checks[j, t]
                    if seen_c[c] != stamp:
                        seen_c[c] = stamp
                        reached += 1
                while True:
                    prev = cand.copy()
                    for c in range(m):
                        cand[c] = seen_c[c] != stamp
                    if reached == m:
                        cand = prev
                        break
                    nn = 0
                    for f in range(nf):
                        v = frontier[f]
                        for t in range(dv):
                            c = var_checks[v, t]
                            if c < 0 or seen_c[c] != stamp:
                                continue
                            for s in range(check_deg[c]):
                                w = check_vars[c, s]
                                if seen_v[w] != stamp:
                                    seen_v[w] = stamp
                                    nxt[nn] = w
                                    nn += 1
                    if nn == 0:
                        break
                    grew = 0
                    for f in range(nn):
                        v = nxt[f]
                        for t in range(dv):
                            c = var_checks[v, t]
                            if c >= 0 and seen_c[c] != stamp:
                                seen_c[c] = stamp
                                grew += 1
                    if grew == 0:
                        break
                    reached += grew
                    for f in range(nn):
                        frontier[f] = nxt[f]
                    nf = nn
                for t in range(e):
                    cand[var_checks[j, t]] = False
            best = -1
            for c in range(m):
                if not cand[c] or check_deg[c] >= max_row:
                    continue
                if best < 0 or check_deg[c] < check_deg[best] or (
                        check_deg[c] == check_deg[best] and tie_break[c] < tie_break[best]):
                    best = c
            if best < 0:
                # every candidate full or already used: fall back to any unused, least loaded check
                for c in range(m):
                    used = False
                    for t in range(e):
                        if var_checks[j, t] == c:
                            used = True
                    if used or check_deg[c] >= max_row:
                        continue
                    if best < 0 or check_deg[c] < check_deg[best]:
                        best = c
            var_checks[j, e] = best
            check_vars[best, check_deg[best]] = j
            check_deg[best] += 1
            tie_break[best] = tie_break[best] * 1103515245 % 2147483647


def peg_code(n: int, rate: float, dv: int = 3, seed: int = 1) -> LdpcCode:
    """Column-weight ``dv`` code of length ``n`` with ``round(n * (1 - rate))`` checks.

    Deterministic for a given ``seed``; ties between equally loaded candidate
    checks are broken by a seeded permutation.
    """
    m = int(round(n * (1.0 - rate)))
    if not (0 < m < n) or dv < 1 or dv > m:
        raise ValueError("invalid PEG parameters")
    max_row = -(-n * dv // m) + 1
    rng = np.random.default_rng(seed)
    tie_break = rng.permutation(m).astype(np.int64) + 1
    var_checks = np.full((n, dv), -1, dtype=np.int64)
    check_vars = np.full((m, max_row), -1, dtype=np.int64)
    check_deg = np.zeros(m, dtype=np.int64)
    _grow(n, m, dv, var_checks, check_vars, check_deg, tie_break)
    checks = var_checks.ravel()
    variables = np.repeat(np.arange(n), dv)
    return LdpcCode(n=n, m=m, checks=checks, variables=variables)


def girth(code: LdpcCode) -> int:
    """Length of the shortest cycle in the Tanner graph (0 if acyclic)."""
    n, m = code.n, code.m
    adj = [[] for _ in range(n + m)]
    for c, v in zip(code.checks.tolist(), code.variables.tolist()):
        adj[v].append(n + c)
        adj[n + c].append(v)
    best = None
    for start in range(n):
        dist = {start: 0}
        parent = {start: -1}
        queue = [start]
        for u in queue:
            if best is not None and 2 * dist[u] >= best:
                break
            for w in adj[u]:
                if w == parent[u]:
                    continue
                if w in dist:
                    cyc = dist[u] + dist[w] + 1
                    if best is None or cyc < best:
                        best = cyc
                else:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue.append(w)
    return best or 0
