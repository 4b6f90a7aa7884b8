"""Numba-compiled hot loops.

The robust-competitive procedures update centers once per sample in a fixed
order, so their epochs cannot be vectorized; the agglomerative baseline needs
a quadratic nearest-neighbor merge loop.  Everything else in the package is
plain vectorized numpy.
"""

import math

import numpy as np
from numba import njit

_LN2 = math.log(2.0)


@njit(cache=True)
def lncosh(t):
    """log(cosh(t)) computed without overflow for large |t|."""
    a = abs(t)
    return a + math.log1p(math.exp(-2.0 * a)) - _LN2


@njit(cache=True)
def robust_distance_matrix(X, C, beta_i):
    """Pairwise robust distances: out[k, j] = sum_i beta_i[i]*lncosh((x-c)/beta_i[i])."""
    n, d = X.shape
    m = C.shape[0]
    out = np.empty((n, m))
    for k in range(n):
        for j in range(m):
            s = 0.0
            for i in range(d):
                s += beta_i[i] * lncosh((X[k, i] - C[j, i]) / beta_i[i])
            out[k, j] = s
    return out


@njit(cache=True)
def probcp_epoch(X, C, beta_i, beta, eta):
    """One fixed-order pass of per-sample center updates, probabilistic weights.

    For each sample: weights from the current centers via the normalized
    D^(1/(1-beta)) rule, then a bounded gradient step on every center:
    c += eta * w^beta * tanh((x - c)/beta_i).  Centers are updated in place.
    """
    n, d = X.shape
    m = C.shape[0]
    dist = np.empty(m)
    w = np.empty(m)
    expo = 1.0 / (1.0 - beta)
    for k in range(n):
        zero_at = -1
        for j in range(m):
            s = 0.0
            for i in range(d):
                s += beta_i[i] * lncosh((X[k, i] - C[j, i]) / beta_i[i])
            dist[j] = s
            if s == 0.0 and zero_at < 0:
                zero_at = j
        if zero_at >= 0:
            for j in range(m):
                w[j] = 1.0 if j == zero_at else 0.0
        else:
            total = 0.0
            for j in range(m):
                w[j] = dist[j] ** expo
                total += w[j]
            for j in range(m):
                w[j] /= total
        for j in range(m):
            step = eta * w[j] ** beta
            for i in range(d):
                C[j, i] += step * math.tanh((X[k, i] - C[j, i]) / beta_i[i])


@njit(cache=True)
def posscp_epoch(X, C, mu, beta_i, beta, eta):
    """One fixed-order pass of per-sample center updates, possibilistic weights.

    Weights compare each sample's robust distance against the per-cluster
    spread mu[j]; the center step is the same bounded gradient move as the
    probabilistic epoch.  Centers are updated in place; mu is read only.
    """
    n, d = X.shape
    m = C.shape[0]
    dist = np.empty(m)
    w = np.empty(m)
    expo = 1.0 / (beta - 1.0)
    for k in range(n):
        for j in range(m):
            s = 0.0
            for i in range(d):
                s += beta_i[i] * lncosh((X[k, i] - C[j, i]) / beta_i[i])
            dist[j] = s
            if s == 0.0:
                w[j] = 1.0
            else:
                w[j] = 1.0 / (1.0 + (s / mu[j]) ** expo)
        for j in range(m):
            step = eta * w[j] ** beta
            for i in range(d):
                C[j, i] += step * math.tanh((X[k, i] - C[j, i]) / beta_i[i])


@njit(cache=True)
def nn_chain_linkage(dist, method):
    """Agglomerative merge sequence via the nearest-neighbor chain.

    ``dist`` is a dense (n, n) distance matrix (diagonal ignored); ``method``
    selects the Lance-Williams update: 0 single, 1 complete, 2 average.
    Returns an (n-1, 3) array of merges [id_a, id_b, height] where original
    points are 0..n-1 and the t-th merge creates cluster n+t.  Heights are in
    chain discovery order; sort by height before cutting.
    """
    n = dist.shape[0]
    D = dist.copy()
    size = np.ones(n)
    # cluster id currently stored in matrix slot i (-1 = slot retired)
    slot_id = np.empty(n, dtype=np.int64)
    for i in range(n):
        slot_id[i] = i
    active = np.ones(n, dtype=np.bool_)
    merges = np.empty((n - 1, 3))
    chain = np.empty(n, dtype=np.int64)
    chain_len = 0
    next_id = n
    for t in range(n - 1):
        if chain_len == 0:
            for i in range(n):
                if active[i]:
                    chain[0] = i
                    chain_len = 1
                    break
        while True:
            a = chain[chain_len - 1]
            # nearest active neighbor of a (prefer the chain predecessor on ties)
            b = -1
            best = np.inf
            if chain_len > 1:
                b = chain[chain_len - 2]
                best = D[a, b]
            for i in range(n):
                if active[i] and i != a and D[a, i] < best:
                    best = D[a, i]
                    b = i
            if chain_len > 1 and b == chain[chain_len - 2]:
                break
            chain[chain_len] = b
            chain_len += 1
        # merge reciprocal pair (a, b) at height D[a, b]
        height = D[a, b]
        chain_len -= 2
        ida = slot_id[a]
        idb = slot_id[b]
        if ida < idb:
            merges[t, 0] = ida
            merges[t, 1] = idb
        else:
            merges[t, 0] = idb
            merges[t, 1] = ida
        merges[t, 2] = height
        na = size[a]
        nb = size[b]
        for i in range(n):
            if active[i] and i != a and i != b:
                dai = D[a, i]
                dbi = D[b, i]
                if method == 0:
                    v = min(dai, dbi)
                elif method == 1:
                    v = max(dai, dbi)
                else:
                    v = (na * dai + nb * dbi) / (na + nb)
                D[a, i] = v
                D[i, a] = v
        active[b] = False
        size[a] = na + nb
        slot_id[a] = next_id
        next_id += 1
    return merges
