"""Compiled inner loops: LLL reduction and Fincke-Pohst enumeration.

Bases are stored column-wise (the lattice is ``B @ Z^n``). All kernels are
pure and release the GIL.
"""

import math

import numpy as np
from numba import njit

MAX_LLL_SWEEPS = 10_000


@njit(cache=True, nogil=True)
def _gso(B, bstar, mu, bn):
    m, n = B.shape
    for i in range(n):
        for r in range(m):
            bstar[r, i] = B[r, i]
        for j in range(i):
            dot = 0.0
            for r in range(m):
                dot += B[r, i] * bstar[r, j]
            mu[i, j] = dot / bn[j]
            for r in range(m):
                bstar[r, i] -= mu[i, j] * bstar[r, j]
        s = 0.0
        for r in range(m):
            s += bstar[r, i] * bstar[r, i]
        bn[i] = s


@njit(cache=True, nogil=True)
def lll_inplace(B, U, delta):
    """LLL-reduce the columns of ``B`` in place; ``U`` accumulates the integer change of basis.

    Returns the number of loop iterations, or -1 if the sweep cap was hit.
    """
    m, n = B.shape
    mu = np.zeros((n, n))
    bn = np.zeros(n)
    bstar = np.empty((m, n))
    k = 1
    it = 0
    while k < n:
        it += 1
        if it > MAX_LLL_SWEEPS:
            return -1
        _gso(B, bstar, mu, bn)
        for j in range(k - 1, -1, -1):
            q = np.rint(mu[k, j])
            if q != 0.0:
                qi = np.int64(q)
                for r in range(m):
                    B[r, k] -= q * B[r, j]
                for r in range(n):
                    U[r, k] -= qi * U[r, j]
                for l in range(j):
                    mu[k, l] -= q * mu[j, l]
                mu[k, j] -= q
        if bn[k] >= (delta - mu[k, k - 1] * mu[k, k - 1]) * bn[k - 1]:
            k += 1
        else:
            for r in range(m):
                tmp = B[r, k]
                B[r, k] = B[r, k - 1]
                B[r, k - 1] = tmp
            for r in range(n):
                tmpi = U[r, k]
                U[r, k] = U[r, k - 1]
                U[r, k - 1] = tmpi
            k = max(k - 1, 1)
    return it


@njit(cache=True, nogil=True)
def _upper_factor(B):
    # R upper triangular with B^T B = R^T R
    G = B.T @ B
    L = np.linalg.cholesky(G)
    return L.T.copy()


@njit(cache=True, nogil=True)
def shortest_vector(B):
    """Exact shortest nonzero vector of an (ideally reduced) basis.

    Returns ``(squared_length, coefficients)`` with coefficients relative to ``B``.
    """
    m, n = B.shape
    R = _upper_factor(B)
    best = np.inf
    best_x = np.zeros(n, dtype=np.int64)
    for j in range(n):
        s = 0.0
        for r in range(m):
            s += B[r, j] * B[r, j]
        if s < best:
            best = s
            best_x[:] = 0
            best_x[j] = 1
    radius2 = best
    x = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    ctr = np.zeros(n)
    partial = np.zeros(n + 1)
    i = n - 1
    ctr[i] = 0.0
    w = math.sqrt(radius2) / R[i, i]
    x[i] = np.int64(math.ceil(-w))
    hi[i] = np.int64(math.floor(w))
    while True:
        if x[i] > hi[i]:
            i += 1
            if i == n:
                break
            x[i] += 1
            continue
        v = R[i, i] * (x[i] - ctr[i])
        partial[i] = partial[i + 1] + v * v
        if partial[i] > radius2:
            x[i] += 1
            continue
        if i == 0:
            nz = False
            for k in range(n):
                if x[k] != 0:
                    nz = True
                    break
            if nz and partial[0] < best:
                best = partial[0]
                best_x[:] = x
                radius2 = best
            x[0] += 1
            continue
        i -= 1
        c = 0.0
        for j in range(i + 1, n):
            c -= R[i, j] * x[j]
        ctr[i] = c / R[i, i]
        rem = radius2 - partial[i + 1]
        if rem < 0.0:
            rem = 0.0
        w = math.sqrt(rem) / R[i, i]
        x[i] = np.int64(math.ceil(ctr[i] - w))
        hi[i] = np.int64(math.floor(ctr[i] + w))
    # recompute the length directly from the coefficients
    s = 0.0
    for r in range(m):
        acc = 0.0
        for k in range(n):
            acc += B[r, k] * best_x[k]
        s += acc * acc
    return s, best_x


@njit(cache=True, nogil=True)
def _gcd_vec(x):
    g = 0
    for k in range(x.shape[0]):
        a = abs(x[k])
        b = g
        while b:
            a, b = b, a % b
        g = a
    return g


@njit(cache=True, nogil=True)
def bump_sum(B, center, radius, order, scale, primitive, max_points):
    """Sum of ``scale * exp(-order / (1 - |v - center|^2 / radius^2))`` over nonzero lattice vectors.

    Returns ``(value, visited)``; ``visited = -1`` signals that more than
    ``max_points`` vectors fell in the enumeration ball.
    """
    m, n = B.shape
    R = _upper_factor(B)
    cn = 0.0
    for r in range(m):
        cn += center[r] * center[r]
    cn = math.sqrt(cn)
    centered = cn == 0.0
    big = cn + radius
    radius2 = big * big
    r2 = radius * radius
    total = 0.0
    visited = 0
    x = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    ctr = np.zeros(n)
    partial = np.zeros(n + 1)
    i = n - 1
    w = big / R[i, i]
    x[i] = np.int64(math.ceil(-w))
    hi[i] = np.int64(math.floor(w))
    while True:
        if x[i] > hi[i]:
            i += 1
            if i == n:
                break
            x[i] += 1
            continue
        v = R[i, i] * (x[i] - ctr[i])
        partial[i] = partial[i + 1] + v * v
        if partial[i] > radius2:
            x[i] += 1
            continue
        if i == 0:
            visited += 1
            if visited > max_points:
                return np.nan, -1
            if centered:
                d2 = partial[0]
            else:
                d2 = 0.0
                for r in range(m):
                    acc = -center[r]
                    for k in range(n):
                        acc += B[r, k] * x[k]
                    d2 += acc * acc
            if d2 < r2:
                g = _gcd_vec(x)
                if g != 0 and (not primitive or g == 1):
                    total += math.exp(-order / (1.0 - d2 / r2))
            x[0] += 1
            continue
        i -= 1
        c = 0.0
        for j in range(i + 1, n):
            c -= R[i, j] * x[j]
        ctr[i] = c / R[i, i]
        rem = radius2 - partial[i + 1]
        if rem < 0.0:
            rem = 0.0
        w = math.sqrt(rem) / R[i, i]
        x[i] = np.int64(math.ceil(ctr[i] - w))
        hi[i] = np.int64(math.floor(ctr[i] + w))
    return scale * total, visited


@njit(cache=True, nogil=True)
def first_minimum_batch(bases, delta):
    N = bases.shape[0]
    n = bases.shape[2]
    out = np.empty(N)
    for s in range(N):
        B = bases[s].copy()
        U = np.eye(n, dtype=np.int64)
        lll_inplace(B, U, delta)
        sq, _ = shortest_vector(B)
        out[s] = math.sqrt(sq)
    return out


@njit(cache=True, nogil=True)
def bump_sum_batch(bases, center, radius, order, scale, primitive, delta, max_points):
    N = bases.shape[0]
    n = bases.shape[2]
    out = np.empty(N)
    worst = 0
    for s in range(N):
        B = bases[s].copy()
        U = np.eye(n, dtype=np.int64)
        lll_inplace(B, U, delta)
        val, visited = bump_sum(B, center, radius, order, scale, primitive, max_points)
        if visited < 0:
            return out, -1
        if visited > worst:
            worst = visited
        out[s] = val
    return out, worst
