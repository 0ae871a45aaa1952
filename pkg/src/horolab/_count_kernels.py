"""Compiled exact counting loops for points of bounded height.

All arithmetic is on int64; callers keep inputs small enough that squared
norms and products stay far below 2^63.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def isqrt(x):
    if x < 0:
        return -1
    r = np.int64(math.sqrt(x))
    while r * r > x:
        r -= 1
    while (r + 1) * (r + 1) <= x:
        r += 1
    return r


@njit(cache=True)
def mobius_table(m):
    mu = np.ones(m + 1, dtype=np.int64)
    mu[0] = 0
    is_comp = np.zeros(m + 1, dtype=np.bool_)
    for p in range(2, m + 1):
        if not is_comp[p]:
            for k in range(p, m + 1, p):
                if k > p:
                    is_comp[k] = True
                mu[k] = -mu[k]
            pp = p * p
            for k in range(pp, m + 1, pp):
                mu[k] = 0
    return mu


@njit(cache=True)
def ball_count(n, X):
    """Number of integer vectors v (including 0) in Z^n with |v|^2 <= X, for n = 1..4."""
    if X < 0:
        return 0
    if n == 1:
        return 2 * isqrt(X) + 1
    total = 0
    r = isqrt(X)
    if n == 2:
        for x in range(-r, r + 1):
            total += 2 * isqrt(X - x * x) + 1
        return total
    if n == 3:
        for x in range(-r, r + 1):
            rx = X - x * x
            ry = isqrt(rx)
            for y in range(-ry, ry + 1):
                total += 2 * isqrt(rx - y * y) + 1
        return total
    for x in range(-r, r + 1):
        rx = X - x * x
        ry = isqrt(rx)
        for y in range(-ry, ry + 1):
            rxy = rx - y * y
            rz = isqrt(rxy)
            for z in range(-rz, rz + 1):
                total += 2 * isqrt(rxy - z * z) + 1
    return total


@njit(cache=True)
def primitive_ball_count(n, X, mu):
    """Number of primitive v in Z^n with |v|^2 <= X (both signs)."""
    total = 0
    d = 1
    while d * d <= X:
        if mu[d] != 0:
            total += mu[d] * (ball_count(n, X // (d * d)) - 1)
        d += 1
    return total


@njit(cache=True)
def _ext_gcd(a, b):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b != 0:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@njit(cache=True)
def perp_basis(a, b, c):
    """Integer basis of {N : a N_0 + b N_1 + c N_2 = 0} for primitive (a, b, c)."""
    b1 = np.zeros(3, dtype=np.int64)
    b2 = np.zeros(3, dtype=np.int64)
    if a == 0 and b == 0:
        b1[0] = 1
        b2[1] = 1
        return b1, b2
    g, x, y = _ext_gcd(a, b)
    b1[0] = b // g
    b1[1] = -a // g
    b2[0] = -c * x
    b2[1] = -c * y
    b2[2] = g
    return b1, b2


@njit(cache=True)
def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


@njit(cache=True)
def gauss_form(b1, b2):
    """Gram entries (A, B, C) of a Lagrange-Gauss reduced basis of span(b1, b2)."""
    u = b1.copy()
    w = b2.copy()
    while True:
        if _dot(u, u) > _dot(w, w):
            t = u
            u = w
            w = t
        uu = _dot(u, u)
        q = np.int64(math.floor(_dot(u, w) / uu + 0.5))
        if q == 0:
            break
        w = w - q * u
    return _dot(u, u), _dot(u, w), _dot(w, w)


@njit(cache=True)
def form_count(A, B, C, X):
    """Number of integer (x1, x2), including 0, with A x1^2 + 2 B x1 x2 + C x2^2 <= X (reduced form)."""
    if X < 0:
        return 0
    det = A * C - B * B
    m2 = isqrt((X * A) // det) + 1
    total = 0
    for x2 in range(-m2, m2 + 1):
        D = x2 * x2 * (B * B - A * C) + A * X
        if D < 0:
            continue
        s = math.sqrt(D)
        lo = np.int64(math.ceil((-B * x2 - s) / A)) - 1
        hi = np.int64(math.floor((-B * x2 + s) / A)) + 1
        while lo <= hi and A * lo * lo + 2 * B * lo * x2 + C * x2 * x2 > X:
            lo += 1
        while hi >= lo and A * hi * hi + 2 * B * hi * x2 + C * x2 * x2 > X:
            hi -= 1
        if hi >= lo:
            total += hi - lo + 1
    return total


@njit(cache=True)
def primitive_form_count(A, B, C, X, mu):
    """Primitive nonzero points of the form lattice with value <= X (both signs)."""
    total = 0
    d = 1
    while A * d * d <= X:
        if mu[d] != 0:
            total += mu[d] * (form_count(A, B, C, X // (d * d)) - 1)
        d += 1
    return total


@njit(cache=True)
def flag_counts(T_grid, mu):
    """Counts of full flags (line [v], plane with normal [N]) in Q^3 with |v|^2 |N|^2 <= T.

    Uses the symmetry v <-> N: the total is 2 #{|v| < |N|} + #{|v| = |N|}, and
    for each primitive v (one sign) primitive N are counted in the rank-2
    lattice orthogonal to v by Moebius inversion.
    """
    K = T_grid.shape[0]
    out = np.zeros(K, dtype=np.int64)
    Tmax = T_grid[K - 1]
    smax = isqrt(Tmax)  # |v|^2 <= |N|^2 and product <= T gives |v|^4 <= T
    r = isqrt(smax)
    for a in range(0, r + 1):
        for b in range(-r, r + 1):
            if a == 0 and b < 0:
                continue
            for c in range(-r, r + 1):
                if a == 0 and b == 0 and c <= 0:
                    continue
                s = a * a + b * b + c * c
                if s > smax:
                    continue
                g, _, _ = _ext_gcd(a, b)
                g, _, _ = _ext_gcd(g, c)
                if g != 1:
                    continue
                b1, b2 = perp_basis(a, b, c)
                A, B, C = gauss_form(b1, b2)
                below = primitive_form_count(A, B, C, s - 1, mu)
                at = primitive_form_count(A, B, C, s, mu) - below
                for k in range(K - 1, -1, -1):
                    X = T_grid[k] // s
                    if X < s:
                        break
                    upto = primitive_form_count(A, B, C, X, mu) - below
                    # N counted with both signs: halve
                    out[k] += upto - at // 2
    return out
