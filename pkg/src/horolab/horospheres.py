"""Counting lifts of a closed horosphere that meet a ball around the identity coset.

A coset ``gamma (Gamma cap U)`` is identified by integer flag data of gamma:
the first column ``v`` for n = 2, and ``(v, N)`` with ``N = c_1 x c_2`` the
primitive normal of the plane spanned by the first two columns for n = 3.
Right multiplication by integral unipotents leaves both unchanged, and the
Iwasawa A-part of ``gamma a_0`` only depends on them:
``a_11 = |v| d_1`` and ``a_11 a_22 = |N| d_1 d_2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BoundTooSmall, InsufficientData, UnsupportedRank
from .lie import rho_delta
from .linalg import bezout_vector, complete_to_sl, cross, int_det, is_primitive


@dataclass(frozen=True)
class HorosphereSpec:
    """Base point ``a_0 = diag(d_1, ..., d_n)`` of the closed horosphere, ``det a_0 = 1``."""

    a0: tuple[float, ...]

    def __post_init__(self):
        d = tuple(float(x) for x in self.a0)
        object.__setattr__(self, "a0", d)
        if len(d) < 2 or any(x <= 0 for x in d):
            raise ValueError("a0 must have n >= 2 positive entries")
        if abs(math.prod(d) - 1.0) > 1e-12:
            raise ValueError(f"det a0 = {math.prod(d)!r} is not 1")

    @property
    def n(self) -> int:
        return len(self.a0)

    @classmethod
    def identity(cls, n: int) -> "HorosphereSpec":
        return cls((1.0,) * n)


def _check_rank(n: int) -> None:
    if n not in (2, 3):
        raise UnsupportedRank(f"coset enumeration is implemented for n = 2, 3 (got {n})")


def coset_key(gamma) -> tuple[int, ...]:
    """Integer flag data of ``gamma``: first column, then (n = 3) the normal of the first two columns."""
    g = [[int(x) for x in row] for row in np.asarray(gamma, dtype=object)]
    n = len(g)
    _check_rank(n)
    c1 = [g[i][0] for i in range(n)]
    if n == 2:
        return tuple(c1)
    c2 = [g[i][1] for i in range(n)]
    return tuple(c1) + cross(c1, c2)


@dataclass(frozen=True)
class CosetRep:
    """An element of SL_n(Z) standing for its coset modulo integral unipotents."""

    gamma: tuple[tuple[int, ...], ...]
    key: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        g = tuple(tuple(int(x) for x in row) for row in np.asarray(self.gamma, dtype=object))
        object.__setattr__(self, "gamma", g)
        if int_det(g) != 1:
            raise ValueError("gamma must have determinant 1")
        object.__setattr__(self, "key", coset_key(g))

    @property
    def n(self) -> int:
        return len(self.gamma)

    def matrix(self) -> np.ndarray:
        return np.array(self.gamma, dtype=object)


def a_part_from_key(key: Sequence[int], a0: Sequence[float]) -> np.ndarray:
    """Diagonal of the Iwasawa A-part of ``gamma a_0`` from the coset key."""
    n = len(a0)
    k = np.asarray(key, dtype=float)
    if n == 2:
        a11 = math.hypot(k[0], k[1]) * a0[0]
        return np.array([a11, 1.0 / a11])
    a11 = float(np.linalg.norm(k[:3])) * a0[0]
    a12 = float(np.linalg.norm(k[3:6])) * a0[0] * a0[1]
    return np.array([a11, a12 / a11, 1.0 / a12])


def log_a_norms(keys: np.ndarray, spec: HorosphereSpec) -> np.ndarray:
    """``|log a(gamma a_0)|`` for an array of keys ``(N, key_len)``."""
    keys = np.asarray(keys, dtype=float)
    d = spec.a0
    if spec.n == 2:
        l1 = 0.5 * np.log(np.sum(keys * keys, axis=1)) + math.log(d[0])
        return math.sqrt(2.0) * np.abs(l1)
    l1 = 0.5 * np.log(np.sum(keys[:, :3] ** 2, axis=1)) + math.log(d[0])
    l12 = 0.5 * np.log(np.sum(keys[:, 3:] ** 2, axis=1)) + math.log(d[0] * d[1])
    return np.sqrt(l1**2 + (l12 - l1) ** 2 + l12**2)


def coset_in_ball(gamma: CosetRep, spec: HorosphereSpec, R: float) -> bool:
    """True iff ``|log a(gamma a_0)| <= R`` for the Iwasawa A-part a(.)."""
    if R <= 0:
        raise ValueError("R must be positive")
    if gamma.n != spec.n:
        raise ValueError("rank mismatch")
    return bool(log_a_norms(np.array([gamma.key]), spec)[0] <= R)


def primitive_vectors(n: int, bound: int) -> np.ndarray:
    """All primitive integer vectors with sup norm at most ``bound``, lexicographic."""
    ax = np.arange(-bound, bound + 1, dtype=np.int64)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    V = np.stack([g.ravel() for g in grids], axis=1)
    g = np.gcd.reduce(np.abs(V), axis=1)
    return V[g == 1]


def _perp_basis(v: Sequence[int]) -> np.ndarray:
    # columns 2, 3 of M^{-T} span the integer vectors orthogonal to v = M e_1
    M = complete_to_sl(v)
    Minv_T = np.array(
        [[int(x) for x in row] for row in _adjugate_T(M)], dtype=np.int64
    )
    return Minv_T[:, 1:]


def _adjugate_T(M) -> list[list[int]]:
    # for det M = 1, M^{-T} is the cofactor matrix
    m = [[int(x) for x in row] for row in M]
    out = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            out[i][j] = (-1) ** (i + j) * (m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]])
    return out


def _plane_points(P: np.ndarray, bound: int) -> np.ndarray:
    """Nonzero primitive combinations of the two columns of P with sup norm <= bound."""
    # Gauss-reduce the 2D basis so coefficient ranges stay small
    b1, b2 = P[:, 0].astype(np.int64), P[:, 1].astype(np.int64)
    while True:
        if b1 @ b1 > b2 @ b2:
            b1, b2 = b2, b1
        q = int(round((b1 @ b2) / (b1 @ b1)))
        if q == 0:
            break
        b2 = b2 - q * b1
    G = np.array([[b1 @ b1, b1 @ b2], [b1 @ b2, b2 @ b2]], dtype=float)
    r2 = 3.0 * bound * bound
    # |x1 b1 + x2 b2|^2 >= (det G / |b1|^2) x2^2 and symmetric
    det = G[0, 0] * G[1, 1] - G[0, 1] ** 2
    m2 = int(math.floor(math.sqrt(r2 * G[0, 0] / det))) + 1
    m1 = int(math.floor(math.sqrt(r2 * G[1, 1] / det))) + 1
    x1, x2 = np.meshgrid(np.arange(-m1, m1 + 1), np.arange(-m2, m2 + 1), indexing="ij")
    x1, x2 = x1.ravel(), x2.ravel()
    keep = np.gcd(x1, x2) == 1
    x1, x2 = x1[keep], x2[keep]
    pts = np.outer(x1, b1) + np.outer(x2, b2)
    return pts[np.max(np.abs(pts), axis=1) <= bound]


def coset_keys(n: int, bound: int) -> np.ndarray:
    """Every coset key with all entries at most ``bound`` in absolute value, sorted."""
    _check_rank(n)
    if bound < 1:
        raise ValueError("bound must be >= 1")
    V = primitive_vectors(n, bound)
    if n == 2:
        return V
    rows = []
    for v in V:
        N = _plane_points(_perp_basis(v), bound)
        if N.size:
            rows.append(np.hstack([np.broadcast_to(v, (N.shape[0], 3)), N]))
    K = np.vstack(rows)
    return K[np.lexsort(K.T[::-1])]


def lift_key(key: Sequence[int]) -> np.ndarray:
    """An SL_n(Z) matrix with the given coset key."""
    key = [int(x) for x in key]
    if len(key) == 2:
        return complete_to_sl(key)
    v, N = key[:3], key[3:]
    if sum(a * b for a, b in zip(v, N)) != 0 or not is_primitive(v) or not is_primitive(N):
        raise ValueError(f"{key} is not a valid flag key")
    M = complete_to_sl(v)
    Np = [sum(int(M[i][k]) * N[i] for i in range(3)) for k in range(3)]
    y = [0, Np[2], -Np[1]]
    u = [sum(int(M[i][k]) * y[k] for k in range(3)) for i in range(3)]
    x = bezout_vector(N)
    g = np.array([[v[i], u[i], x[i]] for i in range(3)], dtype=object)
    return g


def enumerate_cosets(n: int, bound: int) -> Iterator[CosetRep]:
    """Each coset whose key has entries at most ``bound`` exactly once."""
    for key in coset_keys(n, bound):
        yield CosetRep(lift_key(key))


def certified_bound(spec: HorosphereSpec, R: float) -> int:
    """Key sup-norm bound that contains every coset meeting the ball of radius R.

    For n = 2, ``|log a| <= R`` forces ``|v| d_1 <= e^{R / sqrt 2}``. For n = 3
    each ``|log a_ii| <= R sqrt(2/3)``, so ``|v| <= e^{R sqrt(2/3)} / d_1`` and
    ``|N| <= e^{R sqrt(2/3)} / (d_1 d_2)``.
    """
    d = spec.a0
    if spec.n == 2:
        return int(math.floor(math.exp(R / math.sqrt(2.0)) / d[0] + 1e-9))
    _check_rank(spec.n)
    e = math.exp(R * math.sqrt(2.0 / 3.0))
    return int(math.floor(max(e / d[0], e / (d[0] * d[1])) + 1e-9))


@dataclass(frozen=True)
class CountSeries:
    """Exact counts ``counts[i]`` at parameter ``params[i]``."""

    params: tuple[float, ...]
    counts: tuple[int, ...]
    kind: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if len(self.params) != len(self.counts):
            raise ValueError("params and counts differ in length")


def count_lifts(spec: HorosphereSpec, R_grid: Sequence[float], bound: int | None = None) -> CountSeries:
    """Exact number of cosets meeting the closed ball of radius R, for each R."""
    _check_rank(spec.n)
    grid = sorted(float(r) for r in R_grid)
    if not grid or grid[0] <= 0:
        raise ValueError("R grid must be nonempty and positive")
    need = certified_bound(spec, grid[-1])
    if bound is None:
        bound = max(need, 1)
    if bound < need:
        raise BoundTooSmall(f"bound {bound} < certified bound {need} for R = {grid[-1]}")
    norms = np.sort(log_a_norms(coset_keys(spec.n, bound), spec))
    counts = np.searchsorted(norms, np.array(grid) * (1 + 1e-12), side="right")
    return CountSeries(tuple(grid), tuple(int(c) for c in counts), "horospheres", {"bound": bound, "a0": spec.a0})


@dataclass(frozen=True)
class GrowthFit:
    rate: float
    intercept: float
    log_degree: int
    reference_rate: float
    relative_error: float
    residuals: tuple[float, ...]
    window: tuple[float, ...]
    tail_trend: float


def fit_growth(
    series: CountSeries,
    r_min: float | None = None,
    r_max: float | None = None,
    n: int | None = None,
    log_degree: int = 0,
    weighted: bool = True,
) -> GrowthFit:
    """Least squares ``log N(R) = c + rate R (+ k log R)`` on the window.

    With ``weighted`` each point gets weight ``N(R)``, the inverse of the
    Poisson-type variance ``1/N`` of ``log N``. The rate is compared with
    ``|rho_delta(n)|``. ``tail_trend`` is the least-squares slope of
    ``|residual|`` against R over the last four window points; a value <= 0 means the residuals are not growing.
    """
    pts = [
        (R, c)
        for R, c in zip(series.params, series.counts)
        if c > 0 and (r_min is None or R >= r_min) and (r_max is None or R <= r_max)
    ]
    if len(pts) < 6:
        raise InsufficientData(f"need at least 6 points in the window, got {len(pts)}")
    R = np.array([p[0] for p in pts])
    y = np.log([float(p[1]) for p in pts])
    cols = [np.ones_like(R), R] + ([np.log(R)] if log_degree else [])
    X = np.stack(cols, axis=1)
    sw = np.sqrt([float(p[1]) for p in pts]) if weighted else np.ones_like(R)
    beta, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ beta
    if n is None:
        n = int(series.meta.get("n", len(series.meta.get("a0", (0, 0)))))
    ref = rho_delta(n).norm()
    tail = np.abs(resid[-4:])
    trend = float(np.polyfit(R[-4:], tail, 1)[0])
    return GrowthFit(
        float(beta[1]), float(beta[0]), int(log_degree), ref, float(abs(beta[1] - ref) / ref),
        tuple(float(r) for r in resid), tuple(float(r) for r in R), trend,
    )
