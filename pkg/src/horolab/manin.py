"""Rational points of bounded anticanonical height on flag varieties of SL_n.

Supported varieties, all in Pluecker-type coordinates:

- ``P^{n-1}`` for n = 2, 3, 4 (lines in Q^n), a single primitive vector v;
- the full flag variety of SL_3, a primitive vector v (the line) and the
  primitive normal vector N of the plane, with ``v . N = 0``.

Points are counted with each vector taken up to sign. Heights are compared
exactly on integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _count_kernels as ck
from .errors import InsufficientData, UnsupportedVariety
from .horospheres import CountSeries
from .lie import RootData, parabolic_blocks
from .linalg import vec_gcd

VARIETIES = {"p1": (2, ()), "p2": (3, (2,)), "p3": (4, (2, 3)), "flag3": (3, ())}


def variety_data(name: str) -> tuple[int, frozenset[int]]:
    """``(n, E)`` for a supported variety name."""
    if name not in VARIETIES:
        raise UnsupportedVariety(f"unknown variety {name!r}; choose from {sorted(VARIETIES)}")
    n, E = VARIETIES[name]
    return n, frozenset(E)


@dataclass(frozen=True)
class HeightSpec:
    """Exponents ``m_k`` (k in the simple roots outside E) with ``rho_E = sum m_k lambda_k``."""

    n: int
    steps: tuple[int, ...]
    exponents: tuple[int, ...]

    def __post_init__(self):
        if len(self.steps) != len(self.exponents):
            raise ValueError("steps and exponents differ in length")
        if any(m < 1 for m in self.exponents):
            raise ValueError("exponents must be >= 1")


def anticanonical_exponents(n: int, E: Iterable[int]) -> HeightSpec:
    """Weight expansion of the sum of the roots in the unipotent radical of P_E.

    The roots ``t_i - t_j`` with i, j in different Levi blocks and i < j sum
    to the vector with entries ``v_i = #{later-block j} - #{earlier-block j}``;
    its coefficient on the k-th fundamental weight is ``v_k - v_{k+1}``.
    """
    rd = RootData(n)
    Es = rd.subset(E)
    if Es == rd.simple_roots:
        raise ValueError("E must be a proper subset of the simple roots")
    blk = parabolic_blocks(Es, n).block_of()
    v = [sum(1 for j in range(n) if blk[j] > blk[i]) - sum(1 for j in range(n) if blk[j] < blk[i]) for i in range(n)]
    steps = tuple(sorted(rd.simple_roots - Es))
    return HeightSpec(n, steps, tuple(v[k - 1] - v[k] for k in steps))


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    v = tuple(int(x) for x in v)
    g = vec_gcd(v)
    if g == 0:
        raise ValueError("zero vector")
    return tuple(x // g for x in v)


def _sign_normalize(v: tuple[int, ...]) -> tuple[int, ...]:
    for x in v:
        if x != 0:
            return v if x > 0 else tuple(-y for y in v)
    return v


@dataclass(frozen=True)
class FlagPoint:
    """Primitive integer vectors, one per flag step, each up to sign.

    For the SL_3 full flag the second vector is the normal of the plane,
    i.e. the Hodge dual of its Pluecker vector, and incidence is ``v . N = 0``.
    """

    pluecker: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        vecs = tuple(_sign_normalize(tuple(int(x) for x in v)) for v in self.pluecker)
        object.__setattr__(self, "pluecker", vecs)
        for v in vecs:
            if vec_gcd(v) != 1:
                raise ValueError(f"{v} is not primitive")
        if len(vecs) == 2 and sum(a * b for a, b in zip(*vecs)) != 0:
            raise ValueError("line is not contained in the plane")

    @classmethod
    def from_vectors(cls, *vectors: Sequence[int]) -> "FlagPoint":
        """Primitivize arbitrary nonzero representatives."""
        return cls(tuple(_primitive(v) for v in vectors))


def height_squared(x: FlagPoint, spec: HeightSpec) -> int:
    """Exact square of the height: ``prod (|v_j|^2)^{m_j}``."""
    if len(x.pluecker) != len(spec.exponents):
        raise ValueError("flag point and height spec have different numbers of steps")
    out = 1
    for v, m in zip(x.pluecker, spec.exponents):
        out *= sum(c * c for c in v) ** m
    return out


def height(x: FlagPoint, spec: HeightSpec) -> float:
    return math.sqrt(height_squared(x, spec))


def _max_sq_norm(T, m: int) -> int:
    """Largest integer s with ``s^m <= T^2`` (exact for int, float or Fraction T)."""
    T2 = Fraction(T) ** 2
    if T2 < 1:
        return 0
    s = int(math.floor(float(T2) ** (1.0 / m))) + 1
    while s > 0 and Fraction(s) ** m > T2:
        s -= 1
    while Fraction(s + 1) ** m <= T2:
        s += 1
    return s


def _flag_bound(T) -> int:
    # h = |v|^2 |N|^2 is an integer, so h <= T iff h <= floor(T)
    return int(math.floor(Fraction(T)))


def enumerate_points(variety: str, T) -> int:
    """Exact number N(T) of rational points with height at most T."""
    return count_series(variety, [T]).counts[0]


def count_series(variety: str, T_grid: Sequence) -> CountSeries:
    """Exact counts on a grid of height bounds."""
    n, E = variety_data(variety)
    spec = anticanonical_exponents(n, E)
    grid = sorted(T_grid, key=Fraction)
    if not grid or Fraction(grid[0]) <= 0:
        raise ValueError("T grid must be nonempty and positive")
    if variety == "flag3":
        Ts = np.array([_flag_bound(T) for T in grid], dtype=np.int64)
        if Ts[-1] > 10**12:
            raise ValueError("T too large for int64 counting")
        mu = ck.mobius_table(int(math.isqrt(max(int(Ts[-1]), 1))) + 2)
        counts = ck.flag_counts(Ts, mu)
    else:
        m = spec.exponents[0]
        S = [_max_sq_norm(T, m) for T in grid]
        mu = ck.mobius_table(int(math.isqrt(max(S))) + 2)
        counts = [int(ck.primitive_ball_count(n, s, mu)) // 2 for s in S]
    return CountSeries(tuple(float(T) for T in grid), tuple(int(c) for c in counts), variety, {"n": n, "exponents": spec.exponents})


def iter_points(variety: str, T) -> Iterator[FlagPoint]:
    """All points with height at most T (brute force; meant for small T)."""
    n, E = variety_data(variety)
    spec = anticanonical_exponents(n, E)
    T2 = Fraction(T) ** 2
    if variety == "flag3":
        hb = _flag_bound(T)
        r = math.isqrt(max(hb, 0))
        for v in _box(3, r):
            if vec_gcd(v) != 1 or v != _sign_normalize(v):
                continue
            sv = sum(c * c for c in v)
            for N in _box(3, math.isqrt(hb // sv)):
                if (
                    vec_gcd(N) == 1
                    and N == _sign_normalize(N)
                    and sv * sum(c * c for c in N) <= hb
                    and sum(a * b for a, b in zip(v, N)) == 0
                ):
                    yield FlagPoint((v, N))
        return
    m = spec.exponents[0]
    S = _max_sq_norm(T, m)
    for v in _box(n, math.isqrt(S)):
        if vec_gcd(v) == 1 and v == _sign_normalize(v) and Fraction(sum(c * c for c in v)) ** m <= T2:
            yield FlagPoint((v,))


def _box(n: int, r: int) -> Iterator[tuple[int, ...]]:
    grids = np.meshgrid(*([np.arange(-r, r + 1)] * n), indexing="ij")
    for row in np.stack([g.ravel() for g in grids], axis=1):
        yield tuple(int(x) for x in row)


@dataclass(frozen=True)
class ManinFit:
    """Fit of ``N(T)/T`` as a polynomial in ``log T`` (coefficients in increasing degree)."""

    degree: int
    coefficients: tuple[float, ...]
    stderr: tuple[float, ...]
    r2: float
    overfit_coefficients: tuple[float, ...]
    overfit_tstat: float
    residual_exponent: float | None
    points: int


def _polyfit(s: np.ndarray, y: np.ndarray, deg: int):
    X = np.vander(s, deg + 1, increasing=True)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = len(y) - (deg + 1)
    s2 = float(resid @ resid) / dof if dof > 0 else float("nan")
    cov = s2 * np.linalg.inv(X.T @ X)
    return beta, np.sqrt(np.diag(cov)), resid


def fit_manin(series: CountSeries, degree: int, t_min: float | None = None, t_max: float | None = None) -> ManinFit:
    """Least squares fit of ``N(T)/T`` by a polynomial of the given degree in ``log T``.

    Also reports a one-degree-higher fit with the t-statistic of its top
    coefficient, and the residual exponent: the slope of
    ``log |N(T)/T - p(log T)|`` against ``log log T``.
    """
    pts = [
        (T, c)
        for T, c in zip(series.params, series.counts)
        if (t_min is None or T >= t_min) and (t_max is None or T <= t_max)
    ]
    if len(pts) < degree + 3:
        raise InsufficientData(f"need at least {degree + 3} points, got {len(pts)}")
    T = np.array([p[0] for p in pts])
    if T[-1] / T[0] < 100:
        raise InsufficientData("series must span at least two decades of T")
    y = np.array([p[1] for p in pts], dtype=float) / T
    s = np.log(T)
    beta, se, resid = _polyfit(s, y, degree)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    b2, se2, _ = _polyfit(s, y, degree + 1)
    tstat = float(b2[-1] / se2[-1]) if se2[-1] > 0 else float("inf")
    keep = (np.abs(resid) > 0) & (s > 1)
    rexp = None
    if keep.sum() >= 3:
        rexp = float(np.polyfit(np.log(s[keep]), np.log(np.abs(resid[keep])), 1)[0])
    return ManinFit(
        degree,
        tuple(float(b) for b in beta),
        tuple(float(v) for v in se),
        float(r2),
        tuple(float(b) for b in b2),
        tstat,
        rexp,
        len(pts),
    )
