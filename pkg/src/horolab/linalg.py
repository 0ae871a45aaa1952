"""Matrix backbone: Iwasawa decomposition, exterior powers, exact integer helpers, bumps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from .errors import SingularInput


class IwasawaTriple(NamedTuple):
    k: np.ndarray
    a: np.ndarray
    u: np.ndarray


def iwasawa(g) -> IwasawaTriple:
    """Write ``g = k @ a @ u`` with k orthogonal, a positive diagonal, u unit upper triangular.

    Accepts a single matrix or a stack ``(..., n, n)``.
    """
    g = np.asarray(g, dtype=float)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    scale = np.max(np.abs(r), axis=(-2, -1))
    if np.any(np.abs(d) <= 1e-13 * scale[..., None]):
        raise SingularInput("matrix is numerically rank deficient")
    sign = np.sign(d)
    q = q * sign[..., None, :]
    r = r * sign[..., :, None]
    diag = np.abs(d)
    a = diag[..., :, None] * np.eye(g.shape[-1])
    u = r / diag[..., :, None]
    return IwasawaTriple(q, a, u)


def iwasawa_a_part(g) -> np.ndarray:
    """Diagonal of the A-factor (positive entries), for one matrix or a stack."""
    r = np.linalg.qr(np.asarray(g, dtype=float), mode="r")
    return np.abs(np.diagonal(r, axis1=-2, axis2=-1))


def diag_exp(x: Sequence[float], t: float = 1.0) -> np.ndarray:
    return np.diag(np.exp(t * np.asarray(x, dtype=float)))


def diag_log(a) -> np.ndarray:
    d = np.diagonal(np.asarray(a, dtype=float))
    if np.any(d <= 0):
        raise ValueError("diagonal entries must be positive")
    return np.log(d)


@lru_cache(maxsize=None)
def wedge_index(n: int, j: int) -> tuple[tuple[int, ...], ...]:
    """Lexicographic j-subsets of range(n): the basis e_I of the j-th exterior power."""
    return tuple(combinations(range(n), j))


def int_det(m) -> int:
    """Exact determinant of a square integer matrix (Bareiss elimination)."""
    a = [[int(v) for v in row] for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _is_integer_array(g: np.ndarray) -> bool:
    if g.dtype.kind in "iu":
        return True
    if g.dtype == object:
        return all(isinstance(v, (int, np.integer)) for v in g.flat)
    return False


def exterior_power(g, j: int) -> np.ndarray:
    """Matrix of j x j minors of ``g`` acting on the j-th exterior power.

    Rows and columns are indexed by ``wedge_index(n, j)``. Integer input gives
    an exact object-dtype result; float input uses floating determinants.
    """
    g = np.asarray(g)
    n = g.shape[-1]
    if g.ndim != 2 or g.shape[0] != n:
        raise ValueError("expected a square matrix")
    if not 1 <= j <= n:
        raise ValueError(f"j={j} out of range 1..{n}")
    idx = wedge_index(n, j)
    if _is_integer_array(g):
        out = np.empty((len(idx), len(idx)), dtype=object)
        for a, I in enumerate(idx):
            for b, J in enumerate(idx):
                out[a, b] = int_det([[g[r, c] for c in J] for r in I])
        return out
    g = g.astype(float)
    rows = np.array(idx)
    sub = g[rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(sub)


def exterior_power_batch(g: np.ndarray, j: int) -> np.ndarray:
    """Float minors for a stack ``(N, n, n)`` -> ``(N, C(n,j), C(n,j))``."""
    n = g.shape[-1]
    rows = np.array(wedge_index(n, j))
    sub = g[:, rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(sub)


def int_matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    return a.dot(b)


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a x + b y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def vec_gcd(v: Sequence[int]) -> int:
    return math.gcd(*(int(x) for x in v)) if len(v) else 0


def is_primitive(v: Sequence[int]) -> bool:
    return vec_gcd(v) == 1


def bezout_vector(v: Sequence[int]) -> list[int]:
    """Integer x with sum(v_i x_i) = 1 for primitive v."""
    v = [int(x) for x in v]
    coeffs = [0] * len(v)
    g = 0
    for i, vi in enumerate(v):
        g2, s, t = ext_gcd(g, vi)
        coeffs = [c * s for c in coeffs]
        coeffs[i] = t
        g = g2
    if g != 1:
        raise ValueError(f"{v} is not primitive")
    return coeffs


def complete_to_sl(v: Sequence[int]) -> np.ndarray:
    """Integer matrix of determinant 1 whose first column is the primitive vector v.

    Reduces v to e_1 by 2x2 gcd row steps G (so G v = e_1, G unimodular) and
    returns G^{-1}, fixing the sign of the second column if needed.
    """
    v = [int(x) for x in v]
    n = len(v)
    if n < 2:
        raise ValueError("need n >= 2")
    G = [[int(i == j) for j in range(n)] for i in range(n)]
    w = list(v)
    for i in range(n - 1, 0, -1):
        a, b = w[i - 1], w[i]
        if b == 0:
            continue
        g, s, t = ext_gcd(a, b)
        # [[s, t], [-b/g, a/g]] maps (a, b) to (g, 0) and has det 1
        r0 = [s * G[i - 1][c] + t * G[i][c] for c in range(n)]
        r1 = [(-b // g) * G[i - 1][c] + (a // g) * G[i][c] for c in range(n)]
        G[i - 1], G[i] = r0, r1
        w[i - 1], w[i] = g, 0
    if w[0] == -1:
        G[0] = [-x for x in G[0]]
        G[1] = [-x for x in G[1]]
    elif w[0] != 1:
        raise ValueError(f"{v} is not primitive")
    M = np.array(_int_inverse_unimodular(G), dtype=object)
    if int_det(M) != 1:
        M[:, 1] = -M[:, 1]
    return M


def _int_inverse_unimodular(G: list[list[int]]) -> list[list[int]]:
    n = len(G)
    det = int_det(G)
    if det not in (1, -1):
        raise ValueError("matrix is not unimodular")
    # adjugate / det
    inv = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[G[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            inv[j][i] = (-1) ** (i + j) * int_det(minor) * det
    return inv


def cross(u: Sequence[int], v: Sequence[int]) -> tuple[int, int, int]:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


@dataclass(frozen=True)
class BumpFunction:
    """Smooth radial bump on R^m, normalized to integral 1.

    ``psi(x) = scale * exp(-order / (1 - |x - center|^2 / radius^2))`` inside the
    ball of the given radius, 0 outside. Larger ``order`` concentrates the
    profile toward the center.
    """

    center: tuple[float, ...]
    radius: float
    order: int = 1
    scale: float = 1.0
    mass: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.center)

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        d2 = np.sum((x - np.asarray(self.center)) ** 2, axis=-1) / self.radius**2
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = np.where(d2 < 1.0, self.scale * np.exp(-self.order / (1.0 - np.minimum(d2, 1.0 - 1e-300))), 0.0)
        return val if val.ndim else float(val)

    def profile(self, r) -> np.ndarray:
        """Value as a function of the distance to the center."""
        r = np.asarray(r, dtype=float) / self.radius
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.where(r < 1.0, self.scale * np.exp(-self.order / (1.0 - np.minimum(r * r, 1.0 - 1e-300))), 0.0)

    @property
    def sup(self) -> float:
        return self.scale * math.exp(-self.order)

    def integral(self) -> float:
        """Integral over R^m by radial quadrature."""
        return self.scale * _radial_integral(self.order, self.dim) * self.radius**self.dim

    def slice_integral(self, distance: float, k: int) -> float:
        """Integral of the bump over a k-dimensional affine subspace at the given distance from the center.

        ``k = dim`` gives the full integral and ``k = 0`` a point value.
        """
        d = abs(float(distance))
        if not 0 <= k <= self.dim:
            raise ValueError(f"k={k} out of range 0..{self.dim}")
        if d >= self.radius:
            return 0.0
        if k == 0:
            return float(self.profile(d))
        rr = math.sqrt(self.radius**2 - d * d)
        area = 2 * math.pi ** (k / 2) / special.gamma(k / 2)
        f = lambda r: float(self.profile(math.hypot(r, d))) * r ** (k - 1)
        val, _ = integrate.quad(f, 0.0, rr, epsabs=1e-15, epsrel=1e-12, limit=200)
        return area * val


@lru_cache(maxsize=None)
def _radial_integral(order: int, m: int) -> float:
    area = 2 * math.pi ** (m / 2) / special.gamma(m / 2)
    f = lambda r: math.exp(-order / (1.0 - r * r)) * r ** (m - 1) if r < 1.0 else 0.0
    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return area * val


def bump_function(center, radius: float, order: int = 1, mass: float = 1.0) -> BumpFunction:
    """C-infinity bump supported in the closed ball, with integral ``mass``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if order < 1:
        raise ValueError("order must be >= 1")
    center = tuple(float(c) for c in np.atleast_1d(center))
    raw = _radial_integral(int(order), len(center)) * radius ** len(center)
    return BumpFunction(center, float(radius), int(order), mass / raw, float(mass))
