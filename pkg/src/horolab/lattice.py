"""Unimodular lattices as points of SL_n(R)/SL_n(Z).

Test functions are lattice-intrinsic (sums over lattice vectors or functions
of the first minimum), so evaluating them never needs a fundamental domain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from . import _kernels
from .errors import EnumerationOverflow
from .linalg import BumpFunction
from .reduction import LLL_DELTA, first_minimum

DET_TOL = 1e-9
MAX_ENUMERATED = 10_000_000


class UnimodularLattice:
    """The lattice ``basis @ Z^n`` with ``|det(basis) - 1| <= 1e-9``.

    Columns of ``basis`` are the generators.
    """

    __slots__ = ("_basis",)

    def __init__(self, basis):
        B = np.array(basis, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 2:
            raise ValueError("basis must be a square matrix of size >= 2")
        det = np.linalg.det(B)
        if abs(det - 1.0) > DET_TOL:
            raise ValueError(f"basis determinant {det!r} is not 1")
        B.setflags(write=False)
        self._basis = B

    @classmethod
    def standard(cls, n: int) -> "UnimodularLattice":
        return cls(np.eye(n))

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def n(self) -> int:
        return self._basis.shape[0]

    def __repr__(self) -> str:
        return f"UnimodularLattice({self._basis.tolist()!r})"

    def to_json(self) -> str:
        """Basis rows (row-major) with 17 significant digits."""
        rows = [[float(f"{v:.17g}") for v in row] for row in self._basis]
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text: str) -> "UnimodularLattice":
        return cls(np.array(json.loads(text), dtype=float))


def _basis_of(L) -> np.ndarray:
    return L.basis if isinstance(L, UnimodularLattice) else np.asarray(L, dtype=float)


def in_K_eps(L, eps: float) -> bool:
    """True iff the first minimum of ``L`` is at least ``eps``."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return first_minimum(_basis_of(L))[0] >= eps


def injectivity_constant(n: int) -> float:
    return 0.5 * 2.0 ** (-n * (n - 1) / 4.0)


def injectivity_radius_lower(eps: float, n: int) -> float:
    """Lower bound ``c_n eps^n`` for the injectivity radius at lattices in K_eps.

    With ``c_n = 2^{-n(n-1)/4} / 2``: if ``L = g Z^n`` has first minimum at
    least eps and ``gamma != I`` is integral, then
    ``|g gamma g^{-1} - I|_op >= 2 c_n eps^n``. An LLL basis (delta = 3/4) of L
    has longest vector at most ``2^{n(n-1)/4} / eps^{n-1}``, and
    ``g gamma g^{-1}`` moves some basis vector b to a distinct lattice vector,
    so ``eps <= |(h - I) b| <= |h - I| |b|``.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return injectivity_constant(n) * eps**n


@dataclass(frozen=True)
class SiegelTransform:
    """``L -> sum of f(v)`` over nonzero (or primitive) vectors v of L, f a radial bump."""

    bump: BumpFunction
    primitive: bool = False

    @property
    def dim(self) -> int:
        return self.bump.dim


@dataclass(frozen=True)
class SmoothedCompactIndicator:
    """Smooth step in the first minimum: 0 below ``eps0``, 1 above ``eps0 + width``."""

    eps0: float
    width: float
    dim: int

    def __post_init__(self):
        if not (0 < self.eps0 and self.width > 0):
            raise ValueError("eps0 and width must be positive")


TestFunction = Union[SiegelTransform, SmoothedCompactIndicator]


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        return np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, a / (a + b)))


def eval_test_function(phi: TestFunction, L) -> float:
    B = _basis_of(L)
    return float(eval_batch(phi, B[None])[0])


def eval_batch(phi: TestFunction, bases: np.ndarray) -> np.ndarray:
    """Evaluate ``phi`` on a stack of bases ``(N, n, n)``."""
    bases = np.ascontiguousarray(bases, dtype=float)
    if bases.ndim == 2:
        bases = bases[None]
    if isinstance(phi, SmoothedCompactIndicator):
        lam = _kernels.first_minimum_batch(bases, LLL_DELTA)
        return smooth_step((lam - phi.eps0) / phi.width)
    b = phi.bump
    if bases.shape[-1] != b.dim:
        raise ValueError(f"lattice dimension {bases.shape[-1]} != bump dimension {b.dim}")
    out, worst = _kernels.bump_sum_batch(
        bases, np.array(b.center), b.radius, float(b.order), b.scale, phi.primitive, LLL_DELTA, MAX_ENUMERATED
    )
    if worst < 0:
        raise EnumerationOverflow(f"more than {MAX_ENUMERATED} lattice points in the support")
    return out


def haar_mean(phi: TestFunction) -> float | None:
    """Mean over the Haar probability measure, or None when no closed form is known.

    For a Siegel transform this is the integral of the bump (Siegel's mean
    value formula), divided by zeta(n) for the primitive variant.
    """
    if isinstance(phi, SiegelTransform):
        m = phi.bump.integral()
        return m / float(special.zeta(phi.dim)) if phi.primitive else m
    return None


def haar_sample_rank1(rng: np.random.Generator | int, count: int) -> np.ndarray:
    """Haar-random unimodular lattices in R^2, as bases ``(count, 2, 2)``.

    The shape ``tau = x + iy`` is drawn from the hyperbolic measure on the
    standard fundamental domain (``|x| <= 1/2``, ``|tau| >= 1``) by rejection
    from ``y ~ sqrt(3)/2 / U``; the basis is ``(1, 0)/sqrt(y)``,
    ``(x, y)/sqrt(y)`` followed by a uniform rotation.
    """
    rng = np.random.default_rng(rng)
    if count < 0:
        raise ValueError("count must be >= 0")
    xs = np.empty(0)
    ys = np.empty(0)
    y0 = math.sqrt(3.0) / 2.0
    while xs.size < count:
        m = max(16, int(1.3 * (count - xs.size)) + 16)
        x = rng.uniform(-0.5, 0.5, m)
        y = y0 / (1.0 - rng.random(m))
        keep = x * x + y * y >= 1.0
        xs = np.concatenate([xs, x[keep]])
        ys = np.concatenate([ys, y[keep]])
    xs, ys = xs[:count], ys[:count]
    r = 1.0 / np.sqrt(ys)
    B = np.zeros((count, 2, 2))
    B[:, 0, 0] = r
    B[:, 0, 1] = xs * r
    B[:, 1, 1] = ys * r
    ang = rng.uniform(0.0, 2 * math.pi, count)
    c, s = np.cos(ang), np.sin(ang)
    K = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    return K @ B
