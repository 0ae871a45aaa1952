"""Lattice reduction and exact shortest vectors.

Bases are column matrices: the lattice is ``B @ Z^n``. LLL (delta = 0.99)
brings the basis close to orthogonal; Fincke-Pohst enumeration then finds a
shortest vector exactly, starting from the shortest reduced basis vector as
the search radius.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .errors import DimensionTooLarge
from .linalg import exterior_power

LLL_DELTA = 0.99
MAX_WEDGE_DIM = 10


def _as_basis(B) -> np.ndarray:
    B = np.array(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("expected a square basis matrix")
    return np.ascontiguousarray(B)


def lll_reduce(B, delta: float = LLL_DELTA) -> tuple[np.ndarray, np.ndarray]:
    """LLL-reduce the columns of ``B``.

    Returns
    -------
    reduced, U
        ``reduced = B @ U`` with ``U`` an integer matrix of determinant +-1.
    """
    R = _as_basis(B)
    n = R.shape[1]
    U = np.eye(n, dtype=np.int64)
    if _kernels.lll_inplace(R, U, float(delta)) < 0:
        raise RuntimeError("LLL did not converge")
    return R, U


def first_minimum(B) -> tuple[float, np.ndarray]:
    """Length of a shortest nonzero vector and its integer coordinates in ``B``."""
    R, U = lll_reduce(B)
    sq, x = _kernels.shortest_vector(R)
    coords = U @ x
    v = np.asarray(B, dtype=float) @ coords
    return float(math.sqrt(float(v @ v))), coords


def first_minimum_batch(bases: np.ndarray) -> np.ndarray:
    """First minima of a stack of bases ``(N, n, n)``."""
    bases = np.ascontiguousarray(bases, dtype=float)
    return _kernels.first_minimum_batch(bases, LLL_DELTA)


def shortest_vector_wedge(B, j: int, max_dim: int = MAX_WEDGE_DIM) -> float:
    """Shortest nonzero vector of the lattice ``Lambda^j(B) Z^{C(n,j)}``.

    Decomposable and non-decomposable integer wedge vectors are both allowed.
    """
    B = _as_basis(B)
    n = B.shape[0]
    if not 1 <= j <= n - 1:
        raise ValueError(f"j={j} out of range 1..{n - 1}")
    if math.comb(n, j) > max_dim:
        raise DimensionTooLarge(f"exterior power has dimension {math.comb(n, j)} > {max_dim}")
    W = exterior_power(B, j)
    return first_minimum(W)[0]
