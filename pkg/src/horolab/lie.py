"""Roots, fundamental weights and cones of the diagonal torus of SL_n(R).

Everything is in additive coordinates: a point of the Cartan subalgebra is
the vector ``(t_1, ..., t_n)`` with ``a = diag(e^{t_1}, ..., e^{t_n})``.
Simple roots and fundamental weights are indexed from 1, so that
``eval_root(x, i) = t_i - t_{i+1}`` and ``eval_weight(x, i) = t_1 + ... + t_i``.
Subsets of the simple roots are given as iterables of these 1-based indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NotInCone

TRACE_TOL = 1e-12


@dataclass(frozen=True)
class CartanVector:
    """A diagonal direction ``(t_1, ..., t_n)``.

    By default the entries must sum to zero (a point of the Lie algebra of
    the diagonal subgroup of SL_n). ``CartanVector.diagonal`` builds an
    unconstrained diagonal vector instead; root and weight formulas apply to
    it literally.
    """

    entries: tuple[float, ...]
    traceless: bool = True

    def __post_init__(self):
        entries = tuple(float(t) for t in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) < 2:
            raise ValueError("need n >= 2 entries")
        if not all(math.isfinite(t) for t in entries):
            raise ValueError("entries must be finite")
        if self.traceless and abs(math.fsum(entries)) > TRACE_TOL * max(1.0, max(abs(t) for t in entries)):
            raise ValueError(f"entries must sum to 0, got {math.fsum(entries)!r}")

    @classmethod
    def diagonal(cls, entries: Iterable[float]) -> "CartanVector":
        return cls(tuple(entries), traceless=False)

    @classmethod
    def from_multiplicative(cls, diag: Iterable[float], traceless: bool = True) -> "CartanVector":
        """Take logs of the positive diagonal entries of ``a``."""
        values = [float(d) for d in diag]
        if any(d <= 0 for d in values):
            raise ValueError("diagonal entries of a must be positive")
        return cls(tuple(math.log(d) for d in values), traceless=traceless)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    @property
    def trace(self) -> float:
        return math.fsum(self.entries)

    def norm(self) -> float:
        return math.sqrt(math.fsum(t * t for t in self.entries))

    def normalized(self) -> "CartanVector":
        r = self.norm()
        if r == 0:
            raise ValueError("cannot normalize the zero vector")
        return CartanVector(tuple(t / r for t in self.entries), traceless=self.traceless)

    def scaled(self, c: float) -> "CartanVector":
        return CartanVector(tuple(c * t for t in self.entries), traceless=self.traceless)

    def __add__(self, other: "CartanVector") -> "CartanVector":
        _same_rank(self, other)
        return CartanVector(
            tuple(a + b for a, b in zip(self.entries, other.entries)),
            traceless=self.traceless and other.traceless,
        )

    def __sub__(self, other: "CartanVector") -> "CartanVector":
        return self + other.scaled(-1.0)


def _same_rank(x: CartanVector, y: CartanVector) -> None:
    if x.n != y.n:
        raise ValueError(f"rank mismatch: {x.n} vs {y.n}")


def zero(n: int) -> CartanVector:
    return CartanVector((0.0,) * n)


@dataclass(frozen=True)
class RootData:
    """The simple roots ``{1, ..., n-1}`` of SL_n and subsets of them."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")

    @property
    def simple_roots(self) -> frozenset[int]:
        return frozenset(range(1, self.n))

    def subset(self, indices: Iterable[int]) -> frozenset[int]:
        s = frozenset(int(i) for i in indices)
        bad = s - self.simple_roots
        if bad:
            raise ValueError(f"root indices {sorted(bad)} out of range 1..{self.n - 1}")
        return s

    def complement(self, indices: Iterable[int]) -> frozenset[int]:
        return self.simple_roots - self.subset(indices)

    def pair(self, E: Iterable[int], F: Iterable[int]) -> tuple[frozenset[int], frozenset[int]]:
        """Validate a nested pair ``E <= F``."""
        e, f = self.subset(E), self.subset(F)
        if not e <= f:
            raise ValueError(f"E={sorted(e)} is not contained in F={sorted(f)}")
        return e, f


def _check_index(x: CartanVector, i: int) -> int:
    if not 1 <= i <= x.n - 1:
        raise IndexError(f"index {i} out of range 1..{x.n - 1}")
    return i


def eval_root(x: CartanVector, i: int) -> float:
    _check_index(x, i)
    return x.entries[i - 1] - x.entries[i]


def eval_weight(x: CartanVector, i: int) -> float:
    _check_index(x, i)
    return math.fsum(x.entries[:i])


def roots(x: CartanVector) -> list[float]:
    return [eval_root(x, i) for i in range(1, x.n)]


def weights(x: CartanVector) -> list[float]:
    return [eval_weight(x, i) for i in range(1, x.n)]


def depth(x: CartanVector) -> float:
    """Minimum of the fundamental weights; positive iff x is inside the convergence cone."""
    return min(weights(x))


def t_min(x: CartanVector) -> float:
    return depth(x)


@dataclass(frozen=True)
class ConeKind:
    """Which cone to test: ``weyl``, ``convergence`` (with E), ``cj`` (with j) or ``cj_union``."""

    tag: str
    E: frozenset[int] = field(default_factory=frozenset)
    j: int | None = None

    def __post_init__(self):
        if self.tag not in ("weyl", "convergence", "cj", "cj_union"):
            raise ValueError(f"unknown cone tag {self.tag!r}")
        if self.tag == "cj" and (self.j is None or self.j < 1):
            raise ValueError("cj cone needs j >= 1")
        object.__setattr__(self, "E", frozenset(self.E))

    @classmethod
    def weyl_chamber(cls) -> "ConeKind":
        return cls("weyl")

    @classmethod
    def convergence(cls, E: Iterable[int] = ()) -> "ConeKind":
        return cls("convergence", frozenset(E))

    @classmethod
    def cj(cls, j: int) -> "ConeKind":
        return cls("cj", j=j)

    @classmethod
    def cj_union(cls) -> "ConeKind":
        return cls("cj_union")


def in_cj(x: CartanVector, j: int) -> bool:
    # non-strict on purpose: min of the first j entries >= max of the rest
    if not 1 <= j <= x.n - 1:
        raise ValueError(f"j={j} out of range 1..{x.n - 1}")
    return min(x.entries[:j]) >= max(x.entries[j:])


def cone_membership(x: CartanVector, cone: ConeKind) -> bool:
    if cone.tag == "weyl":
        return all(r > 0 for r in roots(x))
    if cone.tag == "convergence":
        RootData(x.n).subset(cone.E)
        return all(eval_weight(x, i) > 0 for i in range(1, x.n) if i not in cone.E)
    if cone.tag == "cj":
        return in_cj(x, cone.j)
    return any(in_cj(x, j) for j in range(1, x.n))


def cone_report(x: CartanVector) -> dict:
    """Membership summary used by the CLI."""
    return {
        "n": x.n,
        "entries": list(x.entries),
        "trace": x.trace,
        "roots": roots(x),
        "weights": weights(x),
        "in_A": cone_membership(x, ConeKind.weyl_chamber()),
        "in_C": cone_membership(x, ConeKind.convergence()),
        "in_Cj": [in_cj(x, j) for j in range(1, x.n)],
        "in_Ctilde": cone_membership(x, ConeKind.cj_union()),
        "depth": depth(x),
    }


def _weights_to_entries(lams: Sequence[float], n: int) -> tuple[float, ...]:
    # partial sums (lam_1, ..., lam_{n-1}, 0) -> entries
    full = list(lams) + [0.0]
    return tuple([full[0]] + [full[i] - full[i - 1] for i in range(1, n)])


def f_projection(x: CartanVector, F: Iterable[int]) -> CartanVector:
    """Traceless y with weight_i(y) = weight_i(x) for i in F and 0 otherwise."""
    Fs = RootData(x.n).subset(F)
    lams = [eval_weight(x, i) if i in Fs else 0.0 for i in range(1, x.n)]
    return CartanVector(_weights_to_entries(lams, x.n))


def rho_delta(n: int) -> CartanVector:
    """Sum of the positive roots, ``(n-1, n-3, ..., -(n-1))``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return CartanVector(tuple(float(n + 1 - 2 * k) for k in range(1, n + 1)))


def pairing(x: CartanVector, y: CartanVector) -> float:
    _same_rank(x, y)
    return math.fsum(a * b for a, b in zip(x.entries, y.entries))


def factor_flow(theta: CartanVector, c: float = 0.5) -> tuple[CartanVector, CartanVector]:
    """Split ``theta = a_dir + b_dir`` with a_dir in the open Weyl chamber.

    ``a_dir = c' * depth(theta) * rho_hat`` where ``rho_hat`` is the unit vector
    along the sum of positive roots, and ``c'`` is the largest value in
    ``(0, c]`` for which every weight of ``b_dir`` stays >= 0. Since
    ``weight_i(rho) = i (n - i)`` the constraint is linear in ``c'`` and is
    solved in closed form. Consequently ``|a_dir| = c' * depth`` with
    ``c' >= min(c, |rho| / floor(n^2 / 4))``.
    """
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    D = depth(theta)
    if D <= 0:
        raise NotInCone(f"depth {D!r} <= 0: direction is outside the convergence cone")
    n = theta.n
    rho = rho_delta(n)
    rnorm = rho.norm()
    limits = [eval_weight(theta, i) * rnorm / (D * i * (n - i)) for i in range(1, n)]
    cc = min([c] + limits)
    a_dir = rho.scaled(cc * D / rnorm)
    b_entries = tuple(t - a for t, a in zip(theta.entries, a_dir.entries))
    # clamp round-off on the binding weight so b_dir lands in the closed cone
    b_dir = CartanVector(b_entries, traceless=theta.traceless)
    bw = weights(b_dir)
    if min(bw) < 0:
        lams = [max(w, 0.0) for w in bw] + [b_dir.trace]
        b_dir = CartanVector(
            tuple([lams[0]] + [lams[i] - lams[i - 1] for i in range(1, n)]),
            traceless=theta.traceless,
        )
    return a_dir, b_dir


@dataclass(frozen=True)
class BlockStructure:
    """Diagonal block sizes ``(k_1, ..., k_{l+1})`` of a block upper-triangular group."""

    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(k) for k in self.block_sizes)
        object.__setattr__(self, "block_sizes", sizes)
        if not sizes or any(k <= 0 for k in sizes):
            raise ValueError("block sizes must be positive")

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    @property
    def boundaries(self) -> tuple[int, ...]:
        """Cumulative indices ``i_1 < ... < i_l`` where a new block starts."""
        out, s = [], 0
        for k in self.block_sizes[:-1]:
            s += k
            out.append(s)
        return tuple(out)

    def ranges(self) -> list[range]:
        out, start = [], 0
        for k in self.block_sizes:
            out.append(range(start, start + k))
            start += k
        return out

    def block_of(self) -> list[int]:
        """Block index of every coordinate."""
        return [b for b, r in enumerate(self.ranges()) for _ in r]


def block_structure(F: Iterable[int], n: int) -> BlockStructure:
    """Blocks cut at the indices in ``F``: n=5, F={2,3} gives (2, 1, 2); F empty gives (n,)."""
    idx = sorted(RootData(n).subset(F))
    cuts = [0] + idx + [n]
    return BlockStructure(tuple(b - a for a, b in zip(cuts, cuts[1:])))


def parabolic_blocks(E: Iterable[int], n: int) -> BlockStructure:
    """Blocks of the Levi factor of P_E: cut at every simple root not in E."""
    return block_structure(RootData(n).complement(E), n)
