"""Horospherical samplers, diagonal flows and Monte Carlo rate experiments.

The expanding horosphere through the identity coset is parametrized by
coordinates of the second kind: ``Theta(s) = prod exp(s_k E_{i_k j_k})`` over
the strictly upper positions in row-major order. The unit box ``[0, 1)^d`` is
a fundamental domain for the integer points (``reduce_to_box``), and
Lebesgue measure on it is the invariant probability measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import lie
from .errors import BlockTooLarge, FlowOverflow, InsufficientData, NotInCone, ReferenceMeanMissing
from .lattice import TestFunction, UnimodularLattice, eval_batch, haar_mean, haar_sample_rank1
from .lie import BlockStructure, CartanVector
from .linalg import exterior_power_batch, wedge_index
from .parallel import pmap
from .reduction import first_minimum_batch

MAX_EXPONENT = 300.0
DEFAULT_BATCH = 50_000


def upper_positions(n: int) -> list[tuple[int, int]]:
    """Strictly upper positions (0-based) in row-major order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class UnipotentCoordinates:
    """Second-kind coordinates ``s`` of a unipotent upper triangular matrix."""

    n: int
    s: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        if len(self.s) != self.n * (self.n - 1) // 2:
            raise ValueError(f"expected {self.n * (self.n - 1) // 2} coordinates")

    @property
    def in_box(self) -> bool:
        return all(0.0 <= v < 1.0 for v in self.s)

    def matrix(self) -> np.ndarray:
        return theta_matrix(np.array(self.s), self.n)


def theta_matrix(s: np.ndarray, n: int) -> np.ndarray:
    """``Theta(s)`` for one coordinate vector ``(d,)`` or a stack ``(N, d)``."""
    s = np.asarray(s, dtype=float)
    single = s.ndim == 1
    S = s[None] if single else s
    M = np.broadcast_to(np.eye(n), (S.shape[0], n, n)).copy()
    # right multiplication by I + s E_ij adds s * column i to column j
    for k, (i, j) in enumerate(upper_positions(n)):
        M[:, :, j] += S[:, k, None] * M[:, :, i]
    return M[0] if single else M


def theta_inverse(u: np.ndarray) -> np.ndarray:
    """Coordinates ``s`` with ``Theta(s) = u`` for unit upper triangular ``u``.

    ``Theta(s)`` is ``V_1 V_2 ... V_{n-1}`` with ``V_i = I + sum_j s_ij E_ij``,
    so row i of u is ``e_i + s_i @ (rows below i)``.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    parts = []
    for i in range(n - 1):
        parts.append(np.linalg.solve(u[i + 1 :, i + 1 :].T, u[i, i + 1 :]))
    return np.concatenate(parts) if parts else np.zeros(0)


def reduce_to_box(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Find integral unipotent ``gamma`` with ``u @ gamma = Theta(s)``, ``s`` in ``[0, 1)^d``.

    The lower-right block is reduced first (recursively); the first row then
    shifts by the lattice spanned by the rows of an upper unipotent matrix,
    for which the unit box is a fundamental domain.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    gamma = np.eye(n, dtype=np.int64)
    if n == 1:
        return np.zeros(0), gamma
    _, g_low = reduce_to_box(u[1:, 1:])
    gamma[1:, 1:] = g_low
    Tinv = np.linalg.inv(u[1:, 1:] @ g_low)
    w = u[0, 1:] @ g_low @ Tinv
    c = np.zeros(n - 1, dtype=np.int64)
    for k in range(n - 1):
        val = w[k] + float(c[:k] @ Tinv[:k, k])
        c[k] = -math.floor(val)
    gamma[0, 1:] = c
    s = theta_inverse(u @ gamma)
    return s, gamma


def sample_horosphere(rng: np.random.Generator | int, count: int, n: int) -> np.ndarray:
    """Uniform second-kind coordinates on ``[0, 1)^d``, shape ``(count, d)``."""
    rng = np.random.default_rng(rng)
    return rng.random((count, n * (n - 1) // 2))


@dataclass(frozen=True)
class FlowSpec:
    """Direction ``theta`` (unit norm), a time grid, and a base lattice (identity by default)."""

    theta: CartanVector
    times: tuple[float, ...]
    base: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if abs(self.theta.norm() - 1.0) > 1e-12:
            raise ValueError(f"theta must have unit norm, got {self.theta.norm()!r}")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if self.base is not None:
            UnimodularLattice(self.base)

    @property
    def n(self) -> int:
        return self.theta.n

    @property
    def depth(self) -> float:
        return lie.depth(self.theta)

    def base_basis(self) -> np.ndarray:
        return np.eye(self.n) if self.base is None else np.asarray(self.base, dtype=float)


def flow_factors(x: CartanVector, t: float) -> np.ndarray:
    e = t * x.array
    if np.any(np.abs(e) > MAX_EXPONENT):
        raise FlowOverflow(f"|t * x_i| exceeds {MAX_EXPONENT}: max {np.max(np.abs(e))!r}")
    return np.exp(e)


def translate(L, x: CartanVector, t: float):
    """Left translate by ``exp(t x)``; accepts a lattice, a basis, or a stack of bases."""
    d = flow_factors(x, t)
    if isinstance(L, UnimodularLattice):
        return UnimodularLattice(d[:, None] * L.basis)
    B = np.asarray(L, dtype=float)
    return d[:, None] * B


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _batches(count: int, size: int) -> list[int]:
    full, rest = divmod(count, size)
    return [size] * full + ([rest] if rest else [])


def _horosphere_bases(rng, m: int, flow: FlowSpec) -> np.ndarray:
    s = sample_horosphere(rng, m, flow.n)
    return theta_matrix(s, flow.n) @ flow.base_basis()


@dataclass(frozen=True)
class EscapeRow:
    t: float
    eps: float
    fraction: float
    stderr: float
    n_samples: int


def escape_mass(
    flow: FlowSpec, eps_grid: Sequence[float], count: int, seed: int, batch: int = DEFAULT_BATCH
) -> list[EscapeRow]:
    """Fraction of the translated horosphere outside K_eps, for every (t, eps).

    All eps at a given t share one sample, so each row is exactly monotone in eps.
    """
    if flow.depth <= 0:
        raise NotInCone("flow direction must have positive depth")
    if count <= 0:
        raise ValueError("count must be positive")
    eps = np.asarray(sorted(float(e) for e in eps_grid))
    rows: list[EscapeRow] = []
    for ti, t in enumerate(flow.times):
        d = flow_factors(flow.theta, t)

        def job(bm, ti=ti, d=d):
            bases = d[:, None] * _horosphere_bases(_stream(seed, ti, bm[0]), bm[1], flow)
            return np.searchsorted(np.sort(first_minimum_batch(bases)), eps, side="left")

        hits = np.sum(pmap(job, enumerate(_batches(count, batch))), axis=0)
        for e, h in zip(eps, hits):
            p = h / count
            rows.append(EscapeRow(t, float(e), float(p), math.sqrt(p * (1 - p) / count), count))
    return rows


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_se: float
    ci_low: float
    ci_high: float
    r2: float
    points: int


def fit_line(x, y, w=None, level: float = 0.95) -> LineFit:
    """(Weighted) least squares line with a t-based confidence interval for the slope."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = x.size
    if k < 3:
        raise InsufficientData(f"need at least 3 points, got {k}")
    w = np.ones(k) if w is None else np.asarray(w, dtype=float)
    W = w / w.sum()
    xm, ym = W @ x, W @ y
    sxx = W @ (x - xm) ** 2
    if sxx <= 0:
        raise InsufficientData("x values are all equal")
    slope = (W @ ((x - xm) * (y - ym))) / sxx
    icpt = ym - slope * xm
    resid = y - icpt - slope * x
    syy = W @ (y - ym) ** 2
    r2 = 1.0 - (W @ resid**2) / syy if syy > 0 else 1.0
    # residual variance for unit weight w, scaled to the supplied weights
    s2 = (w @ resid**2) / (k - 2)
    se = math.sqrt(s2 / (w @ (x - xm) ** 2))
    q = stats.t.ppf(0.5 + level / 2, k - 2)
    return LineFit(float(slope), float(icpt), float(se), float(slope - q * se), float(slope + q * se), float(r2), k)


def fit_escape(rows: Iterable[EscapeRow], t: float) -> LineFit:
    """Power law ``fraction ~ eps^kappa`` at time t, weighted by binomial variance of the log."""
    sel = [r for r in rows if r.t == t and r.fraction > 0]
    x = np.log([r.eps for r in sel])
    y = np.log([r.fraction for r in sel])
    w = np.array([r.n_samples * r.fraction / max(1.0 - r.fraction, 1e-300) for r in sel])
    return fit_line(x, y, w)


@dataclass(frozen=True)
class DiscrepancyPoint:
    t: float
    estimate: float
    signed: float
    stderr: float
    n_samples: int


@dataclass(frozen=True)
class DiscrepancySeries:
    points: tuple[DiscrepancyPoint, ...]
    depth: float
    reference_mean: float
    window: tuple[float, ...]
    fit: LineFit | None

    @property
    def delta_hat(self) -> float | None:
        return None if self.fit is None else -self.fit.slope

    @property
    def delta_ci(self) -> tuple[float, float] | None:
        return None if self.fit is None else (-self.fit.ci_high, -self.fit.ci_low)


def fit_window(points: Sequence[DiscrepancyPoint], depth: float, z: float = 1.96) -> list[DiscrepancyPoint]:
    """Points with ``t * depth >= 1`` up to the first one whose CI reaches 0."""
    out = []
    for p in points:
        if p.t * depth < 1.0:
            continue
        if p.estimate <= z * p.stderr:
            break
        out.append(p)
    return out


def fit_discrepancy(points: Sequence[DiscrepancyPoint], depth: float) -> tuple[list[DiscrepancyPoint], LineFit | None]:
    win = fit_window(points, depth)
    if len(win) < 3:
        return win, None
    x = [p.t * depth for p in win]
    y = [math.log(p.estimate) for p in win]
    return win, fit_line(x, y)


def discrepancy_series(
    flow: FlowSpec,
    phi: TestFunction,
    count: int,
    seed: int,
    reference_mean: float | None = None,
    batch: int = DEFAULT_BATCH,
) -> DiscrepancySeries:
    """Monte Carlo ``|mean of phi over the translated horosphere - Haar mean|`` per t.

    The decay rate is fitted as ``log discrepancy ~ -delta * t * depth``.
    """
    ref = haar_mean(phi) if reference_mean is None else float(reference_mean)
    if ref is None:
        raise ReferenceMeanMissing("no analytic mean for this test function; pass reference_mean")
    if count < 2:
        raise ValueError("count must be >= 2")
    pts = []
    for ti, t in enumerate(flow.times):
        d = flow_factors(flow.theta, t)

        def job(bm, ti=ti, d=d):
            bases = d[:, None] * _horosphere_bases(_stream(seed, ti, bm[0]), bm[1], flow)
            vals = eval_batch(phi, bases) - ref
            return math.fsum(vals), math.fsum(vals * vals)

        sums = pmap(job, enumerate(_batches(count, batch)))
        s1 = [a for a, _ in sums]
        s2 = [b for _, b in sums]
        mean = math.fsum(s1) / count
        var = max(math.fsum(s2) / count - mean * mean, 0.0) * count / (count - 1)
        pts.append(DiscrepancyPoint(t, abs(mean), mean, math.sqrt(var / count), count))
    win, fit = fit_discrepancy(pts, flow.depth)
    return DiscrepancySeries(tuple(pts), flow.depth, ref, tuple(p.t for p in win), fit)


# ---------------------------------------------------------------- growth


def _ray_points(d: int, r_steps: int, extra: int, seed: int) -> np.ndarray:
    """Deterministic set of points in the closed unit ball of R^d: a grid plus seeded random points."""
    if d == 0:
        return np.zeros((1, 0))
    steps = r_steps
    while (2 * steps + 1) ** d > 200_000 and steps > 1:
        steps -= 1
    ax = np.arange(-steps, steps + 1) / steps
    grid = np.array(list(product(ax, repeat=d)))
    grid = grid[np.sum(grid * grid, axis=1) <= 1.0 + 1e-12]
    rng = _stream(seed, 0)
    g = rng.normal(size=(extra, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    g *= rng.random(extra)[:, None] ** (1.0 / d)
    return np.vstack([grid, g])


def _poly_max_on_interval(coef: np.ndarray, r: float) -> np.ndarray:
    """Max of each polynomial (rows, highest degree first) over ``[0, r]``."""
    deg = coef.shape[1] - 1
    vals0 = coef[:, -1]
    lam = np.full(coef.shape[0], r)
    valr = _horner(coef, lam)
    best = np.maximum(vals0, valr)
    if deg >= 2:
        der = coef[:, :-1] * np.arange(deg, 0, -1)
        for k in range(coef.shape[0]):
            roots = np.roots(der[k])
            roots = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real
            roots = roots[(roots > 0) & (roots < r)]
            if roots.size:
                best[k] = max(best[k], float(np.max(np.polyval(coef[k], roots))))
    return best


def _horner(coef: np.ndarray, x: np.ndarray) -> np.ndarray:
    acc = np.zeros(coef.shape[0])
    for c in coef.T:
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class GrowthResult:
    times: tuple[float, ...]
    log_sup: tuple[float, ...]
    log_nosup: tuple[float, ...]
    rate_sup: float
    rate_nosup: float
    weight_slope: float
    alpha_hat: float
    r: float
    n_points: int


def growth_slope(
    flow: FlowSpec,
    j: int,
    r: float,
    v: Sequence[float],
    sample_count: int = 1000,
    seed: int = 0,
    grid_steps: int = 8,
) -> GrowthResult:
    """Exponential rate in t of ``sup_{u in B_U(r)} |Lambda^j(g_t u) v|``.

    ``B_U(r)`` is the ball of radius r in second-kind coordinates. The sup is
    taken along the rays ``lambda p`` (``0 <= lambda <= r``) through a fixed
    point set p in the unit ball: a grid of step 1/grid_steps (coarsened in
    high dimension) plus ``sample_count`` seeded random points. Along a ray
    the squared norm is a polynomial in lambda, maximized exactly. The result
    is a lower bound for the true sup and is exactly monotone in r.
    """
    n = flow.n
    if flow.depth <= 0:
        raise NotInCone("flow direction must have positive depth")
    idx = wedge_index(n, j)
    v = np.asarray(v, dtype=float)
    if v.shape != (len(idx),) or not np.any(v):
        raise ValueError(f"v must be a nonzero vector of length {len(idx)}")
    if r < 0:
        raise ValueError("r must be >= 0")
    d = n * (n - 1) // 2
    P = _ray_points(d, grid_steps, sample_count, seed)
    deg = 2 * j * (n - 1)
    # exact coefficients of c_I(lambda) = (Lambda^j Theta(lambda p) v)_I from deg/2+1 nodes
    half = j * (n - 1)
    nodes = np.cos(np.pi * (np.arange(half + 1) + 0.5) / (half + 1)) * max(r, 1.0) / 2 + max(r, 1.0) / 2
    vals = np.empty((P.shape[0], half + 1, len(idx)))
    for k, lam in enumerate(nodes):
        W = exterior_power_batch(theta_matrix(lam * P, n), j)
        vals[:, k, :] = W @ v
    V = np.vander(nodes, half + 1)
    coef = np.linalg.solve(V[None, None], vals.transpose(0, 2, 1)[..., None])[..., 0]  # (P, I, half+1)
    wts = np.array([math.fsum(flow.theta.entries[i] for i in I) for I in idx])
    log_sup, log_nosup = [], []
    for t in flow.times:
        scale = np.exp(2 * t * wts)
        sq = np.zeros((P.shape[0], deg + 1))
        for I in range(len(idx)):
            sq += scale[I] * np.array([np.convolve(c, c) for c in coef[:, I, :]])
        best = _poly_max_on_interval(sq, r)
        log_sup.append(0.5 * math.log(float(np.max(best))))
        log_nosup.append(0.5 * math.log(float(scale @ (v * v))))
    ts = np.array(flow.times)
    rs = np.polyfit(ts, log_sup, 1)[0] if len(ts) >= 2 else float("nan")
    rn = np.polyfit(ts, log_nosup, 1)[0] if len(ts) >= 2 else float("nan")
    ws = lie.eval_weight(flow.theta, j)
    return GrowthResult(
        tuple(ts), tuple(log_sup), tuple(log_nosup), float(rs), float(rn), ws, float(rs) / flow.depth, r, P.shape[0]
    )


# ---------------------------------------------------------------- parabolic samplers


def w_block_jacobian(x: CartanVector, blocks: BlockStructure) -> float:
    """Determinant of left multiplication by ``exp(x)`` on the block-upper (W) coordinates.

    Row i of every entry above the diagonal blocks is dilated by ``e^{x_i}``,
    so the determinant is ``exp(sum_b (sum of x over block b) * (n - K_b))``
    with ``K_b`` the number of coordinates up to and including block b.
    """
    if blocks.n != x.n:
        raise ValueError("block structure and x have different sizes")
    total, K = 0.0, 0
    terms = []
    for rng_b in blocks.ranges():
        K += len(rng_b)
        terms.append(math.fsum(x.entries[i] for i in rng_b) * (x.n - K))
    total = math.fsum(terms)
    return math.exp(total)


def w_positions(blocks: BlockStructure) -> list[tuple[int, int]]:
    """Entries above the diagonal blocks, row-major."""
    b = blocks.block_of()
    n = blocks.n
    return [(i, j) for i in range(n) for j in range(i + 1, n) if b[j] > b[i]]


def sample_mu_E(E: Iterable[int], n: int, rng: np.random.Generator | int, count: int) -> np.ndarray:
    """Lattices ``m w Z^n`` for the invariant probability measure on ``Q_E Gamma``.

    ``m`` is block diagonal with independent Haar-random blocks (blocks of size
    1 are trivial, size 2 uses ``haar_sample_rank1``); ``w`` is block upper
    unipotent with entries uniform on ``[0, 1)``. ``E`` empty gives the
    horosphere sampler.
    """
    Es = lie.RootData(n).subset(E)
    rng = np.random.default_rng(rng)
    if not Es:
        return theta_matrix(sample_horosphere(rng, count, n), n)
    blocks = lie.parabolic_blocks(Es, n)
    if max(blocks.block_sizes) > 2:
        raise BlockTooLarge(f"blocks {blocks.block_sizes}: only sizes 1 and 2 are supported")
    out = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    for rb in blocks.ranges():
        if len(rb) == 2:
            a, b = rb[0], rb[1]
            out[:, a : b + 1, a : b + 1] = haar_sample_rank1(rng, count)
    Wm = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    pos = w_positions(blocks)
    if pos:
        U = rng.random((count, len(pos)))
        for k, (i, j) in enumerate(pos):
            Wm[:, i, j] = U[:, k]
    return out @ Wm
