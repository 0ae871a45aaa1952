"""Unimodular lattices, compact sets K_eps, Siegel transforms and rank-one Haar sampling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from _util import random_sl_int, random_sl_real
from horolab import lattice
from horolab.errors import EnumerationOverflow
from horolab.linalg import bump_function
from horolab.reduction import first_minimum, first_minimum_batch


def test_lattice_validation_and_json():
    with pytest.raises(ValueError):
        lattice.UnimodularLattice(np.diag([2.0, 1.0]))
    rng = np.random.default_rng(0)
    L = lattice.UnimodularLattice(random_sl_real(rng, 3))
    M = lattice.UnimodularLattice.from_json(L.to_json())
    assert np.array_equal(L.basis, M.basis)
    with pytest.raises(ValueError):
        L.basis[0, 0] = 1.0


def test_in_K_eps_examples():
    assert lattice.in_K_eps(lattice.UnimodularLattice.standard(3), 0.5)
    L = lattice.UnimodularLattice(np.diag([math.exp(-1), math.e]))
    assert not lattice.in_K_eps(L, 0.5)
    lam = first_minimum(L.basis)[0]
    assert lattice.in_K_eps(L, lam)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1.0))
def test_in_K_eps_basis_invariance(seed, eps):
    rng = np.random.default_rng(seed)
    B = random_sl_real(rng, 3)
    g = random_sl_int(rng, 3, steps=6, bound=2).astype(float)
    if abs(first_minimum(B)[0] - eps) > 1e-9:
        assert lattice.in_K_eps(B, eps) == lattice.in_K_eps(B @ g, eps)


def test_K_eps_exhausts():
    rng = np.random.default_rng(1)
    for _ in range(20):
        B = random_sl_real(rng, 3, scale=5.0)
        eps = [2.0**-k for k in range(0, 40)]
        flags = [lattice.in_K_eps(B, e) for e in eps]
        assert flags[-1] and flags == sorted(flags)


def test_injectivity_power_law():
    for n in (2, 3, 4):
        a, b = lattice.injectivity_radius_lower(0.1, n), lattice.injectivity_radius_lower(0.2, n)
        assert a < b
        assert math.log(b / a) / math.log(2.0) == pytest.approx(n)


def test_injectivity_bound_holds_on_random_pairs():
    rng = np.random.default_rng(2)
    worst = np.inf
    for _ in range(1000):
        n = int(rng.integers(2, 4))
        g = random_sl_real(rng, n, scale=float(rng.uniform(0.3, 3.0)))
        gam = random_sl_int(rng, n, steps=int(rng.integers(1, 6)), bound=2).astype(float)
        if np.array_equal(gam, np.eye(n)):
            continue
        eps = min(first_minimum(g)[0], 1.0)
        h = g @ gam @ np.linalg.inv(g)
        dist = np.linalg.norm(h - np.eye(n), 2)
        worst = min(worst, dist / (2 * lattice.injectivity_radius_lower(eps, n)))
    assert worst >= 1.0


def test_siegel_transform_examples():
    small = lattice.SiegelTransform(bump_function([0.0, 0.0, 0.0], 0.5))
    assert lattice.eval_test_function(small, np.eye(3)) == 0.0
    f = bump_function([0.0, 0.0], 1.5)
    phi = lattice.SiegelTransform(f)
    pts = [(x, y) for x in (-1, 0, 1) for y in (-1, 0, 1) if (x, y) != (0, 0)]
    want = math.fsum(f([x, y]) for x, y in pts)
    assert lattice.eval_test_function(phi, np.eye(2)) == pytest.approx(want, rel=1e-13)
    prim = lattice.SiegelTransform(bump_function([0.0, 0.0], 2.5), primitive=True)
    g = bump_function([0.0, 0.0], 2.5)
    want = math.fsum(g([x, y]) for x in range(-3, 4) for y in range(-3, 4) if math.gcd(x, y) == 1)
    assert lattice.eval_test_function(prim, np.eye(2)) == pytest.approx(want, rel=1e-13)


def test_siegel_transform_offcenter_bump():
    f = bump_function([0.3, -0.2], 1.2, order=2)
    phi = lattice.SiegelTransform(f)
    rng = np.random.default_rng(3)
    B = random_sl_real(rng, 2)
    pts = [B @ np.array([x, y]) for x in range(-30, 31) for y in range(-30, 31) if (x, y) != (0, 0)]
    want = math.fsum(f(p) for p in pts)
    assert lattice.eval_test_function(phi, B) == pytest.approx(want, rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_siegel_transform_gamma_invariant(seed, primitive):
    rng = np.random.default_rng(seed)
    phi = lattice.SiegelTransform(bump_function([0.2, 0.0, -0.1], 1.7), primitive)
    B = random_sl_real(rng, 3)
    # short words keep B @ g exactly representable up to a few ulps
    g = random_sl_int(rng, 3, steps=4, bound=2).astype(float)
    a, b = lattice.eval_test_function(phi, B), lattice.eval_test_function(phi, B @ g)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_enumeration_overflow():
    phi = lattice.SiegelTransform(bump_function([0.0, 0.0], 2000.0))
    with pytest.raises(EnumerationOverflow):
        lattice.eval_test_function(phi, np.eye(2))


def test_smoothed_indicator():
    ind = lattice.SmoothedCompactIndicator(0.5, 1e-9, 2)
    assert lattice.eval_test_function(ind, np.eye(2)) == 1.0
    assert lattice.eval_test_function(ind, np.diag([0.3, 1 / 0.3])) == 0.0
    assert lattice.haar_mean(ind) is None
    s = lattice.smooth_step(np.linspace(-1, 2, 301))
    assert (np.diff(s) >= 0).all() and s[0] == 0 and s[-1] == 1


def test_haar_mean():
    assert lattice.haar_mean(lattice.SiegelTransform(bump_function([0.0, 0.0], 1.0, mass=0.0))) == 0.0
    assert lattice.haar_mean(lattice.SiegelTransform(bump_function([0.0, 0.0], 1.0))) == pytest.approx(1.0, abs=1e-12)
    prim = lattice.haar_mean(lattice.SiegelTransform(bump_function([0.0, 0.0], 1.0), primitive=True))
    # zeta(2) from its series with the integral tail bound
    K = 10**6
    series = math.fsum(1.0 / k**2 for k in range(1, K + 1)) + 1.0 / K - 0.5 / K**2
    assert series == pytest.approx(math.pi**2 / 6, abs=1e-12)
    assert prim == pytest.approx(1.0 / series, abs=1e-10)
    assert float(special.zeta(3)) == pytest.approx(1.2020569031595942, abs=1e-15)


def test_haar_sampler_rank1():
    B = lattice.haar_sample_rank1(7, 2000)
    assert B.shape == (2000, 2, 2)
    assert np.abs(np.linalg.det(B) - 1).max() < 1e-12
    assert np.array_equal(B, lattice.haar_sample_rank1(7, 2000))


def test_haar_sampler_cusp_probability():
    # P(first minimum < eps) = 3 eps^2 / pi for small eps
    lam = first_minimum_batch(lattice.haar_sample_rank1(8, 400_000))
    for eps in (0.2, 0.4):
        p = float((lam < eps).mean())
        want = 3 * eps**2 / math.pi
        assert abs(p - want) <= 4 * math.sqrt(want * (1 - want) / lam.size)


@pytest.mark.slow
def test_haar_sampler_siegel_mean():
    phi = lattice.SiegelTransform(bump_function([0.0, 0.0], 1.0), primitive=True)
    vals = lattice.eval_batch(phi, lattice.haar_sample_rank1(9, 1_000_000))
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - lattice.haar_mean(phi)) <= 3 * se
