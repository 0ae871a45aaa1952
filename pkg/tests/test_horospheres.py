"""Coset keys, lift enumeration and exact horosphere counts."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import random_sl_int
from horolab import horospheres as hs
from horolab.errors import BoundTooSmall, InsufficientData, UnsupportedRank
from horolab.linalg import int_det, iwasawa_a_part


def _brute_sl2(box):
    """One matrix per first column among integer 2x2 matrices with entries <= box and det 1."""
    ax = np.arange(-box, box + 1)
    B, D = np.meshgrid(ax, ax, indexing="ij")
    B, D = B.ravel(), D.ravel()
    out = {}
    for a in ax:
        for c in ax:
            hit = np.flatnonzero(a * D - B * c == 1)
            if hit.size:
                out[(int(a), int(c))] = [[int(a), int(B[hit[0]])], [int(c), int(D[hit[0]])]]
    return out


def _log_norm(gamma, a0):
    a = iwasawa_a_part(np.asarray(gamma, dtype=float) @ np.diag(a0))
    return float(np.linalg.norm(np.log(a)))


def test_keys_rank_two_bound_one():
    keys = {tuple(int(x) for x in k) for k in hs.coset_keys(2, 1)}
    assert keys == {(1, 0), (0, 1), (1, 1), (1, -1), (-1, 0), (0, -1), (-1, 1), (-1, -1)}
    brute = {k for k in _brute_sl2(2) if max(abs(k[0]), abs(k[1])) <= 1}
    assert keys == brute


def test_keys_rank_two_match_brute_force():
    keys = {tuple(int(x) for x in k) for k in hs.coset_keys(2, 20)}
    assert keys == set(_brute_sl2(20))


def test_keys_rank_three_contain_small_matrices():
    keys = {tuple(int(x) for x in k) for k in hs.coset_keys(3, 2)}
    seen = set()
    for entries in itertools.product((-1, 0, 1), repeat=9):
        g = np.array(entries, dtype=object).reshape(3, 3)
        if int_det(g) == 1:
            seen.add(hs.coset_key(g))
    assert seen <= keys and len(seen) > 100


def test_enumerate_cosets_contract():
    for n, b in ((2, 6), (3, 2)):
        reps = list(hs.enumerate_cosets(n, b))
        assert all(int_det(r.gamma) == 1 for r in reps)
        keys = [r.key for r in reps]
        assert len(keys) == len(set(keys))
        assert sorted(keys) == sorted(tuple(int(x) for x in k) for k in hs.coset_keys(n, b))
    with pytest.raises(UnsupportedRank):
        hs.coset_keys(4, 1)


def test_coset_in_ball_examples():
    spec = hs.HorosphereSpec.identity(2)
    assert hs.coset_in_ball(hs.CosetRep(np.eye(2, dtype=int)), spec, 1e-9)
    rot = hs.CosetRep([[0, -1], [1, 0]])
    assert rot.key == (0, 1)
    assert all(hs.coset_in_ball(rot, spec, R) for R in (1e-9, 0.1, 3.0))
    d = (math.e, 1 / math.e)
    assert not hs.coset_in_ball(hs.CosetRep(np.eye(2, dtype=int)), hs.HorosphereSpec(d), 1.4)
    assert hs.coset_in_ball(hs.CosetRep(np.eye(2, dtype=int)), hs.HorosphereSpec(d), 1.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_key_and_ball_invariant_under_unipotents(seed, n):
    rng = np.random.default_rng(seed)
    g = random_sl_int(rng, n, steps=6, bound=2)
    u = np.eye(n, dtype=object)
    for i, j in zip(*np.triu_indices(n, 1)):
        u[i, j] = int(rng.integers(-5, 6))
    a0 = np.exp(rng.normal(scale=0.3, size=n))
    a0 /= a0.prod() ** (1 / n)
    spec = hs.HorosphereSpec(tuple(a0))
    r1, r2 = hs.CosetRep(g), hs.CosetRep(g.dot(u))
    assert r1.key == r2.key
    want = _log_norm(g, a0)
    got = float(hs.log_a_norms(np.array([r1.key]), spec)[0])
    assert got == pytest.approx(want, rel=1e-9, abs=1e-12)
    assert _log_norm(g.dot(u), a0) == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_lift_key_round_trip():
    for n, b in ((2, 15), (3, 3)):
        for k in hs.coset_keys(n, b):
            key = tuple(int(x) for x in k)
            g = hs.lift_key(key)
            assert int_det(g) == 1 and hs.coset_key(g) == key


def test_count_small_radius():
    assert hs.count_lifts(hs.HorosphereSpec.identity(2), [1e-9]).counts == (4,)
    assert hs.count_lifts(hs.HorosphereSpec.identity(3), [1e-9]).counts == (24,)


def test_count_rank_two_matches_brute_force():
    spec = hs.HorosphereSpec.identity(2)
    grid = [0.5 * k for k in range(1, 13)]
    ser = hs.count_lifts(spec, grid)
    # every coset meeting B(6) has first column of length <= e^{6/sqrt 2} < 70
    mats = _brute_sl2(70)
    norms = np.array([_log_norm(g, (1.0, 1.0)) for g in mats.values()])
    assert list(ser.counts) == [int((norms <= R * (1 + 1e-12)).sum()) for R in grid]
    assert list(ser.counts) == sorted(ser.counts)


def test_count_rank_two_nontrivial_a0():
    d1 = 1.7
    spec = hs.HorosphereSpec((d1, 1 / d1))
    grid = [1.0, 2.5, 4.0]
    ser = hs.count_lifts(spec, grid)
    brute = []
    for R in grid:
        b = hs.certified_bound(spec, R) + 1
        c = 0
        for a, cc in itertools.product(range(-b, b + 1), repeat=2):
            if math.gcd(a, cc) == 1 and math.sqrt(2) * abs(math.log(math.hypot(a, cc) * d1)) <= R:
                c += 1
        brute.append(c)
    assert list(ser.counts) == brute


def test_count_rank_three_monotone_and_certified():
    spec = hs.HorosphereSpec.identity(3)
    grid = [0.5, 1.0, 1.5, 2.0]
    ser = hs.count_lifts(spec, grid)
    assert list(ser.counts) == sorted(ser.counts)
    wider = hs.count_lifts(spec, grid, bound=hs.certified_bound(spec, 2.0) + 3)
    assert wider.counts == ser.counts
    with pytest.raises(BoundTooSmall):
        hs.count_lifts(spec, grid, bound=1)


def test_fit_growth_synthetic():
    c = 1.3
    R = [4 + 0.5 * k for k in range(10)]
    ser = hs.CountSeries(tuple(R), tuple(int(round(1e12 * math.exp(c * r))) for r in R))
    f = hs.fit_growth(ser, n=2)
    assert f.rate == pytest.approx(c, abs=1e-6)
    assert f.reference_rate == pytest.approx(math.sqrt(2))
    with pytest.raises(InsufficientData):
        hs.fit_growth(hs.CountSeries((1.0, 2.0), (3, 4)), n=2)


def test_fit_growth_rank_two():
    spec = hs.HorosphereSpec.identity(2)
    grid = [4 + 0.5 * k for k in range(13)]
    f = hs.fit_growth(hs.count_lifts(spec, grid), 4.0, 10.0, n=2)
    assert f.relative_error <= 0.1
