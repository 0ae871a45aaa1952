"""Cartan directions, roots, weights and cones."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horolab import lie
from horolab.errors import NotInCone

A0 = lie.CartanVector.diagonal((6, 7, -12, 9, 10))


def traceless(n_min=2, n_max=6):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.floats(-10, 10, allow_nan=False), min_size=n, max_size=n)
    ).map(lambda v: lie.CartanVector(tuple(np.array(v) - math.fsum(v) / len(v)), traceless=False))


def test_cartan_vector_validation():
    with pytest.raises(ValueError):
        lie.CartanVector((1.0, 1.0))
    with pytest.raises(ValueError):
        lie.CartanVector((0.0,))
    with pytest.raises(ValueError):
        lie.CartanVector((math.inf, -math.inf))
    assert lie.CartanVector.diagonal((1, 1)).trace == 2


def test_multiplicative_input_takes_logs():
    x = lie.CartanVector.from_multiplicative([math.e**2, 1.0, math.e**-2])
    assert x.entries == pytest.approx((2, 0, -2), abs=1e-15)
    with pytest.raises(ValueError):
        lie.CartanVector.from_multiplicative([1.0, -1.0])


def test_roots():
    assert lie.eval_root(lie.zero(4), 2) == 0
    assert lie.eval_root(A0, 2) == 19
    assert lie.eval_root(lie.CartanVector((2, 0, -2)), 1) == 2
    with pytest.raises(IndexError):
        lie.eval_root(A0, 5)
    with pytest.raises(IndexError):
        lie.eval_weight(A0, 0)


def test_weights():
    assert lie.weights(A0) == [6, 13, 1, 10]
    assert lie.weights(lie.zero(3)) == [0, 0]
    assert lie.eval_weight(lie.CartanVector((2, 0, -2)), 2) == 2


def test_a0_cones():
    assert lie.cone_membership(A0, lie.ConeKind.convergence())
    assert not lie.cone_membership(A0, lie.ConeKind.cj_union())
    assert not lie.cone_membership(A0, lie.ConeKind.weyl_chamber())
    assert not lie.cone_membership(lie.zero(3), lie.ConeKind.weyl_chamber())


def test_depth():
    assert lie.depth(A0) == 1
    assert lie.depth(lie.zero(4)) == 0
    assert lie.depth(lie.CartanVector((2, 0, -2))) == 2
    assert lie.t_min(A0) == lie.depth(A0)


def test_convergence_cone_with_E():
    x = lie.CartanVector((-1.0, 2.0, -1.0))
    assert not lie.cone_membership(x, lie.ConeKind.convergence())
    assert lie.cone_membership(x, lie.ConeKind.convergence({1}))
    with pytest.raises(ValueError):
        lie.cone_membership(x, lie.ConeKind.convergence({3}))


def test_cj_is_non_strict():
    x = lie.CartanVector((1.0, 1.0, -2.0))
    assert lie.in_cj(x, 2)
    assert lie.in_cj(x, 1)
    assert not lie.in_cj(lie.CartanVector((1.0, 2.0, -3.0)), 1)
    assert lie.cone_membership(lie.zero(3), lie.ConeKind.cj(1))


def test_f_projection_examples():
    x = lie.CartanVector((2, 0, -2))
    assert lie.f_projection(x, {1}).entries == (2, -2, 0)
    assert lie.f_projection(x, {1, 2}).entries == x.entries
    assert lie.f_projection(x, ()).entries == (0, 0, 0)


def test_rho_delta():
    assert lie.rho_delta(2).entries == (1, -1)
    assert lie.rho_delta(3).entries == (2, 0, -2)
    for n in range(2, 8):
        assert lie.cone_membership(lie.rho_delta(n), lie.ConeKind.weyl_chamber())


def test_factor_flow_examples():
    th = lie.CartanVector((1 / math.sqrt(2), -1 / math.sqrt(2)))
    a, b = lie.factor_flow(th, 0.3)
    # rank one: both parts are positive multiples of theta
    ca = a.entries[0] / th.entries[0]
    assert 0 < ca < 1
    assert np.allclose(a.array, ca * th.array) and np.allclose(b.array, (1 - ca) * th.array)
    th5 = A0.normalized()
    a, b = lie.factor_flow(th5)
    assert lie.cone_membership(a, lie.ConeKind.weyl_chamber())
    assert min(lie.weights(b)) >= 0
    assert np.allclose((a + b).array, th5.array)
    with pytest.raises(NotInCone):
        lie.factor_flow(lie.CartanVector((-1.0, 1.0)))
    with pytest.raises(ValueError):
        lie.factor_flow(th, 1.0)


def test_block_structure():
    assert lie.block_structure({1}, 3).block_sizes == (1, 2)
    assert lie.block_structure((), 4).block_sizes == (4,)
    assert lie.block_structure({2, 3}, 5).block_sizes == (2, 1, 2)
    assert lie.block_structure({2, 3}, 5).boundaries == (2, 3)
    assert lie.parabolic_blocks((), 3).block_sizes == (1, 1, 1)


def test_root_data_pair():
    rd = lie.RootData(4)
    assert rd.pair({1}, {1, 2}) == (frozenset({1}), frozenset({1, 2}))
    with pytest.raises(ValueError):
        rd.pair({1, 3}, {1})


@settings(max_examples=300, deadline=None)
@given(traceless())
def test_depth_is_min_weight(x):
    assert lie.depth(x) == min(lie.eval_weight(x, i) for i in range(1, x.n))


@settings(max_examples=300, deadline=None)
@given(traceless())
def test_ctilde_is_union_of_cj(x):
    union = any(lie.cone_membership(x, lie.ConeKind.cj(j)) for j in range(1, x.n))
    assert lie.cone_membership(x, lie.ConeKind.cj_union()) == union


@settings(max_examples=300, deadline=None)
@given(traceless())
def test_weyl_chamber_inside_convergence_cone(x):
    if lie.cone_membership(x, lie.ConeKind.weyl_chamber()):
        assert lie.cone_membership(x, lie.ConeKind.convergence())


@settings(max_examples=300, deadline=None)
@given(traceless(), st.data())
def test_f_projection_weights_and_idempotence(x, data):
    F = data.draw(st.sets(st.integers(1, x.n - 1)))
    y = lie.f_projection(x, F)
    assert abs(y.trace) <= 1e-12 * max(1.0, float(np.abs(x.array).max()))
    for i in range(1, x.n):
        want = lie.eval_weight(x, i) if i in F else 0.0
        assert lie.eval_weight(y, i) == pytest.approx(want, abs=1e-12 * max(1, abs(want)) + 1e-11)
    assert np.allclose(lie.f_projection(y, F).array, y.array, atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(traceless(), st.floats(0.05, 0.95))
def test_factor_flow_postconditions(x, c):
    if x.norm() < 1e-6:
        return
    th = lie.CartanVector(tuple(x.entries)).normalized() if abs(x.trace) < 1e-12 else x.normalized()
    if lie.depth(th) <= 1e-9:
        with pytest.raises(NotInCone):
            lie.factor_flow(th, c)
        return
    a, b = lie.factor_flow(th, c)
    assert abs(a.trace) <= 1e-12 and abs(b.trace) <= 1e-12
    assert lie.cone_membership(a, lie.ConeKind.weyl_chamber())
    assert min(lie.weights(b)) >= 0
    assert np.allclose((a + b).array, th.array, atol=1e-12)
    assert a.norm() == pytest.approx(np.dot(a.array, lie.rho_delta(th.n).normalized().array))
