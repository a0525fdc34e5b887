import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import bisect

from zaremba import barrier as bar
from zaremba import coeffs
from zaremba import geometry as geo
from zaremba.errors import BarrierError

E3 = geo.VectorField.constant([0, 0, 1], math.pi / 4)


def test_barrier_eval_examples():
    spec = bar.BarrierSpec(1.0, 0.25, 1.1, 1.0, np.zeros(3))
    assert bar.barrier_eval(spec, np.array([1.1, 0, 0])) == pytest.approx(0.0, abs=1e-15)
    assert bar.barrier_eval(spec, np.array([0.25, 0, 0])) == pytest.approx(1 - 0.25 / 1.1)
    assert bar.barrier_eval(spec, np.array([0, 1.0, 0])) == pytest.approx(0.25 - 0.25 / 1.1, abs=1e-12)
    with pytest.raises(BarrierError):
        bar.barrier_eval(spec, np.zeros(3))


def test_spec_rejects_bad_parameters():
    for args in [(0.0, 0.25, 1.1), (1.0, 0.5, 1.1), (1.0, 0.25, 0.9), (1.0, 0.25, 1.1, -1.0)]:
        with pytest.raises(BarrierError):
            bar.BarrierSpec(*args)


def test_radial_L_examples():
    assert bar.radial_L_apply(coeffs.identity(), 2.0, np.array([1.0, 0, 0])) == pytest.approx(-2.0)
    field = coeffs.diag([1.0, 2.0, 3.0])
    s = coeffs.e1(field, np.zeros((1, 3))) - 2
    assert abs(bar.radial_L_apply(field, s, np.array([0.7, 0, 0]))) <= 1e-10
    with pytest.raises(BarrierError):
        bar.radial_L_apply(field, 1.0, np.zeros(3))


@settings(max_examples=40, deadline=None)
@given(x=st.tuples(*[st.floats(-3, 3)] * 3), d=st.tuples(*[st.floats(0.2, 5.0)] * 3),
       extra=st.floats(0.0, 2.0))
def test_radial_L_nonpositive_above_threshold(x, d, extra):
    x = np.asarray(x)
    if np.linalg.norm(x) < 1e-2:
        return
    field = coeffs.diag(list(d))
    s = coeffs.e1(field, np.zeros((1, 3))) - 2 + extra
    r = np.linalg.norm(x)
    assert bar.radial_L_apply(field, s, x) <= 1e-12 * r ** (-s - 2)


@settings(max_examples=40, deadline=None)
@given(r1=st.floats(0.01, 5), r2=st.floats(0.01, 5))
def test_barrier_radially_decreasing(r1, r2):
    spec = bar.BarrierSpec(1.5, 0.3, 1.2, 1.0, np.zeros(3))
    lo, hi = sorted([r1, r2])
    assert bar.barrier_eval(spec, np.array([hi, 0, 0])) <= bar.barrier_eval(spec, np.array([0, lo, 0]))


def _oracle(L, eps):
    phi = math.atan2(1.0, L)
    root = math.sqrt(1 + L * L)
    et = min(1 / root - math.sin(phi - eps), math.cos(phi - eps) - L / root)
    return bisect(lambda a: math.sqrt(a * a - 1) * (root + et * (L - 1)) - et * (L + 1), 1.0, 10.0, xtol=1e-14)


def test_compute_a_examples():
    a, et = bar.compute_a(0.0, math.pi / 4)
    assert et == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-12)
    assert a == pytest.approx(1.08239, abs=1e-5)
    a1, _ = bar.compute_a(1.0, math.pi / 8)
    assert a1 == pytest.approx(_oracle(1.0, math.pi / 8), abs=1e-6)
    tiny, _ = bar.compute_a(0.5, 1e-8)
    assert tiny - 1 < 1e-6
    with pytest.raises(BarrierError):
        bar.compute_a(1.0, math.pi / 4)


@settings(max_examples=40, deadline=None)
@given(L=st.floats(0.0, 3.0), f1=st.floats(0.05, 0.95), f2=st.floats(0.05, 0.95))
def test_compute_a_increasing_and_tight(L, f1, f2):
    phi = math.atan2(1.0, L)
    e1, e2 = sorted([f1 * phi, f2 * phi])
    try:
        a1, t1 = bar.compute_a(L, e1)
        a2, t2 = bar.compute_a(L, e2)
    except BarrierError:
        return
    assert abs(bar.dilation_residual(a1, L, t1)) < 1e-10
    assert a1 <= a2 + 1e-15
    assert a1 == pytest.approx(_oracle(L, e1), abs=1e-9)


def test_verify_barrier_halfspace():
    spec = bar.barrier_for_layer(0.0, math.pi / 4, 0.25, 1.0, 1.0, np.array([0, 0, -1.0]))
    dom = geo.halfspace(3, [geo.BallObstacle([0, 0, -1.0], 0.25)])
    rep = bar.verify_barrier(spec, dom, coeffs.identity(), E3)
    assert rep.passed and rep.worst_violation <= 1e-9
    assert rep.eta0 == pytest.approx(0.25 * (1 - 1 / spec.a), rel=1e-12)


def test_verify_barrier_flags_failures():
    spec = bar.barrier_for_layer(0.0, math.pi / 4, 0.25, 1.0, 1.0, np.zeros(3))
    dom = geo.halfspace(3, [geo.BallObstacle([0, 0, -1.0], 0.25)])
    rep = bar.verify_barrier(spec, dom, coeffs.identity(), E3)
    assert not rep.passed
    # An obstacle that does not shield the singular core breaks the Dirichlet bound.
    spec2 = bar.barrier_for_layer(0.0, math.pi / 4, 0.25, 1.0, 1.0, np.array([0, 0, -1.0]))
    small = geo.halfspace(3, [geo.BallObstacle([0, 0, -1.0], 0.1)])
    rep2 = bar.verify_barrier(spec2, small, coeffs.identity(), E3)
    assert not rep2.dirichlet_bound_ok
    # s below e1 - 2 breaks the subsolution condition.
    rep3 = bar.verify_barrier(spec2, dom, coeffs.diag([1.0, 1.0, 4.0]), E3)
    assert not rep3.sub_elliptic_ok
