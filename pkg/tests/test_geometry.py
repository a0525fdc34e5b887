import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zaremba import geometry as geo
from zaremba.errors import GeometryError

coord = st.floats(-2.0, 2.0, allow_nan=False)
point3 = st.tuples(coord, coord, coord).map(np.array)


def test_classify_examples():
    dom = geo.halfspace()
    assert geo.classify(dom, [0, 0, -1], 1e-6) == geo.Region.INTERIOR
    assert geo.classify(dom, [0.2, 0.3, 0], 1e-6) == geo.Region.GAMMA2
    assert geo.classify(dom, [0, 0, 1], 1e-6) == geo.Region.EXTERIOR


def test_classify_obstacle_and_ambiguity():
    dom = geo.halfspace(3, [geo.BallObstacle([0, 0, -1], 0.25)])
    assert geo.classify(dom, [0, 0, -0.75], 1e-6) == geo.Region.GAMMA1
    assert geo.classify(dom, [0, 0, -1], 1e-6) == geo.Region.EXTERIOR
    touching = geo.halfspace(3, [geo.BallObstacle([0, 0, -0.5], 0.5)])
    with pytest.raises(GeometryError):
        geo.classify(touching, [0, 0, 0], 1e-3)
    assert geo.classify(touching, [0, 0, 0], 1e-3, on_ambiguous="gamma1") == geo.Region.GAMMA1


def test_graph_points_inside_obstacle_are_not_gamma2():
    dom = geo.halfspace(3, [geo.BallObstacle([0, 0, 0], 0.1)])
    assert geo.classify(dom, [0.02, 0.0, 0.0], 1e-4) == geo.Region.EXTERIOR
    assert geo.classify(dom, [0.5, 0.0, 0.0], 1e-4) == geo.Region.GAMMA2


def test_tol_must_be_positive():
    with pytest.raises(GeometryError):
        geo.classify(geo.halfspace(), [0, 0, -1], 0.0)


def test_lipschitz_examples():
    assert geo.lipschitz_estimate(lambda p: np.zeros(len(p)), 1.0, 9) == 0.0
    assert abs(geo.lipschitz_estimate(lambda p: np.linalg.norm(p, axis=1), 1.0, 9) - 1.0) <= 1e-9
    assert abs(geo.lipschitz_estimate(lambda p: 0.5 * p[:, 0], 1.0, 9) - 0.5) <= 1e-9
    with pytest.raises(GeometryError):
        geo.lipschitz_estimate(lambda p: p[:, 0], 1.0, 1)


@settings(max_examples=15, deadline=None)
@given(k=st.integers(1, 4), amp=st.floats(0.1, 2.0))
def test_lipschitz_nondecreasing_under_nested_refinement(k, amp):
    f = lambda p: amp * np.sin(3 * p[:, 0]) * np.cos(2 * p[:, 1])
    coarse = geo.lipschitz_estimate(f, 1.0, 2**k + 1)
    fine = geo.lipschitz_estimate(f, 1.0, 2 ** (k + 1) + 1)
    assert fine >= coarse - 1e-12


def test_cone_check_examples():
    flat = geo.halfspace()
    assert geo.cone_check(flat, np.array([0.3, -0.2, 0.0]), math.pi / 4, 0.5)
    dom = geo.cone(1.0)
    assert geo.cone_check(dom, np.zeros(3), math.pi / 4 - 0.01, 0.1)
    assert not geo.cone_check(dom, np.zeros(3), math.pi / 4 + 0.1, 0.1)


@settings(max_examples=20, deadline=None)
@given(L=st.floats(0.0, 2.0), phi=st.floats(0.05, 1.5), h=st.floats(0.05, 1.0),
       shrink=st.floats(0.1, 1.0))
def test_cone_check_monotone(L, phi, h, shrink):
    dom = geo.cone(L)
    y = np.zeros(3)
    if geo.cone_check(dom, y, phi, h):
        assert geo.cone_check(dom, y, phi * shrink, h)
        assert geo.cone_check(dom, y, phi, h * shrink)


@settings(max_examples=40, deadline=None)
@given(x=point3, t=st.floats(0.25, 4.0))
def test_classify_scale_equivariant(x, t):
    dom = geo.slit(0.3, 0.5, 0.1)
    tol = 1e-3
    a = geo.classify_points(dom, x, tol, on_ambiguous="gamma1")
    b = geo.classify_points(dom.scaled(t), t * x, t * tol, on_ambiguous="gamma1")
    assert a[0] == b[0]


def test_domain_requires_junction_on_graph():
    with pytest.raises(GeometryError):
        geo.graph_domain(lambda p: np.ones(len(p)))
    with pytest.raises(GeometryError):
        geo.halfspace(n=2)


def test_ball_and_layer_invariants():
    with pytest.raises(GeometryError):
        geo.Ball(np.zeros(3), 0.0)
    with pytest.raises(GeometryError):
        geo.SphericalLayer(np.zeros(3), 2.0, 1.0)
    layer = geo.SphericalLayer(np.zeros(3), 1.0, 2.0)
    assert layer.contains(np.array([[1.5, 0, 0]]))[0]
    assert not layer.contains(np.array([[0.5, 0, 0]]))[0]


@settings(max_examples=30, deadline=None)
@given(d=point3, eps=st.floats(0.01, 0.7))
def test_vector_field_is_unit(d, eps):
    if np.linalg.norm(d) < 1e-3:
        return
    field = geo.VectorField.constant(d, eps)
    v = field(np.zeros((4, 3)))
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)


def test_vector_field_cone_margin():
    good = geo.VectorField.constant([0, 0, 1], 0.5)
    assert good.check(np.zeros((3, 3)), lipschitz=0.0)
    tilted = geo.VectorField.constant([1, 0, 0.2], 0.5)
    assert not tilted.check(np.zeros((3, 3)), lipschitz=0.0)


def test_gamma_samples_disjoint():
    dom = geo.slit(0.25, 0.5, 0.0, extent=1.0, depth=1.0)
    g1 = dom.gamma1_cloud(geo.Ball(np.zeros(3), 0.9), 0.05)
    assert len(g1)
    assert np.all(np.abs(dom.graph_gap(g1)) > 1e-6)


def test_pl_graph_interpolates_samples():
    xp = np.array([[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    vals = np.array([0.0, -0.5, -0.5, -0.5, -0.5])
    dom = geo.pl_graph(xp, vals)
    assert abs(dom.gamma2_graph(np.array([[0.5, 0.0]]))[0] + 0.25) < 1e-12
    assert dom.lipschitz == pytest.approx(0.5 * math.sqrt(2), abs=1e-2)


def test_disk_stack_labels():
    dom = geo.disk_stack(m_max=3, source_radius=0.01)
    labels = {ob.label for ob in dom.obstacles}
    assert {"slit0", "slit3", "junction"} <= labels
    assert geo.nearest_gamma1_label(dom, np.array([[0, 0, -0.01]]))[0] == "junction"
