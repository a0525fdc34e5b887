import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zaremba import barrier as bar
from zaremba import coeffs
from zaremba import fdsolver as fd
from zaremba import geometry as geo
from zaremba.errors import HypothesisError
from zaremba.experiments.dichotomy import DichotomyConfig, capacity_sum, classify_series
from zaremba.experiments.growth import check_hypotheses, growth_via_barrier, growth_via_capacity
from zaremba.experiments.iteration import GrowthConstants

E3 = geo.VectorField.constant([0, 0, 1], math.pi / 4)


def test_classify_examples():
    assert classify_series([4, 3, 2, 1]) == ("decay", None)
    assert classify_series([1, 2, 3]) == ("growth", 0)
    assert classify_series([3, 2, 2, 5]) == ("growth", 1)
    assert classify_series([3, 4, 2]) == ("mixed", None)
    assert classify_series([0, 0, 0]) == ("degenerate", None)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=12))
def test_classify_consistent(M):
    kind, n1 = classify_series(M)
    d = np.diff(M)
    if kind == "decay":
        assert np.all(d < 0)
    elif kind == "growth":
        assert np.all(d[n1:] >= -1e-8) and np.all(d[:n1] < -1e-8)
    elif kind == "degenerate":
        assert np.all(np.abs(M) <= 1e-8)
    # Reversing a strict decay gives growth from the first step.
    if kind == "decay":
        assert classify_series(M[::-1]) == ("growth", 0)


def test_dichotomy_config_invariants():
    conf = DichotomyConfig()
    assert conf.R(3) == pytest.approx(0.125)
    assert conf.indices == list(range(5))
    assert conf.layer(2).R == pytest.approx(0.25)
    with pytest.raises(HypothesisError):
        DichotomyConfig(Q=1.0)
    with pytest.raises(HypothesisError):
        DichotomyConfig(points_per_R=16)
    with pytest.raises(HypothesisError):
        DichotomyConfig(q=(0.5, 0.7, 1.2, 1.3, 1.4))


def test_capacity_sum_weights():
    conf = DichotomyConfig(s=1.0, M_layers=3)
    sums = capacity_sum(conf, [1.0, 0.5, 0.25])
    assert np.allclose(sums, [1.0, 2.0, 3.0])
    assert np.all(np.diff(capacity_sum(conf, [0.3, np.zeros((0, 3)), 0.1])) >= 0)


def test_growth_constants():
    c = GrowthConstants(0.5, 0.1, 0.02)
    assert c.tau == pytest.approx(0.01)
    with pytest.raises(HypothesisError):
        GrowthConstants(1.5, 0.1, 0.02)
    m = GrowthConstants.from_measurements(0.5, 0.1, 1.0, 0.02, n_atoms=300)
    assert m.eta1_tilde == pytest.approx(0.05, rel=0.02)


@pytest.fixture(scope="module")
def small_problem():
    h = 1.0 / 16
    dom = geo.halfspace(3, [geo.BallObstacle([0, 0, -0.5], 0.1)], 0.75, 1.0)
    data = fd.BoundaryData(phi=fd.BoundaryData.piecewise(dom, {"walls": 1.0}))
    u = fd.solve_problem(dom, coeffs.identity(3), E3, data, *fd.domain_box(dom), h)
    return dom, u


def test_growth_via_barrier_ratio(small_problem):
    dom, u = small_problem
    a, _ = bar.compute_a(0.0, math.pi / 4)
    spec = bar.BarrierSpec(1.0, 0.2, a, 0.4, np.array([0, 0, -0.5]))
    res = growth_via_barrier(dom, coeffs.identity(3), E3, spec, u)
    assert res.sup_big >= res.sup_small > 0
    assert res.passed


def test_growth_via_barrier_vacuous(small_problem):
    dom, u = small_problem
    spec = bar.BarrierSpec(1.0, 0.2, 1.1, 0.5, np.array([0, 0, -0.5]))
    zero = replace(u, values=np.where(np.isnan(u.values), np.nan, 0.0))
    res = growth_via_barrier(dom, coeffs.identity(3), E3, spec, zero)
    assert res.passed and "vacuous" in res.note


def test_growth_via_capacity_implied_eta(small_problem):
    dom, u = small_problem
    c = np.array([0, 0, -0.5])
    H = dom.gamma1_cloud(geo.Ball(c, 0.15), 0.15 / 8)
    res = growth_via_capacity(dom, coeffs.identity(3), u, H, 1.0, 0.15, 2.0, c)
    assert res.passed and res.implied_eta > 0
    with pytest.raises(HypothesisError):
        growth_via_capacity(dom, coeffs.identity(3), u, H, 1.0, 0.4, 2.0, c)


def test_hypotheses_reject_negative(small_problem):
    dom, u = small_problem
    neg = replace(u, values=-np.abs(u.values) - 1.0)
    with pytest.raises(HypothesisError):
        check_hypotheses(neg, geo.Ball(np.array([0, 0, -0.5]), 0.3))
