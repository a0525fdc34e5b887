import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zaremba import capacity as cap
from zaremba._ipm import packing_lp
from zaremba.errors import CapacityError


def test_potential_examples():
    one = cap.DiscreteMeasure(np.zeros((1, 3)), [1.0])
    assert cap.potential(one, 1.0, np.array([2.0, 0, 0])) == pytest.approx(0.5)
    two = cap.DiscreteMeasure(np.array([[1.0, 0, 0], [-1.0, 0, 0]]), [0.5, 0.5])
    assert cap.potential(two, 1.0, np.zeros(3)) == pytest.approx(1.0)
    with pytest.raises(CapacityError):
        cap.potential(one, 1.0, np.zeros(3))


def test_newton_sphere_theorem():
    H = cap.sphere_cloud(1000)
    mu = cap.DiscreteMeasure(H, np.full(1000, 1e-3))
    assert cap.potential(mu, 1.0, np.array([3.0, 0, 0])) == pytest.approx(1 / 3, abs=1e-3)


def test_admissibility_examples():
    prob = cap.CapacityProblem(np.zeros((1, 3)), 1.0, np.array([[1.0, 0, 0]]))
    assert cap.is_admissible(cap.DiscreteMeasure.zero(np.zeros((1, 3))), prob)
    assert not cap.is_admissible(cap.DiscreteMeasure(np.zeros((1, 3)), [10.0]), prob)


def test_single_point_reports_zero():
    value, w = cap.capacity_estimate(cap.CapacityProblem(np.zeros((1, 3)), 1.0))
    assert value == 0.0 and w.total == 0.0


def test_oracle_examples():
    d = 0.7
    assert cap.capacity_oracle_small(np.zeros((1, 3)), 1.0, np.array([[d, 0, 0], [0, 2.0, 0]])) == pytest.approx(d)
    atoms = np.array([[-d, 0, 0], [d, 0, 0]])
    assert cap.capacity_oracle_small(atoms, 1.0, np.zeros((1, 3))) == pytest.approx(d)
    with pytest.raises(CapacityError):
        cap.capacity_oracle_small(np.zeros((4, 3)), 1.0, np.ones((1, 3)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(1, 3), s=st.floats(0.5, 2.0))
def test_oracle_agrees_with_lp(seed, k, s):
    rng = np.random.default_rng(seed)
    atoms = rng.uniform(-1, 1, (k, 3))
    cons = rng.uniform(-2, 2, (12, 3))
    if np.min(np.linalg.norm(cons[:, None] - atoms[None], axis=2)) < 0.05:
        return
    exact = cap.capacity_oracle_small(atoms, s, cons)
    value, _ = cap.capacity_estimate(cap.CapacityProblem(atoms, s, cons, method="highs"))
    if k == 1:
        value = cap._solve_highs(cap.kernel_matrix(cons, atoms, s)).sum()
    assert value == pytest.approx(exact, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(5, 40))
def test_witness_admissible_and_monotone(seed, n):
    rng = np.random.default_rng(seed)
    big = rng.uniform(-1, 1, (n, 3))
    small = big[: max(2, n // 2)]
    prob = cap.CapacityProblem(big, 1.0)
    cb, wb = cap.capacity_estimate(prob)
    assert cap.is_admissible(wb, prob)
    cs, _ = cap.capacity_estimate(cap.CapacityProblem(small, 1.0, prob.constraint_points))
    assert cs <= cb + 1e-10
    extra = np.vstack([prob.constraint_points, cap.sphere_cloud(50, 1.5)])
    ce, _ = cap.capacity_estimate(cap.CapacityProblem(big, 1.0, extra))
    assert ce <= cb + 1e-10


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6), t=st.floats(0.2, 5.0), s=st.floats(0.5, 2.0))
def test_scaling_law(seed, t, s):
    H = np.random.default_rng(seed).uniform(-1, 1, (20, 3))
    prob = cap.CapacityProblem(H, s)
    c1, _ = cap.capacity_estimate(prob)
    ct, _ = cap.capacity_estimate(prob.scaled(t))
    assert ct == pytest.approx(t**s * c1, rel=1e-6)


def test_ipm_matches_highs():
    rng = np.random.default_rng(3)
    H = rng.uniform(-1, 1, (50, 3))
    prob = cap.CapacityProblem(H, 1.0)
    A = cap.kernel_matrix(prob.constraint_points, H, 1.0)
    x, y, info = packing_lp(A, np.ones(len(A)))
    ref = cap._solve_highs(A)
    assert x.sum() == pytest.approx(ref.sum(), rel=1e-9)


def test_constraints_keep_clearance():
    H = cap.disk_cloud(np.zeros(3), 0.5, 0.1)
    prob = cap.CapacityProblem(H, 1.0, clearance=1e-3)
    d = np.linalg.norm(prob.constraint_points[:, None] - H[None], axis=2)
    assert d.min() >= 1e-3
    with pytest.raises(CapacityError):
        cap.CapacityProblem(H, 1.0, H[:1].copy(), clearance=1e-3)


def test_invalid_inputs():
    with pytest.raises(CapacityError):
        cap.CapacityProblem(np.zeros((2, 3)), 0.0)
    with pytest.raises(CapacityError):
        cap.DiscreteMeasure(np.zeros((1, 3)), [-1.0])


def test_disk_capacity_trend():
    # C_1 of a flat disk of radius r is 2r/pi; the cloud estimate overshoots by a few percent.
    value = cap.capacity_of(cap.disk_cloud(np.zeros(3), 1.0, 0.1), 1.0)
    assert 2 / np.pi * 0.95 <= value <= 2 / np.pi * 1.15
