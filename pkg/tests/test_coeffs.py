import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zaremba import coeffs
from zaremba.errors import EllipticityError

E = np.eye(3)


def test_ellipticity_examples():
    x = np.zeros(3)
    assert coeffs.ellipticity(coeffs.identity(), x, E[0]) == pytest.approx(3.0)
    d = coeffs.diag([1, 1, 4])
    assert coeffs.ellipticity(d, x, E[2]) == pytest.approx(1.5)
    assert coeffs.ellipticity(d, x, E[0]) == pytest.approx(6.0)
    with pytest.raises(EllipticityError):
        coeffs.ellipticity(d, x, np.array([1.0, 1.0, 0.0]))


def test_e1_examples():
    pts = np.random.default_rng(0).uniform(-1, 1, (50, 3))
    assert coeffs.e1(coeffs.identity(), pts) == pytest.approx(3.0)
    assert coeffs.e1(coeffs.diag([1, 1, 4]), pts) == pytest.approx(6.0)
    with pytest.raises(EllipticityError):
        coeffs.e1(coeffs.identity(), np.zeros((0, 3)))


def test_e1_oscillating_field():
    # trace / lambda_min peaks where 1 + A sin = 1 - A: (3 - A) / (1 - A) = 5 for A = 0.5.
    x1 = np.linspace(0, 2 * np.pi / 10, 2001)
    pts = np.column_stack([x1, np.zeros_like(x1), np.zeros_like(x1)])
    assert coeffs.e1(coeffs.osc(0.5, 10.0), pts) == pytest.approx(5.0, abs=1e-5)


def test_not_positive_definite_rejected():
    bad = coeffs.constant_full(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(EllipticityError):
        coeffs.e1(bad, np.zeros((1, 3)))


def test_parse_field():
    assert coeffs.parse_field("identity").kind == "identity"
    assert coeffs.parse_field("diag:[1,2,3]")(np.zeros(3))[0, 1, 1] == pytest.approx(2.0)
    a = coeffs.parse_field("rot2d:0.3,[1,2,3]")(np.zeros(3))[0]
    assert np.allclose(np.linalg.eigvalsh(a), [1, 2, 3])
    assert coeffs.parse_field("osc:0.5,10").kind == "oscillating"
    with pytest.raises(EllipticityError):
        coeffs.parse_field("bogus")


spd_entries = st.lists(st.floats(-1.0, 1.0), min_size=9, max_size=9)


def _spd(vals):
    m = np.asarray(vals).reshape(3, 3)
    return m @ m.T + 0.5 * np.eye(3)


@settings(max_examples=50, deadline=None)
@given(vals=spd_entries)
def test_sym3_eigvals_match_lapack(vals):
    a = _spd(vals)
    assert np.allclose(np.sort(coeffs.eigvals(a[None])[0]), np.linalg.eigvalsh(a), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(vals=spd_entries, xi=st.tuples(*[st.floats(-1, 1)] * 3), c=st.floats(0.1, 10.0))
def test_ellipticity_symmetric_and_scale_free(vals, xi, c):
    xi = np.asarray(xi)
    if np.linalg.norm(xi) < 1e-3:
        return
    xi = xi / np.linalg.norm(xi)
    a = _spd(vals)
    f = coeffs.constant_full(a)
    g = coeffs.constant_full(c * a)
    x = np.zeros(3)
    e = coeffs.ellipticity(f, x, xi)
    assert coeffs.ellipticity(f, x, -xi) == pytest.approx(e, rel=1e-12)
    assert coeffs.ellipticity(g, x, xi) == pytest.approx(e, rel=1e-9)
    assert coeffs.e1(g, x[None]) == pytest.approx(coeffs.e1(f, x[None]), rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(vals=spd_entries)
def test_e1_matches_brute_force_over_directions(vals):
    a = _spd(vals)
    f = coeffs.constant_full(a)
    g = np.random.default_rng(0).normal(size=(20000, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    brute = np.max(np.trace(a) / np.einsum("ij,jk,ik->i", g, a, g))
    exact = coeffs.e1(f, np.zeros((1, 3)))
    assert brute <= exact * (1 + 1e-12)
    assert brute == pytest.approx(exact, rel=1e-3)


def test_field_is_symmetric():
    f = coeffs.rot2d(0.7, [1.0, 2.0, 1.5])
    a = f(np.zeros((5, 3)))
    assert a.shape == (5, 3, 3)
    assert np.array_equal(a, np.swapaxes(a, 1, 2))


def test_repeated_eigenvalues_keep_full_precision():
    a = np.diag([0.5, 0.5, 1.5])
    for c in (1.0, 0.109375, 7.0):
        assert coeffs.e1(coeffs.constant_full(c * a), np.zeros((1, 3))) == pytest.approx(5.0, rel=1e-13)
        assert np.allclose(coeffs.eigvals((c * a)[None])[0], c * np.array([0.5, 0.5, 1.5]), rtol=1e-14)
