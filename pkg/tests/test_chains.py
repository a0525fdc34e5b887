import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zaremba import barrier as bar
from zaremba import chains as ch
from zaremba import geometry as geo
from zaremba.errors import ChainError

A, _ = bar.compute_a(0.0, math.pi / 4)


def _layer(R=1.0):
    return ch.LayerSpec(1.0, 2.0, 2.5, 3.0, 4.0, R, 0.3, 0.12, 0.05, A)


@pytest.fixture(scope="module")
def built():
    dom = geo.halfspace(3, [geo.DiskObstacle([0, 0, -2.5], 0.5, 0.0, "slit")])
    layer = _layer()
    chain = ch.build_chain(dom, layer, 1.0)
    return dom, layer, chain


def test_layer_invariants():
    with pytest.raises(ChainError):
        ch.LayerSpec(1.0, 0.5, 2.5, 3.0, 4.0, 1.0, 0.3, 0.12, 0.05, A)
    with pytest.raises(ChainError):
        ch.LayerSpec(1.0, 2.0, 2.5, 3.0, 4.0, 1.0, 0.3, 0.6, 0.05, A)
    with pytest.raises(ChainError):
        ch.LayerSpec(1.0, 2.0, 2.5, 3.0, 4.0, 1.0, 0.3, 0.12, 0.05, 1.0)


def test_build_then_verify(built):
    dom, layer, chain = built
    rep = ch.verify_chain(dom, chain, layer, 1.0)
    assert rep.passed, rep.messages
    assert rep.capacity_ratio >= layer.kappa
    assert chain.kappa_measured == pytest.approx(rep.capacity_ratio, rel=1e-9)
    assert np.allclose(np.linalg.norm(chain.centers, axis=1) + chain.radius <= layer.q3 + 1e-9, True)


def test_constructed_violations(built):
    dom, layer, chain = built
    k = chain.N - 1
    moved = chain.with_center(k, np.array([chain.centers[k][0], chain.centers[k][1], 0.0]))
    assert not ch.verify_chain(dom, moved, layer, 1.0).avoidance_ok
    cut = chain.without_edge(chain.adjacency[0])
    assert not ch.verify_chain(dom, cut, layer, 1.0).connectivity_ok


def _bfs_dist(chain, k):
    nbrs = chain.neighbors()
    dist = {k: 0}
    q = deque([k])
    while q:
        i = q.popleft()
        for j in nbrs[i]:
            if j not in dist:
                dist[j] = dist[i] + 1
                q.append(j)
    return dist


def test_paths_are_shortest_and_overlapping(built):
    dom, layer, chain = built
    edges = {tuple(sorted(e)) for e in chain.adjacency}
    for k in range(0, chain.N, max(1, chain.N // 25)):
        path = ch.chain_path(chain, k)
        assert path[0] == k and path[-1] == 0
        assert len(path) - 1 == _bfs_dist(chain, 0)[k]
        for i, j in zip(path, path[1:]):
            assert tuple(sorted((i, j))) in edges
            d = np.linalg.norm(chain.centers[i] - chain.centers[j])
            assert d <= (layer.theta - layer.delta) * layer.R * (1 + 1e-9)


def test_chain_path_small_cases():
    centers = np.array([[0, 0, -2.5], [0.2, 0, -2.5], [0.4, 0, -2.5]])
    chain = ch.BallChain(centers, 0.3, [(0, 1), (1, 2)])
    assert ch.chain_path(chain, 0) == [0]
    assert ch.chain_path(chain, 2) == [2, 1, 0]
    diamond = ch.BallChain(np.zeros((4, 3)), 0.3, [(0, 1), (0, 2), (1, 3), (2, 3)])
    assert ch.chain_path(diamond, 3) == [3, 1, 0]
    broken = ch.BallChain(centers, 0.3, [(0, 1)])
    with pytest.raises(ChainError):
        ch.chain_path(broken, 2)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 30))
def test_chain_path_matches_bfs_on_random_trees(seed, n):
    rng = np.random.default_rng(seed)
    edges = [(int(rng.integers(0, k)), k) for k in range(1, n)]
    extra = [tuple(sorted(rng.choice(n, 2, replace=False).tolist())) for _ in range(n // 3)]
    chain = ch.BallChain(np.zeros((n, 3)), 1.0, edges + extra)
    dist = _bfs_dist(chain, 0)
    for k in range(n):
        assert len(ch.chain_path(chain, k)) - 1 == dist[k]


def test_scale_equivariance(built):
    dom, layer, chain = built
    t = 2.0
    c2 = ch.build_chain(dom.scaled(t), layer.scaled(t), 1.0)
    assert c2.N == chain.N
    assert np.allclose(c2.centers, t * chain.centers, atol=1e-9)
    r1 = ch.verify_chain(dom, chain, layer, 1.0)
    r2 = ch.verify_chain(dom.scaled(t), c2, layer.scaled(t), 1.0)
    assert r2.passed
    assert r2.avoidance_margin == pytest.approx(r1.avoidance_margin, abs=1e-9)
    assert r2.capacity_ratio == pytest.approx(r1.capacity_ratio, rel=1e-6)


def test_failures():
    far = geo.halfspace(3, [geo.BallObstacle([0, 0, -50.0], 1.0)])
    with pytest.raises(ChainError):
        ch.build_chain(far, _layer(), 1.0)
    bare = geo.halfspace(3)
    with pytest.raises(ChainError):
        ch.build_chain(bare, _layer(), 1.0)


def test_sphere_samples_inside_domain():
    dom = geo.halfspace(3)
    pts = ch.sphere_samples(dom, _layer())
    assert len(pts) and np.all(dom.inside(pts))
    assert np.allclose(np.linalg.norm(pts, axis=1), 2.5)
    assert np.all(-pts[:, 2] >= 0.02 - 1e-12)
