"""Admissible ball chains in a spherical layer.

A chain is a finite family of balls ``B(xi_k, theta R)`` inside the inner
layer ``q2 R < |x| < q3 R``. The root ball carries a fixed fraction of the
Dirichlet capacity in the layer and stays (with its ``a``-dilate) away from
the oblique boundary. The other balls avoid the oblique boundary, link back
to the root through overlaps containing a ``delta R`` ball, and together
cover the sphere ``S_R = {|x| = q* R}`` inside the domain.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, dijkstra
from scipy.spatial import cKDTree

from .capacity import CapacityProblem, capacity_estimate
from .errors import ChainError
from .geometry import Ball, Domain, SphericalLayer, as_points, sphere_points

TANGENCY_TOL = 1e-9


@dataclass(frozen=True)
class LayerSpec:
    """Radii ratios, ball size and overlap of one layer at scale ``R``."""

    q1: float
    q2: float
    q_star: float
    q3: float
    q4: float
    R: float
    theta: float
    delta: float
    kappa: float
    a: float

    def __post_init__(self):
        if not 0 < self.q1 < self.q2 < self.q_star < self.q3 < self.q4:
            raise ChainError("layer ratios must satisfy 0 < q1 < q2 < q* < q3 < q4")
        if not (self.theta > 0 and 0 < self.delta < 0.5 and self.kappa > 0 and self.a > 1
                and self.R > 0):
            raise ChainError("need theta > 0, delta in (0, 1/2), kappa > 0, a > 1, R > 0")

    @property
    def outer(self):
        return SphericalLayer(np.zeros(3), self.q1 * self.R, self.q4 * self.R)

    @property
    def inner(self):
        return SphericalLayer(np.zeros(3), self.q2 * self.R, self.q3 * self.R)

    @property
    def ball_radius(self):
        return self.theta * self.R

    def scaled(self, t):
        return replace(self, R=self.R * t)


@dataclass(eq=False)
class BallChain:
    """Balls of radius ``theta R``; index 0 is the root.

    ``adjacency`` holds undirected edges ``(i, j)`` with ``i < j``.
    """

    centers: np.ndarray
    radius: float
    adjacency: list
    kappa_measured: float = float("nan")
    root_capacity: float = float("nan")
    layer_capacity: float = float("nan")
    info: dict = field(default_factory=dict)

    @property
    def N(self):
        """Number of non-root balls."""
        return len(self.centers) - 1

    def ball(self, k):
        return Ball(self.centers[k], self.radius)

    def neighbors(self):
        nbr = [[] for _ in range(len(self.centers))]
        for i, j in self.adjacency:
            nbr[i].append(j)
            nbr[j].append(i)
        return [sorted(v) for v in nbr]

    def without_edge(self, edge):
        e = tuple(sorted(edge))
        return replace(self, adjacency=[p for p in self.adjacency if tuple(sorted(p)) != e],
                       info=dict(self.info))

    def with_center(self, k, center):
        centers = self.centers.copy()
        centers[k] = center
        return replace(self, centers=centers, info=dict(self.info))


def _bfs_parents(n_nodes, neighbors, root=0):
    """BFS parent array exploring neighbors in increasing index order."""
    parent = np.full(n_nodes, -2, dtype=int)
    parent[root] = -1
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in neighbors[v]:
            if parent[w] == -2:
                parent[w] = v
                queue.append(w)
    return parent


def chain_path(chain, k):
    """Shortest adjacency path ``[k, ..., 0]``; ties go to the lower index."""
    if not 0 <= k < len(chain.centers):
        raise ChainError(f"ball index {k} out of range")
    parent = _bfs_parents(len(chain.centers), chain.neighbors())
    if parent[k] == -2:
        raise ChainError(f"ball {k} is not connected to the root")
    path = [k]
    while path[-1] != 0:
        path.append(int(parent[path[-1]]))
    return path


# ---------------------------------------------------------------------------
# Sampling helpers shared by construction and verification


def sphere_samples(domain, layer, n_samples=None, cover_band=0.02):
    """Deterministic samples of ``S_R`` inside the domain.

    Points closer than ``cover_band * R`` to the oblique boundary are left
    out: balls avoiding that boundary cannot reach it.
    """
    R = layer.R
    r = layer.q_star * R
    if n_samples is None:
        n_samples = int(math.ceil(4 * math.pi * layer.q_star**2 / (layer.theta / 4) ** 2))
    pts = sphere_points(n_samples, r, None, domain.n)
    pts = pts[domain.inside(pts)]
    if cover_band > 0 and len(pts):
        near = domain.graph_gap(pts) < cover_band * R * 4
        if np.any(near):
            d = domain.graph_distance(pts[near], cover_band * R * 1.0001)
            drop = np.zeros(len(pts), dtype=bool)
            drop[np.flatnonzero(near)[d < cover_band * R]] = True
            pts = pts[~drop]
    return pts


def _delta_ball_points(center, radius, n):
    return Ball(center, radius).sample(n_shell=32, fractions=(0.5, 1.0))


def _balls_in_domain(domain, centers, radius):
    """Which balls ``B(c, radius)`` lie in the domain (sampled)."""
    template = Ball(np.zeros(domain.n), radius).sample(n_shell=32, fractions=(0.5, 1.0))
    out = np.empty(len(centers), dtype=bool)
    chunk = 4096
    for s in range(0, len(centers), chunk):
        c = centers[s:s + chunk]
        pts = (c[:, None, :] + template[None]).reshape(-1, domain.n)
        out[s:s + chunk] = domain.inside(pts).reshape(len(c), -1).all(axis=1)
    return out


def gamma1_in(domain, ball, spacing, shell=None):
    """Gamma1 samples in a ball, optionally restricted to an open shell."""
    pts = domain.gamma1_cloud(ball, spacing)
    if shell is not None and len(pts):
        pts = pts[shell.contains(pts)]
    return pts


def set_capacity(points, s):
    pts = as_points(points) if np.size(points) else np.zeros((0, 3))
    if len(pts) == 0:
        return 0.0
    return capacity_estimate(CapacityProblem(pts, s))[0]


def _cloud_spacing(layer):
    return layer.theta * layer.R / 8.0


def _avoids_gamma2(domain, centers, radius):
    centers = as_points(centers, domain.n)
    below = domain.graph_gap(centers) > 0
    ok = np.zeros(len(centers), dtype=bool)
    if np.any(below):
        d = domain.graph_distance(centers[below], radius * (1 + 2 * TANGENCY_TOL))
        ok[below] = d >= radius * (1 - TANGENCY_TOL)
    return ok


def _in_inner_layer(layer, centers):
    r = np.linalg.norm(centers, axis=1)
    rad = layer.ball_radius
    tol = 1e-12 * layer.R
    return (r - rad >= layer.q2 * layer.R - tol) & (r + rad <= layer.q3 * layer.R + tol)


# ---------------------------------------------------------------------------
# Construction


def build_chain(domain: Domain, layer: LayerSpec, s: float, candidate_density=2, relaxed=False,
                cover_band=0.02, n_samples=None, root_pool=5):
    """Greedy admissible chain.

    Candidates sit on a cubic lattice of spacing ``theta R / candidate_density``
    (one level at height ``-theta R``) plus balls tangent to the graph just
    below each ``S_R`` sample. Candidates must lie in the inner layer and
    avoid Gamma2. The root maximizes the estimated capacity of its Gamma1
    part; the rest is a greedy cover of ``S_R`` linked to the root by BFS
    shortest paths.

    ``relaxed=False`` uses the literal overlap rule: the ``delta R`` ball
    around the farther center must lie in both balls and the domain.
    ``relaxed=True`` only asks for some ``delta R`` ball (tested at the
    midpoint) in the intersection.

    Raises
    ------
    ChainError
        If ``S_R`` is empty, no root carries capacity, or a sample cannot be
        covered.
    """
    n = domain.n
    R = layer.R
    rad = layer.ball_radius
    samples = sphere_samples(domain, layer, n_samples, cover_band)
    if len(samples) == 0:
        raise ChainError("S_R is empty: the domain does not meet the layer")

    # Candidate centers.
    step = rad / candidate_density
    kmax = int(math.ceil(layer.q3 * R / step)) + 1
    axis = step * np.arange(-kmax, kmax + 1)
    zaxis = -rad + step * np.arange(-2 * kmax, 2)
    mesh = np.stack(np.meshgrid(*([axis] * (n - 1)), zaxis, indexing="ij"), -1).reshape(-1, n)
    mesh = mesh[_in_inner_layer(layer, mesh)]
    tangent = samples - rad * np.eye(n)[-1]
    tangent = tangent[_in_inner_layer(layer, tangent)]
    cand = np.vstack([mesh, tangent])
    cand = cand[_avoids_gamma2(domain, cand, rad)]
    if len(cand) == 0:
        raise ChainError("no candidate ball avoids Gamma2 inside the inner layer")

    # Root: enlarged ball avoids Gamma2, largest Gamma1 capacity among the best-sampled.
    spacing = _cloud_spacing(layer)
    inner = layer.inner
    layer_cloud = gamma1_in(domain, Ball(np.zeros(n), layer.q3 * R), spacing, inner)
    if len(layer_cloud) == 0:
        raise ChainError("Gamma1 has no points in the inner layer: the capacity condition is unsatisfiable")
    tree = cKDTree(layer_cloud)
    counts = np.array([len(v) for v in tree.query_ball_point(cand, rad)])
    root_ok = (counts > 0) & _avoids_gamma2(domain, cand, layer.a * rad)
    if not np.any(root_ok):
        raise ChainError("no root ball meets Gamma1 with its dilate clear of Gamma2")
    pool = np.flatnonzero(root_ok)
    pool = pool[np.lexsort((pool, -counts[pool]))][:root_pool]
    caps = []
    for k in pool:
        caps.append(set_capacity(gamma1_in(domain, Ball(cand[k], rad), spacing, inner), s))
    best = int(pool[int(np.argmax(caps))])
    root_cap = float(max(caps))
    if root_cap <= 0:
        raise ChainError("root capacity is zero: the capacity condition is unsatisfiable")
    layer_cap = set_capacity(layer_cloud, s)

    # Overlap graph.
    good = _balls_in_domain(domain, cand, layer.delta * R)
    if relaxed:
        pairs = np.array(sorted(cKDTree(cand).query_pairs(2 * (rad - layer.delta * R) + 1e-12)),
                         dtype=int).reshape(-1, 2)
        if len(pairs):
            mids = 0.5 * (cand[pairs[:, 0]] + cand[pairs[:, 1]])
            pairs = pairs[_balls_in_domain(domain, mids, layer.delta * R)]
    else:
        usable = good.copy()
        usable[best] = True
        idx = np.flatnonzero(usable)
        pairs = np.array(sorted(cKDTree(cand[idx]).query_pairs(rad - layer.delta * R + 1e-12)),
                         dtype=int).reshape(-1, 2)
        pairs = idx[pairs] if len(pairs) else pairs
        # The root end needs no delta ball of its own; any other endpoint does.
        ok = np.ones(len(pairs), dtype=bool)
        for col in (0, 1):
            ok &= good[pairs[:, col]] | (pairs[:, col] == best)
        pairs = pairs[ok]
    m = len(cand)
    adj = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m)) if len(pairs) \
        else sp.coo_matrix((m, m))
    adj = (adj + adj.T).tocsr()
    order = breadth_first_order(adj, best, directed=False, return_predecessors=False)
    reach = np.zeros(m, dtype=bool)
    reach[order] = True

    # Incidence of candidate balls and S_R samples.
    covers = cKDTree(samples).query_ball_point(cand, rad * (1 + 1e-12))
    lens = np.array([len(v) for v in covers])
    inc = sp.csr_matrix((np.ones(int(lens.sum())), np.concatenate([np.asarray(v, dtype=int) for v in covers]),
                         np.concatenate([[0], np.cumsum(lens)])), shape=(m, len(samples)))
    reachable_cover = np.asarray(inc[reach].sum(axis=0)).ravel() > 0
    if not np.all(reachable_cover):
        bad = samples[np.flatnonzero(~reachable_cover)[0]]
        raise ChainError(f"cover impossible: S_R sample {bad} is not reachable by any admissible ball")

    # Grow a tree from the root: each round adds the shortest path to the
    # candidate with the best new coverage per added ball.
    uncovered = np.ones(len(samples), dtype=bool)
    in_tree = np.zeros(m, dtype=bool)
    parent = np.full(m, -1, dtype=int)
    tree_order = [best]
    in_tree[best] = True
    uncovered[covers[best]] = False
    while np.any(uncovered):
        dist, pred, _ = dijkstra(adj, directed=False, indices=np.array(tree_order), unweighted=True,
                              min_only=True, return_predecessors=True)
        gains = inc @ uncovered.astype(float)
        score = np.where(np.isfinite(dist) & ~in_tree & (gains > 0), gains / np.maximum(dist, 1), -1.0)
        j = int(np.argmax(score))
        if score[j] <= 0:
            raise ChainError("cover stalled")
        path = [j]
        while not in_tree[pred[path[-1]]]:
            path.append(int(pred[path[-1]]))
        for v in reversed(path):
            parent[v] = int(pred[v])
            in_tree[v] = True
            tree_order.append(v)
            uncovered[covers[v]] = False

    final = tree_order
    pos = {v: i for i, v in enumerate(final)}
    adjacency = sorted(tuple(sorted((pos[int(parent[v])], pos[v]))) for v in final[1:])
    return BallChain(cand[final], rad, adjacency, kappa_measured=root_cap / layer_cap if layer_cap > 0
                     else float("inf"), root_capacity=root_cap, layer_capacity=layer_cap,
                     info={"n_candidates": int(m), "n_samples": int(len(samples)), "relaxed": relaxed,
                           "cover_band": cover_band, "n_samples_request": n_samples})


# ---------------------------------------------------------------------------
# Verification


@dataclass
class ChainReport:
    """Per-condition outcome of :func:`verify_chain` with worst margins."""

    capacity_ok: bool
    avoidance_ok: bool
    connectivity_ok: bool
    cover_ok: bool
    structure_ok: bool
    capacity_ratio: float
    avoidance_margin: float
    overlap_margin: float
    uncovered: int
    messages: list = field(default_factory=list)

    @property
    def passed(self):
        return (self.capacity_ok and self.avoidance_ok and self.connectivity_ok and self.cover_ok
                and self.structure_ok)


def verify_chain(domain: Domain, chain: BallChain, layer: LayerSpec, s: float, relaxed=None,
                 cover_band=None, n_samples=None):
    """Re-check the four admissibility conditions independently of construction."""
    n = domain.n
    R = layer.R
    rad = chain.radius
    msgs = []
    relaxed = chain.info.get("relaxed", False) if relaxed is None else relaxed
    cover_band = chain.info.get("cover_band", 0.02) if cover_band is None else cover_band
    n_samples = chain.info.get("n_samples_request") if n_samples is None else n_samples

    structure = abs(rad - layer.ball_radius) <= 1e-12 * R and len(chain.centers) >= 1
    inside = _in_inner_layer(layer, chain.centers)
    if not np.all(inside):
        msgs.append(f"balls outside the inner layer: {np.flatnonzero(~inside).tolist()}")
        structure = False

    # (1) capacity ratio.
    spacing = _cloud_spacing(layer)
    inner = layer.inner
    root_cloud = gamma1_in(domain, chain.ball(0), spacing, inner)
    layer_cloud = gamma1_in(domain, Ball(np.zeros(n), layer.q3 * R), spacing, inner)
    c_root = set_capacity(root_cloud, s)
    c_layer = set_capacity(layer_cloud, s)
    ratio = c_root / c_layer if c_layer > 0 else (np.inf if c_root > 0 else 0.0)
    cap_ok = c_layer > 0 and c_root >= layer.kappa * c_layer - 1e-12
    if not cap_ok:
        msgs.append(f"capacity ratio {ratio:.4g} below kappa {layer.kappa}")

    # (2) avoidance by dense graph sampling.
    margins = []
    for k, c in enumerate(chain.centers):
        r = layer.a * rad if k == 0 else rad
        below = domain.graph_gap(c)[0] > 0
        d = domain.graph_distance(c, r * 1.01, n_grid=81)[0] if below else 0.0
        margins.append((d - r) / R if below else -np.inf)
    margins = np.asarray(margins)
    av_ok = bool(np.all(margins >= -TANGENCY_TOL * rad / R))
    if not av_ok:
        msgs.append(f"balls meeting Gamma2: {np.flatnonzero(margins < -TANGENCY_TOL).tolist()}")

    # (3) connectivity through delta-ball overlaps along BFS paths.
    nbrs = chain.neighbors()
    parent = _bfs_parents(len(chain.centers), nbrs)
    conn_ok = bool(np.all(parent != -2))
    if not conn_ok:
        msgs.append(f"balls not connected to the root: {np.flatnonzero(parent == -2).tolist()}")
    worst_overlap = np.inf
    dr = layer.delta * R
    for k in range(1, len(chain.centers)):
        p = parent[k]
        if p < 0:
            continue
        if relaxed:
            ball_c = 0.5 * (chain.centers[k] + chain.centers[p])
        else:
            ball_c = chain.centers[k]
        pts = _delta_ball_points(ball_c, dr, n)
        m1 = rad - np.linalg.norm(pts - chain.centers[k], axis=1)
        m2 = rad - np.linalg.norm(pts - chain.centers[p], axis=1)
        margin = float(min(m1.min(), m2.min())) / R
        if not np.all(domain.inside(pts)):
            margin = min(margin, -1.0)
        worst_overlap = min(worst_overlap, margin)
    overlap_ok = worst_overlap >= -1e-12
    if not overlap_ok:
        msgs.append(f"an overlap misses its delta ball (margin {worst_overlap:.3g})")
    conn_ok = conn_ok and overlap_ok

    # (4) cover of S_R.
    samples = sphere_samples(domain, layer, n_samples, cover_band)
    if len(samples):
        d, _ = cKDTree(chain.centers).query(samples)
        miss = int(np.sum(d > rad * (1 + 1e-12)))
    else:
        miss = 0
        msgs.append("S_R is empty")
    cover_ok = miss == 0 and len(samples) > 0
    if miss:
        msgs.append(f"{miss} S_R samples uncovered")

    return ChainReport(bool(cap_ok), av_ok, bool(conn_ok), bool(cover_ok), bool(structure),
                       float(ratio), float(np.min(margins)), float(worst_overlap), miss, msgs)
