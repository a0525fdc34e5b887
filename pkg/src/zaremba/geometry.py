"""Domains with a split boundary, balls, layers and geometric predicates.

A domain lives below a Lipschitz graph ``x_n = f(x')`` (the oblique-derivative
boundary, called Gamma2) and is cut by closed Dirichlet obstacles (Gamma1).
The junction point is always the origin. Everything here is vectorized over
point arrays of shape ``(m, n)``; single points of shape ``(n,)`` are accepted
wherever it is natural.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import GeometryError

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class Region(enum.IntEnum):
    """Boundary classification of a point."""

    EXTERIOR = 0
    INTERIOR = 1
    GAMMA1 = 2
    GAMMA2 = 3


def as_points(x, n=None):
    """Return ``x`` as a float array of shape ``(m, n)``."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if n is not None and pts.shape[1] != n:
        raise GeometryError(f"expected points in R^{n}, got shape {pts.shape}")
    return pts


def sphere_points(n_points, radius=1.0, center=None, dim=3):
    """Quasi-uniform points on a sphere.

    Uses the Fibonacci spiral in three dimensions and normalized Gaussian
    samples from a fixed seed otherwise, so the output is deterministic.
    """
    if n_points <= 0:
        return np.zeros((0, dim))
    if dim == 3:
        i = np.arange(n_points) + 0.5
        z = 1.0 - 2.0 * i / n_points
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        theta = GOLDEN_ANGLE * i
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta), z])
    else:
        rng = np.random.default_rng(12345 + dim)
        pts = rng.standard_normal((n_points, dim))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts = radius * pts
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


def disk_lattice(radius, spacing, dim):
    """Square lattice points of an ``dim``-dimensional ball of given radius, origin included."""
    k = int(math.floor(radius / spacing))
    axis = spacing * np.arange(-k, k + 1)
    if dim == 0:
        return np.zeros((1, 0))
    mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return mesh[np.linalg.norm(mesh, axis=1) <= radius * (1 + 1e-12)]


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball ``B(center, radius)``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        if not self.radius > 0:
            raise GeometryError(f"ball radius must be positive, got {self.radius}")

    @property
    def n(self):
        return self.center.size

    def contains(self, x, tol=0.0):
        pts = as_points(x, self.n)
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + tol

    def scaled(self, factor):
        return Ball(self.center, self.radius * factor)

    def sample(self, n_shell=48, fractions=(0.5, 1.0)):
        """Center plus Fibonacci shells at the given radius fractions."""
        pts = [self.center[None, :]]
        for frac in fractions:
            pts.append(sphere_points(n_shell, frac * self.radius, self.center, self.n))
        return np.vstack(pts)


@dataclass(frozen=True, eq=False)
class SphericalLayer:
    """Open shell ``B(center, r_outer) minus closed B(center, r_inner)``."""

    center: np.ndarray
    r_inner: float
    r_outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        if not 0 < self.r_inner < self.r_outer:
            raise GeometryError("spherical layer needs 0 < r_inner < r_outer")

    def contains(self, x):
        r = np.linalg.norm(as_points(x, self.center.size) - self.center, axis=1)
        return (r > self.r_inner) & (r < self.r_outer)

    def contains_ball(self, ball, tol=1e-12):
        d = np.linalg.norm(ball.center - self.center)
        return bool(d - ball.radius >= self.r_inner - tol and d + ball.radius <= self.r_outer + tol)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Unit outward field on Gamma2 with a uniform non-tangency margin.

    ``ell`` maps points ``(m, n)`` to vectors ``(m, n)``; returned vectors are
    normalized.
    """

    ell: Callable[[np.ndarray], np.ndarray]
    epsilon_margin: float

    def __post_init__(self):
        if not self.epsilon_margin > 0:
            raise GeometryError("epsilon_margin must be positive")

    @classmethod
    def constant(cls, direction, epsilon_margin):
        d = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise GeometryError("zero direction")
        d = d / norm
        return cls(lambda x: np.broadcast_to(d, as_points(x, d.size).shape).copy(), epsilon_margin)

    def __call__(self, x):
        v = np.asarray(self.ell(as_points(x)), dtype=float)
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def check(self, points, lipschitz):
        """True iff the field is unit and within ``phi - epsilon`` of the cone axis.

        The cone axis points along ``-e_n`` into the domain, so the outward field
        is compared against ``+e_n``; ``phi = arccot(L)``.
        """
        raw = np.asarray(self.ell(as_points(points)), dtype=float)
        if not np.allclose(np.linalg.norm(raw, axis=1), 1.0, atol=1e-12):
            return False
        phi = math.atan2(1.0, lipschitz)
        angle = np.arccos(np.clip(raw[:, -1], -1.0, 1.0))
        return bool(np.all(angle <= phi - self.epsilon_margin + 1e-12))


# ---------------------------------------------------------------------------
# Dirichlet obstacles


@dataclass(frozen=True, eq=False)
class BallObstacle:
    """Solid closed ball removed from the domain; its sphere belongs to Gamma1."""

    center: np.ndarray
    radius: float
    label: str = "obstacle"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())

    def contains(self, x, tol=0.0):
        return np.linalg.norm(as_points(x) - self.center, axis=1) <= self.radius + tol

    def boundary_distance(self, x):
        return np.abs(np.linalg.norm(as_points(x) - self.center, axis=1) - self.radius)

    def sample(self, ball, spacing):
        count = max(8, int(math.ceil(4 * math.pi * self.radius**2 / spacing**2)))
        pts = sphere_points(count, self.radius, self.center, self.center.size)
        return pts[ball.contains(pts)]

    def scaled(self, t):
        return BallObstacle(self.center * t, self.radius * t, self.label)


@dataclass(frozen=True, eq=False)
class DiskObstacle:
    """Horizontal disk (a slit) or, with ``thickness > 0``, a solid cylinder.

    The axis is ``e_n``. A flat slit is its own boundary; a thick cylinder
    contributes its surface to Gamma1.
    """

    center: np.ndarray
    radius: float
    thickness: float = 0.0
    label: str = "obstacle"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())

    def _cyl(self, x):
        d = as_points(x) - self.center
        rho = np.linalg.norm(d[:, :-1], axis=1)
        return rho - self.radius, np.abs(d[:, -1]) - 0.5 * self.thickness

    def contains(self, x, tol=0.0):
        dr, dz = self._cyl(x)
        return (dr <= tol) & (dz <= tol)

    def boundary_distance(self, x):
        dr, dz = self._cyl(x)
        outside = np.hypot(np.maximum(dr, 0.0), np.maximum(dz, 0.0))
        inside = -np.maximum(dr, dz)
        return np.where((dr > 0) | (dz > 0), outside, inside)

    def sample(self, ball, spacing):
        n = self.center.size
        flat = disk_lattice(self.radius, spacing, n - 1)
        rim_count = max(8, int(math.ceil(2 * math.pi * self.radius / spacing)))
        if n == 3:
            t = 2 * math.pi * np.arange(rim_count) / rim_count
            rim = self.radius * np.column_stack([np.cos(t), np.sin(t)])
        else:
            rim = sphere_points(rim_count, self.radius, None, n - 1)
        layers = [0.0] if self.thickness == 0 else [-0.5 * self.thickness, 0.5 * self.thickness]
        pts = []
        for z in layers:
            for planar in (flat, rim):
                pts.append(np.column_stack([planar, np.full(len(planar), z)]))
        if self.thickness > 0:
            nz = max(2, int(math.ceil(self.thickness / spacing)) + 1)
            for z in np.linspace(-0.5 * self.thickness, 0.5 * self.thickness, nz)[1:-1]:
                pts.append(np.column_stack([rim, np.full(len(rim), z)]))
        pts = np.vstack(pts) + self.center
        return pts[ball.contains(pts)]

    def scaled(self, t):
        return DiskObstacle(self.center * t, self.radius * t, self.thickness * t, self.label)


# ---------------------------------------------------------------------------
# Domain


@dataclass(frozen=True, eq=False)
class Domain:
    """Region below the graph of ``f`` with Dirichlet part Gamma1.

    Parameters
    ----------
    n : int
        Space dimension, at least 3.
    inside : callable
        Membership oracle for the open set, ``(m, n) -> bool (m,)``.
    gamma2_graph : callable
        ``f`` on ``R^{n-1}``, ``(m, n-1) -> (m,)``, with ``f(0) = 0``.
    gamma2_patch_radius : float
        Radius in ``x'`` within which the graph describes Gamma2.
    gamma1_sampler : callable
        ``(Ball, spacing) -> (k, n)`` points of Gamma1 inside the ball.
    gamma1_distance : callable, optional
        Distance to Gamma1. When absent, distances come from sampled clouds.
    obstacles, extent, depth :
        Preset metadata: the obstacle list and the truncation box
        ``|x_i| <= extent`` (i < n), ``x_n >= -depth``. ``None`` means unbounded.
    """

    n: int
    inside: Callable[[np.ndarray], np.ndarray]
    gamma2_graph: Callable[[np.ndarray], np.ndarray]
    gamma2_patch_radius: float
    gamma1_sampler: Callable[[Ball, float], np.ndarray]
    gamma1_distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"
    obstacles: tuple = ()
    extent: Optional[float] = None
    depth: Optional[float] = None
    lipschitz: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 3:
            raise GeometryError("dimension must be at least 3")
        f0 = float(np.asarray(self.gamma2_graph(np.zeros((1, self.n - 1))))[0])
        if abs(f0) > 1e-12:
            raise GeometryError(f"graph must pass through the junction, f(0) = {f0}")

    @property
    def junction(self):
        return np.zeros(self.n)

    def graph_gap(self, x):
        """``f(x') - x_n``: positive below the graph."""
        pts = as_points(x, self.n)
        return np.asarray(self.gamma2_graph(pts[:, :-1]), dtype=float) - pts[:, -1]

    def in_patch(self, x):
        pts = as_points(x, self.n)
        return np.linalg.norm(pts[:, :-1], axis=1) <= self.gamma2_patch_radius

    def in_box(self, x):
        pts = as_points(x, self.n)
        ok = np.ones(len(pts), dtype=bool)
        if self.extent is not None:
            ok &= np.all(np.abs(pts[:, :-1]) <= self.extent + 1e-12, axis=1)
        if self.depth is not None:
            ok &= pts[:, -1] >= -self.depth - 1e-12
        return ok

    def gamma1_cloud(self, ball, spacing):
        pts = np.asarray(self.gamma1_sampler(ball, spacing), dtype=float).reshape(-1, self.n)
        return pts

    def distance_to_gamma1(self, x, tol_hint=None):
        pts = as_points(x, self.n)
        if self.gamma1_distance is not None:
            return np.asarray(self.gamma1_distance(pts), dtype=float)
        out = np.full(len(pts), np.inf)
        radius = 4.0 * (tol_hint or 1e-3)
        for k, p in enumerate(pts):
            cloud = self.gamma1_cloud(Ball(p, radius), radius / 8.0)
            if len(cloud):
                out[k] = cKDTree(cloud).query(p)[0]
        return out

    def graph_distance(self, centers, radius, n_grid=41):
        """Distance from each center to the graph, capped at ``radius``.

        The graph is sampled on a square grid of ``x'`` around each center's
        projection (which is itself a grid point).
        """
        centers = as_points(centers, self.n)
        axis = np.linspace(-radius, radius, n_grid)
        offs = np.stack(np.meshgrid(*([axis] * (self.n - 1)), indexing="ij"), -1).reshape(-1, self.n - 1)
        offs = offs[np.linalg.norm(offs, axis=1) <= radius * (1 + 1e-12)]
        out = np.empty(len(centers))
        chunk = max(1, 200000 // len(offs))
        for start in range(0, len(centers), chunk):
            c = centers[start:start + chunk]
            xp = (c[:, None, :-1] + offs[None]).reshape(-1, self.n - 1)
            fz = np.asarray(self.gamma2_graph(xp), dtype=float).reshape(len(c), len(offs))
            d2 = np.sum(offs**2, axis=1)[None, :] + (fz - c[:, -1:]) ** 2
            out[start:start + chunk] = np.sqrt(d2.min(axis=1))
        return np.minimum(out, radius)

    def ball_avoids_gamma2(self, ball, tol=1e-9):
        """Closed-ball disjointness from Gamma2 up to tangency."""
        if self.graph_gap(ball.center)[0] <= 0:
            return False
        d = self.graph_distance(ball.center, ball.radius * (1 + 2 * tol))[0]
        return bool(d >= ball.radius * (1 - tol))

    def scaled(self, t):
        """Domain scaled by ``t`` about the junction (only for presets)."""
        builder = self.params.get("_builder")
        if builder is None:
            raise GeometryError("only preset domains can be rescaled")
        return builder(t)


# ---------------------------------------------------------------------------
# Point queries


def classify_points(domain, x, tol, on_ambiguous="raise"):
    """Vectorized :func:`classify` returning ``Region`` codes as ``int8``.

    ``on_ambiguous`` is ``"raise"`` or ``"gamma1"`` (Dirichlet wins).
    """
    if not tol > 0:
        raise GeometryError("tol must be positive")
    pts = as_points(x, domain.n)
    in_box = domain.in_box(pts)
    gap = domain.graph_gap(pts)
    near2 = domain.in_patch(pts) & (np.abs(gap) <= tol) & in_box
    # Graph points buried inside an obstacle are not on the boundary.
    for ob in domain.obstacles:
        near2 &= ~ob.contains(pts, -tol)
    near1 = (domain.distance_to_gamma1(pts, tol) <= tol) & (gap >= -tol) & in_box
    both = near1 & near2
    if np.any(both):
        if on_ambiguous == "raise":
            k = int(np.flatnonzero(both)[0])
            raise GeometryError(f"point {pts[k]} is within tol={tol} of both Gamma1 and Gamma2; refine tol")
        near2 &= ~near1
    out = np.full(len(pts), Region.EXTERIOR, dtype=np.int8)
    interior = np.asarray(domain.inside(pts), dtype=bool) & in_box
    out[interior] = Region.INTERIOR
    out[near2] = Region.GAMMA2
    out[near1] = Region.GAMMA1
    return out


def classify(domain, x, tol, on_ambiguous="raise"):
    """Classify a single point as interior, on Gamma1, on Gamma2 or exterior."""
    return Region(int(classify_points(domain, np.asarray(x, dtype=float)[None, :], tol, on_ambiguous)[0]))


def lipschitz_estimate(f, patch_radius, n_samples, dim=2):
    """Largest difference quotient of ``f`` over a grid in the ``x'`` ball.

    The grid has ``n_samples`` points per axis and always contains the
    center. Grids with ``n_samples = 2^k + 1`` are nested, so the estimate
    is nondecreasing under that refinement.
    """
    if n_samples < 2:
        raise GeometryError("need at least two samples")
    axis = np.linspace(-patch_radius, patch_radius, n_samples)
    pts = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), -1).reshape(-1, dim)
    pts = pts[np.linalg.norm(pts, axis=1) <= patch_radius * (1 + 1e-12)]
    pts = np.unique(np.vstack([np.zeros((1, dim)), pts]), axis=0)
    vals = np.asarray(f(pts), dtype=float)
    dx = pdist(pts)
    dv = pdist(vals[:, None])
    good = dx > 0
    return float(np.max(dv[good] / dx[good])) if np.any(good) else 0.0


def cone_points(apex, phi, height, n_samples):
    """Sample points of the cone with the given apex, axis ``-e_n`` and half-angle ``phi``."""
    apex = np.asarray(apex, dtype=float)
    n = apex.size
    heights = height * np.arange(1, n_samples + 1) / n_samples
    dirs = sphere_points(max(8, 2 * n_samples), 1.0, None, n - 1) if n > 3 else None
    pts = []
    for t in heights:
        r_max = t * math.tan(phi)
        for frac in (0.0, 0.5, 1.0):
            if n == 3:
                k = max(8, 2 * n_samples)
                ang = 2 * math.pi * np.arange(k) / k
                ring = np.column_stack([np.cos(ang), np.sin(ang)])
            else:
                ring = dirs
            planar = frac * r_max * ring
            pts.append(np.column_stack([planar, np.full(len(planar), -t)]))
    return np.vstack(pts) + apex


def cone_check(domain, y, phi, h, n_samples=16):
    """True iff every sampled point of the downward cone ``K(y)`` lies in the domain."""
    if not 0 < phi < math.pi / 2 or not h > 0:
        raise GeometryError("cone_check needs 0 < phi < pi/2 and h > 0")
    pts = cone_points(y, phi, h, n_samples)
    return bool(np.all(domain.inside(pts)))


# ---------------------------------------------------------------------------
# Presets


def _box_distance(pts, extent, depth):
    """Distance to the lateral and bottom walls for points inside the box."""
    d = np.full(len(pts), np.inf)
    if extent is not None:
        d = np.minimum(d, np.min(extent - np.abs(pts[:, :-1]), axis=1))
    if depth is not None:
        d = np.minimum(d, pts[:, -1] + depth)
    return np.abs(d)


def _wall_samples(ball, spacing, n, extent, depth, graph):
    """Points on the truncation walls below the graph, inside ``ball``."""
    pts = []
    lo = ball.center - ball.radius
    hi = ball.center + ball.radius

    def face(axis_fixed, value):
        ranges = []
        for i in range(n):
            if i == axis_fixed:
                ranges.append(np.array([value]))
            else:
                a = max(lo[i], -extent if (extent is not None and i < n - 1) else lo[i])
                b = min(hi[i], extent if (extent is not None and i < n - 1) else hi[i])
                if i == n - 1 and depth is not None:
                    a = max(a, -depth)
                if a > b:
                    return
                ranges.append(np.arange(math.floor(a / spacing), math.floor(b / spacing) + 1) * spacing)
        mesh = np.stack(np.meshgrid(*ranges, indexing="ij"), -1).reshape(-1, n)
        mesh = mesh[graph(mesh[:, :-1]) >= mesh[:, -1]]
        pts.append(mesh[ball.contains(mesh)])

    if extent is not None:
        for i in range(n - 1):
            for v in (-extent, extent):
                if lo[i] <= v <= hi[i]:
                    face(i, v)
    if depth is not None and lo[-1] <= -depth <= hi[-1]:
        face(n - 1, -depth)
    return np.vstack(pts) if pts else np.zeros((0, n))


def graph_domain(graph, n=3, obstacles=(), extent=None, depth=None, patch_radius=np.inf,
                 name="graph", lipschitz=None, params=None):
    """General preset: region below ``graph`` minus ``obstacles``, optionally truncated."""
    obstacles = tuple(obstacles)

    def inside(x):
        pts = as_points(x, n)
        ok = np.asarray(graph(pts[:, :-1]), dtype=float) > pts[:, -1]
        if extent is not None:
            ok &= np.all(np.abs(pts[:, :-1]) < extent, axis=1)
        if depth is not None:
            ok &= pts[:, -1] > -depth
        for ob in obstacles:
            ok &= ~ob.contains(pts)
        return ok

    def gamma1_distance(x):
        pts = as_points(x, n)
        d = np.full(len(pts), np.inf)
        for ob in obstacles:
            d = np.minimum(d, ob.boundary_distance(pts))
        if extent is not None or depth is not None:
            d = np.minimum(d, _box_distance(pts, extent, depth))
        return d

    def gamma1_sampler(ball, spacing):
        pts = [ob.sample(ball, spacing) for ob in obstacles]
        if extent is not None or depth is not None:
            pts.append(_wall_samples(ball, spacing, n, extent, depth, graph))
        pts = [p for p in pts if len(p)]
        return np.vstack(pts) if pts else np.zeros((0, n))

    return Domain(n=n, inside=inside, gamma2_graph=graph, gamma2_patch_radius=patch_radius,
                  gamma1_sampler=gamma1_sampler, gamma1_distance=gamma1_distance, name=name,
                  obstacles=obstacles, extent=extent, depth=depth, lipschitz=lipschitz,
                  params=dict(params or {}))


def _flat(xp):
    return np.zeros(len(np.atleast_2d(xp)))


def halfspace(n=3, obstacles=(), extent=None, depth=None):
    """``{x_n < 0}`` minus obstacles; flat Gamma2 with ``L = 0``."""
    obstacles = tuple(obstacles)

    def builder(t):
        return halfspace(n, [ob.scaled(t) for ob in obstacles],
                         None if extent is None else extent * t, None if depth is None else depth * t)

    return graph_domain(_flat, n, obstacles, extent, depth, name="halfspace", lipschitz=0.0,
                        params={"_builder": builder})


def slit(radius, center_depth, thickness=0.0, n=3, extent=None, depth=None, extra=()):
    """Half-space with a horizontal slit (thin or thick disk) centered below the junction."""
    center = np.zeros(n)
    center[-1] = -center_depth
    obs = (DiskObstacle(center, radius, thickness, label="slit"),) + tuple(extra)
    dom = halfspace(n, obs, extent, depth)
    return Domain(**{**dom.__dict__, "name": "slit",
                     "params": {**dom.params, "radius": radius, "center_depth": center_depth,
                                "thickness": thickness}})


def cone(L, n=3, obstacles=(), extent=None, depth=None):
    """Region below ``x_n = -L |x'|``: a convex cone with apex at the junction."""
    obstacles = tuple(obstacles)

    def f(xp):
        return -L * np.linalg.norm(np.atleast_2d(xp), axis=1)

    def builder(t):
        return cone(L, n, [ob.scaled(t) for ob in obstacles],
                    None if extent is None else extent * t, None if depth is None else depth * t)

    return graph_domain(f, n, obstacles, extent, depth, name=f"cone L={L:g}", lipschitz=float(L),
                        params={"L": L, "_builder": builder})


def pl_graph(xprime, values, n=3, obstacles=(), extent=None, depth=None):
    """Graph given by samples, piecewise linear on their Delaunay triangulation."""
    from scipy.interpolate import LinearNDInterpolator
    from scipy.spatial import ConvexHull

    xprime = np.asarray(xprime, dtype=float).reshape(-1, n - 1)
    values = np.asarray(values, dtype=float).ravel()
    interp = LinearNDInterpolator(xprime, values, fill_value=np.nan)

    def f(xp):
        return np.asarray(interp(np.atleast_2d(xp)), dtype=float).ravel()

    hull = ConvexHull(xprime)
    # Distance from the origin to the hull facets bounds the valid patch.
    patch = float(np.min(-hull.equations[:, -1]))
    lip = lipschitz_estimate(f, 0.999 * patch, 33, n - 1) if patch > 0 else None
    return graph_domain(f, n, obstacles, extent, depth, patch_radius=patch, name="pl-graph",
                        lipschitz=lip)


def disk_stack(Q=2.0, depth_ratio=0.875, radius_ratio=0.1875, m_max=8, n=3, extent=2.0,
               depth=2.0, source_radius=None):
    """Half-space with a self-similar stack of slits accumulating at the junction.

    Slit ``m`` is centered at depth ``depth_ratio * Q^-m`` with radius
    ``radius_ratio * Q^-m``. ``source_radius`` adds a small ball labelled
    ``"junction"`` that stands in for the junction point itself (used to
    prescribe a singular profile there).
    """
    obs = []
    for m in range(m_max + 1):
        c = np.zeros(n)
        c[-1] = -depth_ratio * Q ** (-m)
        obs.append(DiskObstacle(c, radius_ratio * Q ** (-m), 0.0, label=f"slit{m}"))
    if source_radius is not None:
        obs.append(BallObstacle(np.zeros(n), source_radius, label="junction"))
    dom = halfspace(n, obs, extent, depth)
    return Domain(**{**dom.__dict__, "name": "disk-stack",
                     "params": {"Q": Q, "depth_ratio": depth_ratio, "radius_ratio": radius_ratio,
                                "m_max": m_max, "source_radius": source_radius}})


def nearest_gamma1_label(domain, x):
    """Label of the Gamma1 piece closest to each point (``"walls"`` for the box)."""
    pts = as_points(x, domain.n)
    labels = ["walls"] + [ob.label for ob in domain.obstacles]
    dists = [_box_distance(pts, domain.extent, domain.depth)
             if (domain.extent is not None or domain.depth is not None) else np.full(len(pts), np.inf)]
    for ob in domain.obstacles:
        d = ob.boundary_distance(pts)
        d = np.where(ob.contains(pts), 0.0, d)
        dists.append(d)
    idx = np.argmin(np.vstack(dists), axis=0)
    return np.array(labels, dtype=object)[idx]


def bounding_points(points: Sequence) -> np.ndarray:
    return as_points(points)
