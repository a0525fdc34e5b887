"""Riesz s-capacity of point clouds through admissible discrete measures.

A measure on the atoms of ``H`` is admissible when its Riesz potential
``sum_i m_i / |x - y_i|^s`` is at most one at every constraint point outside
``H``. The largest admissible total mass is a finite linear program.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ._ipm import packing_lp
from .errors import CapacityError
from .geometry import as_points, disk_lattice, sphere_points

FEAS_TOL = 1e-9
# Above this many atoms the dense interior point solver replaces HiGHS.
IPM_THRESHOLD = 60


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atoms with nonnegative masses."""

    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        atoms = as_points(self.atoms) if np.size(self.atoms) else np.zeros((0, 3))
        masses = np.asarray(self.masses, dtype=float).ravel()
        if len(masses) != len(atoms):
            raise CapacityError("atoms and masses differ in length")
        if np.any(masses < 0):
            raise CapacityError("masses must be nonnegative")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    @property
    def total(self):
        return float(self.masses.sum())

    @classmethod
    def zero(cls, atoms):
        atoms = as_points(atoms)
        return cls(atoms, np.zeros(len(atoms)))


@dataclass(frozen=True, eq=False)
class CapacityProblem:
    """Atoms of ``H``, exponent ``s`` and constraint points off ``H``.

    When ``constraint_points`` is omitted the default layout from
    :func:`default_constraints` is used.
    """

    H: np.ndarray
    s: float
    constraint_points: Optional[np.ndarray] = None
    clearance: float = 0.0
    feas_tol: float = FEAS_TOL
    method: str = "auto"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.s > 0:
            raise CapacityError(f"s must be positive, got {self.s}")
        H = as_points(self.H)
        if H.size == 0:
            raise CapacityError("H must contain at least one atom")
        object.__setattr__(self, "H", H)
        if self.constraint_points is None:
            cons = default_constraints(H, **self.options)
        else:
            cons = as_points(self.constraint_points, H.shape[1])
        object.__setattr__(self, "constraint_points", cons)
        if len(cons):
            d = cKDTree(H).query(cons)[0]
            guard = max(self.clearance, 0.0)
            if np.min(d) <= guard:
                raise CapacityError(f"constraint point within clearance {guard} of an atom "
                                    f"(distance {np.min(d):.3g})")

    def scaled(self, t):
        return CapacityProblem(self.H * t, self.s, self.constraint_points * t, self.clearance * t,
                               self.feas_tol, self.method)


def kernel_matrix(constraints, atoms, s):
    d = cdist(as_points(constraints), as_points(atoms))
    if np.any(d == 0):
        raise CapacityError("constraint point coincides with an atom: infinite potential")
    return d ** (-s)


def potential(mu, s, x):
    """``sum_i m_i / |x - y_i|^s`` at one point (float) or many (array)."""
    vals = kernel_matrix(x, mu.atoms, s) @ mu.masses if len(mu.atoms) else np.zeros(len(as_points(x)))
    return float(vals[0]) if np.ndim(x) == 1 else vals


def is_admissible(mu, problem):
    cons = problem.constraint_points
    if len(cons) == 0:
        raise CapacityError("constraint set is empty")
    return bool(np.all(potential(mu, problem.s, cons) <= 1.0 + problem.feas_tol))


def _spacing(H):
    if len(H) < 2:
        return 1.0
    d = cKDTree(H).query(H, k=2)[0][:, 1]
    return float(np.median(d[d > 0])) if np.any(d > 0) else 1.0


def default_constraints(H, n_shell=400, near_factor=0.5, shell_radii=(1.05, 3.0), k_neighbors=8,
                        min_clearance=0.25):
    """Constraint layout: two enclosing shells plus near-field points.

    Shells are Fibonacci spheres at ``shell_radii * r_H`` around the centroid,
    ``r_H`` the circumradius. Near-field points sit at ``+-near_factor *
    spacing`` along each atom's local normal, estimated by PCA over its
    nearest neighbors; small clouds use the coordinate directions instead.
    Points closer than ``min_clearance * spacing`` to an atom are dropped.
    """
    H = as_points(H)
    n = H.shape[1]
    center = H.mean(axis=0)
    spacing = _spacing(H)
    r_h = float(np.max(np.linalg.norm(H - center, axis=1)))
    r_h = max(r_h, spacing)
    parts = [sphere_points(n_shell, f * r_h, center, n) for f in shell_radii]
    off = near_factor * spacing
    if len(H) >= 4:
        k = min(k_neighbors, len(H))
        _, idx = cKDTree(H).query(H, k=k)
        nbr = H[idx] - H[idx].mean(axis=1, keepdims=True)
        _, _, vt = np.linalg.svd(nbr, full_matrices=False)
        normals = vt[:, -1, :]
        parts += [H + off * normals, H - off * normals]
    else:
        for i in range(n):
            e = np.zeros(n)
            e[i] = off
            parts += [H + e, H - e]
    cons = np.vstack(parts)
    d = cKDTree(H).query(cons)[0]
    return cons[d >= min_clearance * spacing]


def _solve_highs(A):
    m, k = A.shape
    res = linprog(-np.ones(k), A_ub=A, b_ub=np.ones(m), bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status == 3:
        raise CapacityError("capacity LP is unbounded: sample the constraints more densely")
    if res.status != 0:
        raise CapacityError(f"capacity LP failed: {res.message}")
    return np.maximum(res.x, 0.0)


def capacity_estimate(problem):
    """Maximal admissible mass on the atoms of ``H``.

    Returns
    -------
    value : float
        Total mass of the witness; a lower bound for the continuum capacity up
        to constraint-sampling error.
    witness : DiscreteMeasure
        Optimal measure, rescaled if needed so that it is admissible within
        ``feas_tol``.
    """
    H = problem.H
    if len(H) == 1:
        return 0.0, DiscreteMeasure.zero(H)
    cons = problem.constraint_points
    if len(cons) == 0:
        raise CapacityError("capacity LP is unbounded: constraint set is empty, "
                            "sample the constraints more densely")
    A = kernel_matrix(cons, H, problem.s)
    method = problem.method
    if method == "auto":
        method = "highs" if len(H) <= IPM_THRESHOLD else "ipm"
    if method == "highs":
        x = _solve_highs(A)
    elif method == "ipm":
        x, _, _ = packing_lp(A, np.ones(len(cons)))
        x = np.maximum(x, 0.0)
    else:
        raise CapacityError(f"unknown LP method {method!r}")
    peak = float(np.max(A @ x)) if len(x) else 0.0
    if peak > 1.0 + problem.feas_tol:
        x = x / peak
    return float(x.sum()), DiscreteMeasure(H, x)


def capacity_oracle_small(atoms, s, constraints):
    """Exact LP value for at most three atoms by vertex enumeration.

    Every vertex of ``{m >= 0, A m <= 1}`` is the solution of ``k`` active
    rows; all ``k``-subsets are solved and the best feasible one is kept.
    Rows dominated entrywise by another row are dropped first (they can
    never be the unique binding constraint of an optimum).
    """
    atoms = as_points(atoms)
    k = len(atoms)
    if k > 3:
        raise CapacityError("oracle handles at most 3 atoms")
    if k == 0:
        return 0.0
    A = kernel_matrix(constraints, atoms, s)
    A = np.unique(A, axis=0)
    keep = np.ones(len(A), dtype=bool)
    for i in range(len(A)):
        others = np.delete(np.arange(len(A)), i)
        if np.any(np.all(A[others] >= A[i], axis=1) & keep[others]):
            keep[i] = False
    A_red = A[keep]
    rows = np.vstack([A_red, -np.eye(k)])
    rhs = np.concatenate([np.ones(len(A_red)), np.zeros(k)])
    best = 0.0
    for subset in itertools.combinations(range(len(rows)), k):
        sub = rows[list(subset)]
        if abs(np.linalg.det(sub)) < 1e-14:
            continue
        m = np.linalg.solve(sub, rhs[list(subset)])
        if np.all(m >= -1e-12) and np.all(A @ m <= 1.0 + 1e-10):
            best = max(best, float(m.sum()))
    return best


# ---------------------------------------------------------------------------
# Point clouds


def sphere_cloud(n_atoms, radius=1.0, center=None, dim=3):
    return sphere_points(n_atoms, radius, center, dim)


def disk_cloud(center, radius, spacing):
    """Flat horizontal disk sampled on a square lattice (rim included)."""
    center = np.asarray(center, dtype=float)
    n = center.size
    flat = disk_lattice(radius, spacing, n - 1)
    k = max(8, int(math.ceil(2 * math.pi * radius / spacing)))
    t = 2 * math.pi * np.arange(k) / k
    rim = radius * np.column_stack([np.cos(t), np.sin(t)]) if n == 3 else sphere_points(k, radius, None, n - 1)
    inner = flat[np.linalg.norm(flat, axis=1) < radius - 0.5 * spacing]
    pts = np.vstack([inner, rim])
    return np.column_stack([pts, np.zeros(len(pts))]) + center


def ball_cloud(center, radius, n_atoms=400):
    """Surface of a solid ball; its capacity equals that of the ball."""
    center = np.asarray(center, dtype=float)
    return sphere_points(n_atoms, radius, center, center.size)


def capacity_of(points, s, **kwargs):
    """Shortcut: capacity of a cloud with the default constraint layout."""
    pts = as_points(points)
    if len(pts) == 0:
        return 0.0
    return capacity_estimate(CapacityProblem(pts, s, **kwargs))[0]
