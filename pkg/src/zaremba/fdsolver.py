"""Monotone finite differences for the mixed problem.

Interior rows discretize ``-sum a_ij D_ij u`` with axis and 45-degree
second differences whose weights are nonnegative under diagonal dominance
of ``a``. Oblique rows use the upwind quotient ``(u(x) - I[u](x - h l))/h``
with multilinear interpolation ``I``. Dirichlet and artificial nodes get
identity rows. The resulting matrix is an M-matrix, so the discrete
comparison principle holds exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import binary_dilation

from .coeffs import CoefficientField, diagonal_dominance_margin
from .errors import AssemblyError, ConvergenceError
from .geometry import Ball, Domain, Region, VectorField, as_points, classify_points, nearest_gamma1_label

EXTERIOR, INTERIOR, GAMMA1, GAMMA2, ARTIFICIAL = 0, 1, 2, 3, 4
KIND_NAMES = {EXTERIOR: "exterior", INTERIOR: "interior", GAMMA1: "gamma1", GAMMA2: "gamma2",
              ARTIFICIAL: "artificial"}
DIRICHLET_KINDS = (GAMMA1, ARTIFICIAL)
OMEGA_KINDS = (INTERIOR, GAMMA2, ARTIFICIAL)


@dataclass(eq=False)
class Grid:
    """Uniform tensor grid on the box ``[lo, lo + h (shape - 1)]`` with node kinds."""

    lo: np.ndarray
    h: float
    shape: tuple
    kinds: np.ndarray

    @property
    def n(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def hi(self):
        return self.lo + self.h * (np.asarray(self.shape) - 1)

    def coords(self, flat_index=None):
        idx = np.arange(self.size) if flat_index is None else np.asarray(flat_index)
        sub = np.column_stack(np.unravel_index(idx, self.shape))
        return self.lo + self.h * sub

    def axes(self):
        return [self.lo[i] + self.h * np.arange(self.shape[i]) for i in range(self.n)]

    def count(self, kind):
        return int(np.sum(self.kinds == kind))


def build_grid(domain: Domain, lo, hi, h, on_ambiguous="gamma1"):
    """Classify the nodes of a box grid with tolerance ``h/2``.

    Box-face nodes that would be interior or on Gamma2 become artificial
    Dirichlet nodes, except Gamma2 nodes on the top face. Exterior stencil
    neighbors of interior nodes that lie below the graph (inside obstacles
    or outside the truncation box) become Gamma1 nodes.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.size != domain.n or hi.size != domain.n:
        raise AssemblyError("grid box dimension does not match the domain")
    shape = tuple(int(round((hi[i] - lo[i]) / h)) + 1 for i in range(domain.n))
    if min(shape) < 3:
        raise AssemblyError("grid needs at least three nodes per axis")
    grid = Grid(lo, float(h), shape, np.zeros(int(np.prod(shape)), dtype=np.int8))
    pts = grid.coords()
    kinds = classify_points(domain, pts, 0.5 * h, on_ambiguous=on_ambiguous).astype(np.int8)
    sub = np.column_stack(np.unravel_index(np.arange(grid.size), shape))
    lateral = np.any((sub[:, :-1] == 0) | (sub[:, :-1] == np.asarray(shape[:-1]) - 1), axis=1)
    face = lateral | (sub[:, -1] == 0) | (sub[:, -1] == shape[-1] - 1)
    kinds[face & (kinds == INTERIOR)] = ARTIFICIAL
    kinds[lateral & (kinds == GAMMA2)] = ARTIFICIAL
    kinds[(sub[:, -1] == 0) & (kinds == GAMMA2)] = ARTIFICIAL
    interior = (kinds == INTERIOR).reshape(shape)
    near = binary_dilation(interior, np.ones((3,) * domain.n, dtype=bool)).ravel()
    promote = near & (kinds == EXTERIOR) & (domain.graph_gap(pts) >= -1e-12 * h)
    kinds[promote] = GAMMA1
    grid.kinds = kinds
    return grid


@dataclass(eq=False)
class BoundaryData:
    """Right-hand sides: ``phi`` on Gamma1, ``psi`` on Gamma2, ``g`` in the interior.

    Each entry is a scalar, a callable on points ``(m, n) -> (m,)``, or an
    array with one value per system row. ``artificial`` supplies values at
    artificial nodes and defaults to ``phi``.
    """

    phi: Union[float, Callable, np.ndarray] = 0.0
    psi: Union[float, Callable, np.ndarray] = 0.0
    g: Union[float, Callable, np.ndarray] = 0.0
    artificial: Optional[Union[float, Callable, np.ndarray]] = None

    @staticmethod
    def piecewise(domain, values, default=0.0):
        """``phi`` given per labelled Gamma1 piece (``"walls"`` for the box).

        Each value is a scalar or a callable on points.
        """
        values = dict(values)

        def phi(x):
            pts = np.atleast_2d(np.asarray(x, dtype=float))
            labels = np.asarray(nearest_gamma1_label(domain, pts))
            out = np.empty(len(pts))
            for lab in set(labels.tolist()):
                sel = labels == lab
                v = values.get(lab, default)
                out[sel] = np.asarray(v(pts[sel]), dtype=float) if callable(v) else float(v)
            return out

        return phi


def _evaluate(spec, pts, rows):
    if callable(spec):
        out = np.asarray(spec(pts), dtype=float).ravel()
        return np.broadcast_to(out, (len(pts),)) if out.size == 1 else out
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 0:
        return np.full(len(pts), float(arr))
    arr = arr.ravel()
    if rows is not None and arr.size > len(pts):
        return arr[rows]
    if arr.size != len(pts):
        raise AssemblyError(f"data array has {arr.size} values for {len(pts)} nodes")
    return arr


@dataclass(eq=False)
class DiscreteSystem:
    """Sparse system ``A u = b`` over the active (non-exterior) nodes."""

    grid: Grid
    matrix: sp.csr_matrix
    rhs: np.ndarray
    nodes: np.ndarray          # flat grid index of each row
    index_map: np.ndarray      # flat grid index -> row, -1 for exterior
    row_kind: np.ndarray
    cache: dict = field(default_factory=dict)

    @property
    def n_rows(self):
        return len(self.nodes)

    def coords(self):
        return self.grid.coords(self.nodes)

    def rhs_for(self, data: BoundaryData):
        """Right-hand side for new data on the same matrix."""
        pts = self.coords()
        b = np.zeros(self.n_rows)
        rows = np.arange(self.n_rows)
        for kinds, spec in (((INTERIOR,), data.g), ((GAMMA2,), data.psi), ((GAMMA1,), data.phi),
                            ((ARTIFICIAL,), data.phi if data.artificial is None else data.artificial)):
            sel = np.isin(self.row_kind, kinds)
            if np.any(sel):
                b[sel] = _evaluate(spec, pts[sel], rows[sel])
        if not np.all(np.isfinite(b)):
            raise AssemblyError("boundary data is not finite at every node")
        return b

    def apply(self, values):
        """Row operator applied to nodal values (per row, or a full grid array)."""
        v = np.asarray(values, dtype=float).ravel()
        if v.size == self.grid.size:
            v = v[self.nodes]
        return self.matrix @ v

    def check_m_matrix(self, tol=1e-12):
        """True iff diagonal > 0, off-diagonal <= 0 and rows are weakly diagonally dominant."""
        A = self.matrix.tocoo()
        diag = self.matrix.diagonal()
        off = A.row != A.col
        if np.any(diag <= 0) or np.any(A.data[off] > tol * np.abs(diag[A.row[off]])):
            return False
        offsum = np.bincount(A.row[off], weights=np.abs(A.data[off]), minlength=self.n_rows)
        return bool(np.all(diag - offsum >= -tol * diag))


def _stencil(a):
    """Nonnegative weights ``c_v`` for axis and diagonal directions, per node."""
    n = a.shape[1]
    dirs, weights = [], []
    for i in range(n):
        e = np.zeros(n, dtype=int)
        e[i] = 1
        c = a[:, i, i] - (np.sum(np.abs(a[:, i, :]), axis=1) - np.abs(a[:, i, i]))
        dirs.append(e)
        weights.append(c)
    for i, j in itertools.combinations(range(n), 2):
        plus = np.zeros(n, dtype=int)
        plus[[i, j]] = 1
        minus = np.zeros(n, dtype=int)
        minus[i], minus[j] = 1, -1
        dirs += [plus, minus]
        weights += [np.maximum(a[:, i, j], 0.0), np.maximum(-a[:, i, j], 0.0)]
    return dirs, weights


def _foot_weights(grid, foot):
    """Multilinear interpolation corners and weights for points ``foot`` (m, n)."""
    n = grid.n
    rel = (foot - grid.lo) / grid.h
    snapped = np.round(rel)
    rel = np.where(np.abs(rel - snapped) < 1e-9, snapped, rel)
    base = np.floor(rel).astype(int)
    frac = rel - base
    corners, weights = [], []
    for bits in itertools.product((0, 1), repeat=n):
        b = np.asarray(bits)
        idx = base + b
        w = np.prod(np.where(b == 1, frac, 1.0 - frac), axis=1)
        corners.append(idx)
        weights.append(w)
    return corners, weights


def assemble(domain: Domain, field_: CoefficientField, grid: Grid, ell: VectorField,
             data: Optional[BoundaryData] = None):
    """Build the monotone system on ``grid``.

    Raises
    ------
    AssemblyError
        If ``a`` is not diagonally dominant at an interior node, a stencil
        neighbor is exterior, or an oblique foot point leaves the active nodes.
    """
    n = grid.n
    kinds = grid.kinds
    shape = grid.shape
    nodes = np.flatnonzero(kinds != EXTERIOR)
    index_map = np.full(grid.size, -1, dtype=np.int64)
    index_map[nodes] = np.arange(len(nodes))
    row_kind = kinds[nodes]
    h = grid.h
    rows, cols, vals = [], [], []

    # Dirichlet and artificial rows.
    dr = np.flatnonzero(np.isin(row_kind, DIRICHLET_KINDS))
    rows.append(dr)
    cols.append(dr)
    vals.append(np.ones(len(dr)))

    # Interior rows.
    ir = np.flatnonzero(row_kind == INTERIOR)
    if len(ir):
        flat = nodes[ir]
        sub = np.column_stack(np.unravel_index(flat, shape))
        pts = grid.lo + h * sub
        a = field_(pts)
        margin = diagonal_dominance_margin(a)
        if np.any(margin < -1e-12):
            k = int(np.argmin(margin))
            raise AssemblyError(f"coefficient matrix not diagonally dominant at node {pts[k]} "
                                f"(margin {margin[k]:.3g}); use a compliant preset")
        dirs, weights = _stencil(a)
        diag = np.zeros(len(ir))
        for v, c in zip(dirs, weights):
            if not np.any(c > 0):
                continue
            for sgn in (1, -1):
                nb = sub + sgn * v
                if np.any(nb < 0) or np.any(nb >= np.asarray(shape)):
                    bad = np.any((nb < 0) | (nb >= np.asarray(shape)), axis=1) & (c > 0)
                    if np.any(bad):
                        raise AssemblyError(f"interior node {pts[np.argmax(bad)]} has a stencil "
                                            "neighbor outside the grid")
                    nb = np.clip(nb, 0, np.asarray(shape) - 1)
                nbf = np.ravel_multi_index(tuple(nb.T), shape)
                col = index_map[nbf]
                bad = (col < 0) & (c > 0)
                if np.any(bad):
                    raise AssemblyError(f"interior node {pts[np.argmax(bad)]} has an exterior "
                                        "stencil neighbor; refine the grid")
                use = c > 0
                rows.append(ir[use])
                cols.append(col[use])
                vals.append(-c[use] / h**2)
            diag += 2.0 * c / h**2
        rows.append(ir)
        cols.append(ir)
        vals.append(diag)

    # Oblique rows.
    gr = np.flatnonzero(row_kind == GAMMA2)
    if len(gr):
        pts = grid.coords(nodes[gr])
        lv = ell(pts)
        corners, weights = _foot_weights(grid, pts - h * lv)
        self_w = np.zeros(len(gr))
        for idx, w in zip(corners, weights):
            use = w > 1e-14
            out = np.any((idx < 0) | (idx >= np.asarray(shape)), axis=1) & use
            if np.any(out):
                raise AssemblyError(f"oblique foot point of {pts[np.argmax(out)]} leaves the grid")
            idx = np.clip(idx, 0, np.asarray(shape) - 1)
            col = index_map[np.ravel_multi_index(tuple(idx.T), shape)]
            bad = use & (col < 0)
            if np.any(bad):
                raise AssemblyError(f"oblique foot point of Gamma2 node {pts[np.argmax(bad)]} exits "
                                    "the domain; the vector field is not inward enough for this grid")
            is_self = use & (col == gr)
            self_w += np.where(is_self, w, 0.0)
            keep = use & ~is_self
            rows.append(gr[keep])
            cols.append(col[keep])
            vals.append(-w[keep] / h)
        if np.any(self_w >= 1 - 1e-12):
            raise AssemblyError("oblique foot point coincides with its own node")
        rows.append(gr)
        cols.append(gr)
        vals.append((1.0 - self_w) / h)

    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(nodes), len(nodes)))
    A.sum_duplicates()
    system = DiscreteSystem(grid, A, np.zeros(len(nodes)), nodes, index_map, row_kind)
    if data is not None:
        system.rhs = system.rhs_for(data)
    return system


# ---------------------------------------------------------------------------
# Solving


@dataclass(eq=False)
class GridSolution:
    """Nodal values on the full grid (NaN at exterior nodes)."""

    grid: Grid
    values: np.ndarray
    residual: float
    iterations: int
    system: Optional[DiscreteSystem] = None

    @property
    def flat(self):
        return self.values.ravel()

    def interpolate(self, points):
        """Multilinear interpolation; exterior corners are dropped and weights renormalized."""
        pts = as_points(points, self.grid.n)
        corners, weights = _foot_weights(self.grid, pts)
        num = np.zeros(len(pts))
        den = np.zeros(len(pts))
        shape = np.asarray(self.grid.shape)
        for idx, w in zip(corners, weights):
            ok = np.all((idx >= 0) & (idx < shape), axis=1)
            v = np.full(len(pts), np.nan)
            if np.any(ok):
                v[ok] = self.flat[np.ravel_multi_index(tuple(idx[ok].T), self.grid.shape)]
            good = ok & np.isfinite(v) & (w > 0)
            num[good] += w[good] * v[good]
            den[good] += w[good]
        out = np.full(len(pts), np.nan)
        pos = den > 1e-12
        out[pos] = num[pos] / den[pos]
        return out


def _split(system):
    dirichlet = np.isin(system.row_kind, DIRICHLET_KINDS)
    free = np.flatnonzero(~dirichlet)
    fixed = np.flatnonzero(dirichlet)
    return free, fixed


def _hierarchy(system, free):
    cached = system.cache.get("amg")
    if cached is not None:
        return cached
    import pyamg

    A = system.matrix
    Aff = A[free][:, free].tocsr()
    dinv = 1.0 / Aff.diagonal()
    S = sp.diags(dinv) @ Aff
    S = S.tocsr()
    ml = pyamg.smoothed_aggregation_solver(S, symmetry="nonsymmetric", max_coarse=500)
    system.cache["amg"] = (Aff, dinv, S, ml)
    return system.cache["amg"]


def solve(system: DiscreteSystem, tol=1e-10, max_iter=10**6, method="amg", rhs=None, x0=None):
    """Solve to scaled residual ``max |D^-1 (b - A u)| <= tol`` over the free rows.

    ``method="amg"`` runs BiCGSTAB preconditioned by smoothed aggregation
    (the hierarchy is cached on the system), with restarts until the
    max-norm tolerance is met. ``method="gauss_seidel"`` performs forward
    lexicographic Gauss-Seidel sweeps. Both are deterministic.
    """
    b = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    free, fixed = _split(system)
    u = np.zeros(system.n_rows) if x0 is None else np.array(x0, dtype=float)
    u[fixed] = b[fixed] / system.matrix.diagonal()[fixed]
    A = system.matrix
    if len(free) == 0:
        return _pack(system, u, 0.0, 0)
    Afd = A[free][:, fixed]
    bf = b[free] - Afd @ u[fixed]
    if method == "amg":
        Aff, dinv, S, ml = _hierarchy(system, free)
        sb = dinv * bf
        x = u[free].copy()
        total = 0
        res = np.max(np.abs(sb - S @ x))
        scale = max(np.linalg.norm(sb), 1e-300)
        rounds = 0
        while res > tol and total < max_iter and rounds < 50:
            r = sb - S @ x
            resid = []
            dx = ml.solve(r, tol=max(0.1 * tol / scale, 1e-15), maxiter=min(200, max_iter - total),
                          accel="bicgstab", residuals=resid)
            total += max(len(resid) - 1, 1)
            x = x + dx
            new = np.max(np.abs(sb - S @ x))
            rounds += 1
            if not np.isfinite(new) or (new >= res and rounds > 3):
                res = new
                break
            res = new
        if not res <= tol:
            raise ConvergenceError(f"AMG solve stopped at residual {res:.3g} > {tol:.3g}",
                                   residual=float(res), iterations=total)
        u[free] = x
        return _pack(system, u, float(res), total)
    if method == "gauss_seidel":
        from pyamg.relaxation.relaxation import gauss_seidel

        Aff = A[free][:, free].tocsr()
        dinv = 1.0 / Aff.diagonal()
        x = u[free].copy()
        res = np.max(np.abs(dinv * (bf - Aff @ x)))
        it = 0
        while res > tol and it < max_iter:
            sweeps = min(10, max_iter - it)
            gauss_seidel(Aff, x, bf, iterations=sweeps, sweep="forward")
            it += sweeps
            res = np.max(np.abs(dinv * (bf - Aff @ x)))
        if not res <= tol:
            raise ConvergenceError(f"Gauss-Seidel stopped at residual {res:.3g} after {it} sweeps",
                                   residual=float(res), iterations=it)
        u[free] = x
        return _pack(system, u, float(res), it)
    raise ConvergenceError(f"unknown solver method {method!r}")


def _pack(system, u, residual, iterations):
    values = np.full(system.grid.size, np.nan)
    values[system.nodes] = u
    return GridSolution(system.grid, values.reshape(system.grid.shape), residual, iterations, system)


def residual_norm(system, solution, rhs=None):
    b = system.rhs if rhs is None else rhs
    u = solution.flat[system.nodes]
    return float(np.max(np.abs((b - system.matrix @ u) / system.matrix.diagonal())))


def sup_on(solution: GridSolution, region, kinds=OMEGA_KINDS):
    """Maximum nodal value over nodes of the given kinds inside ``region``.

    ``region`` is a predicate on points or a :class:`~zaremba.geometry.Ball`.
    """
    grid = solution.grid
    sel = np.flatnonzero(np.isin(grid.kinds, kinds))
    pts = grid.coords(sel)
    mask = region.contains(pts) if isinstance(region, Ball) else np.asarray(region(pts), dtype=bool)
    if not np.any(mask):
        raise AssemblyError("region contains no nodes")
    return float(np.max(solution.flat[sel[mask]]))


def solve_problem(domain, field_, ell, data, lo, hi, h, tol=1e-10, method="amg"):
    """Grid, assembly and solve in one call."""
    grid = build_grid(domain, lo, hi, h)
    system = assemble(domain, field_, grid, ell, data)
    return solve(system, tol=tol, method=method)


def domain_box(domain, top=0.0):
    """Grid box matching the truncation box of a preset domain, with the given top height."""
    if domain.extent is None or domain.depth is None:
        raise AssemblyError("domain has no truncation box")
    n = domain.n
    lo = np.full(n, -float(domain.extent))
    lo[-1] = -float(domain.depth)
    hi = np.full(n, float(domain.extent))
    hi[-1] = top
    return lo, hi
