"""Coefficient fields ``a_ij(x)`` and the ellipticity function.

The operator is ``Lu = -sum_ij a_ij(x) D_i D_j u``. A field returns one
symmetric matrix per query point; all functions below are vectorized over
point arrays of shape ``(m, n)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EllipticityError

EIG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Symmetric matrix-valued function on ``R^n``.

    Parameters
    ----------
    n : int
        Dimension.
    kind : str
        Preset tag: ``identity``, ``constant-diagonal``, ``constant-full`` or
        ``oscillating``.
    matrix_fn : callable
        ``(m, n) -> (m, n, n)``. The output is symmetrized on every query, so
        symmetry holds exactly.
    """

    n: int
    kind: str
    matrix_fn: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        a = np.asarray(self.matrix_fn(pts), dtype=float)
        a = np.broadcast_to(a, (len(pts), self.n, self.n))
        return 0.5 * (a + np.swapaxes(a, 1, 2))

    @property
    def is_constant(self):
        return self.kind != "oscillating"

    def scaled(self, c):
        """Field multiplied by ``c > 0``."""
        fn = self.matrix_fn
        return CoefficientField(self.n, self.kind, lambda x: c * np.asarray(fn(x)), dict(self.params))


def _constant(mat, kind, params):
    mat = np.asarray(mat, dtype=float)
    return CoefficientField(mat.shape[0], kind, lambda x: np.broadcast_to(mat, (len(x),) + mat.shape),
                            params)


def identity(n=3):
    return _constant(np.eye(n), "identity", {})


def diag(values):
    values = [float(v) for v in values]
    return _constant(np.diag(values), "constant-diagonal", {"values": values})


def rot2d(angle, eigs, n=3):
    """Constant matrix ``R diag(eigs) R^T`` with ``R`` a rotation by ``angle`` in the x1-x2 plane.

    ``eigs`` has length ``n``; the remaining axes are not rotated.
    """
    eigs = [float(v) for v in eigs]
    if len(eigs) != n:
        raise EllipticityError(f"rot2d needs {n} eigenvalues, got {len(eigs)}")
    rot = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    rot[:2, :2] = [[c, -s], [s, c]]
    return _constant(rot @ np.diag(eigs) @ rot.T, "constant-full", {"angle": angle, "eigs": eigs})


def constant_full(matrix):
    mat = np.asarray(matrix, dtype=float)
    return _constant(0.5 * (mat + mat.T), "constant-full", {"matrix": mat.tolist()})


def osc(amplitude, frequency, n=3):
    """``diag(1 + A sin(omega x1), 1, ..., 1)``; elliptic when ``|A| < 1``."""
    if not abs(amplitude) < 1:
        raise EllipticityError("oscillating field needs |amplitude| < 1")

    def fn(x):
        out = np.zeros((len(x), n, n))
        idx = np.arange(n)
        out[:, idx, idx] = 1.0
        out[:, 0, 0] += amplitude * np.sin(frequency * x[:, 0])
        return out

    return CoefficientField(n, "oscillating", fn, {"amplitude": amplitude, "frequency": frequency})


def parse_field(spec, n=3):
    """Build a field from its config string.

    Accepted forms: ``identity``, ``diag:[d1,...,dn]``, ``rot2d:angle,eigs``
    with ``eigs`` a bracketed list, and ``osc:amplitude,frequency``.
    """
    text = spec.strip()
    if text == "identity":
        return identity(n)
    name, _, rest = text.partition(":")
    nums = [float(v) for v in re.findall(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?", rest)]
    if name == "diag" and len(nums) == n:
        return diag(nums)
    if name == "rot2d" and len(nums) == n + 1:
        return rot2d(nums[0], nums[1:], n)
    if name == "osc" and len(nums) == 2:
        return osc(nums[0], nums[1], n)
    raise EllipticityError(f"unknown or malformed coefficient preset {spec!r}")


# ---------------------------------------------------------------------------
# Eigenvalues


def sym3_eigvals(a):
    """Eigenvalues of symmetric 3x3 matrices in ascending order.

    Uses the trigonometric solution of the characteristic cubic; matrices
    that are (numerically) multiples of the identity short-circuit.
    """
    a = np.asarray(a, dtype=float)
    p1 = a[:, 0, 1] ** 2 + a[:, 0, 2] ** 2 + a[:, 1, 2] ** 2
    q = np.trace(a, axis1=1, axis2=2) / 3.0
    d = np.stack([a[:, i, i] - q for i in range(3)], axis=1)
    p2 = np.sum(d**2, axis=1) + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    out = np.repeat(q[:, None], 3, axis=1)
    nz = p > 1e-14 * np.maximum(1.0, np.abs(q))
    if np.any(nz):
        b = (a[nz] - q[nz, None, None] * np.eye(3)) / p[nz, None, None]
        r = np.clip(np.linalg.det(b) / 2.0, -1.0, 1.0)
        phi = np.arccos(r) / 3.0
        big = q[nz] + 2 * p[nz] * np.cos(phi)
        small = q[nz] + 2 * p[nz] * np.cos(phi + 2 * math.pi / 3)
        mid = 3 * q[nz] - big - small
        out[nz] = np.column_stack([small, mid, big])
    return out


def eigvals(a):
    """Ascending eigenvalues; closed form for 3x3 with ``eigvalsh`` as fallback."""
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 3:
        lam = sym3_eigvals(a)
        # Cheap residual test on the characteristic polynomial; refine when poor.
        scale = np.maximum(1.0, np.max(np.abs(lam), axis=1))
        tr = np.trace(a, axis1=1, axis2=2)
        bad = np.abs(lam.sum(axis=1) - tr) > EIG_TOL * scale
        bad |= np.abs(np.prod(lam, axis=1) - np.linalg.det(a)) > EIG_TOL * scale**3
        # Near a repeated root the closed form keeps only ~sqrt(eps) digits.
        bad |= np.min(np.diff(lam, axis=1), axis=1) < 1e-4 * scale
        if np.any(bad):
            lam[bad] = np.linalg.eigvalsh(a[bad])
        return lam
    return np.linalg.eigvalsh(a)


def lambda_min(field, x):
    return eigvals(field(x))[:, 0]


# ---------------------------------------------------------------------------
# Ellipticity


def ellipticity(field, x, xi):
    """``e(x, xi) = tr a(x) / (xi^T a(x) xi)`` for unit ``xi``.

    ``x`` may be one point or many; ``xi`` one vector or one per point.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if np.any(np.abs(np.linalg.norm(xi, axis=1) - 1.0) > 1e-12):
        raise EllipticityError("xi must be a unit vector (within 1e-12)")
    a = field(x)
    form = np.einsum("mi,mij,mj->m", np.broadcast_to(xi, (len(a), field.n)), a,
                     np.broadcast_to(xi, (len(a), field.n)))
    if np.any(form <= 0):
        raise EllipticityError("quadratic form is not positive")
    vals = np.trace(a, axis1=1, axis2=2) / form
    return float(vals[0]) if vals.size == 1 else vals


def e1(field, sample_points):
    """``max tr a(x) / lambda_min(a(x))`` over the samples.

    Raises
    ------
    EllipticityError
        If the sample list is empty or ``a`` is not positive definite at a sample.
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.size == 0:
        raise EllipticityError("e1 needs at least one sample point")
    a = field(pts)
    lam = eigvals(a)[:, 0]
    if np.any(lam <= 0):
        k = int(np.argmin(lam))
        raise EllipticityError(f"matrix not positive definite at {pts[k]} (lambda_min={lam[k]:.3g})")
    return float(np.max(np.trace(a, axis1=1, axis2=2) / lam))


def default_s(field, sample_points):
    """Smallest admissible exponent ``e1 - 2``."""
    return e1(field, sample_points) - 2.0


def diagonal_dominance_margin(a):
    """``min_i (a_ii - sum_{j != i} |a_ij|)`` per matrix."""
    a = np.asarray(a, dtype=float)
    d = np.diagonal(a, axis1=1, axis2=2)
    off = np.sum(np.abs(a), axis=2) - np.abs(d)
    return np.min(d - off, axis=1)
