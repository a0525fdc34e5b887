"""Radial barrier near the oblique boundary and its certification.

The barrier is ``w(x) = (alpha R)^s / |x - c|^s - (alpha / a)^s``. It is a
subsolution whenever ``s >= e1 - 2``, vanishes on the outer sphere
``|x - c| = aR`` and stays above ``eta0 = alpha^s (1 - a^-s)`` on the inner
ball. All derivatives used here are analytic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .coeffs import CoefficientField, e1
from .errors import BarrierError
from .geometry import Ball, Domain, VectorField, as_points, disk_lattice, sphere_points

DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    """Parameters ``(s, alpha, a, R, center)`` of the radial barrier."""

    s: float
    alpha: float
    a: float
    R: float = 1.0
    center: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.s > 0:
            raise BarrierError(f"s must be positive, got {self.s}")
        if not 0 < self.alpha < 0.5:
            raise BarrierError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not self.a > 1:
            raise BarrierError(f"a must exceed 1, got {self.a}")
        if not self.R > 0:
            raise BarrierError(f"R must be positive, got {self.R}")
        c = np.zeros(3) if self.center is None else np.asarray(self.center, dtype=float).ravel()
        object.__setattr__(self, "center", c)

    @property
    def eta0(self):
        return self.alpha**self.s * (1.0 - self.a ** (-self.s))

    def check_exponent(self, field: CoefficientField, sample_points) -> float:
        """Return ``e1`` on the samples and raise if ``s < e1 - 2``."""
        e = e1(field, sample_points)
        if self.s < e - 2 - 1e-12:
            raise BarrierError(f"s = {self.s} is below e1 - 2 = {e - 2}")
        return e


@dataclass
class BarrierReport:
    """Outcome of :func:`verify_barrier`; failures are flags, never exceptions."""

    sub_elliptic_ok: bool
    dirichlet_bound_ok: bool
    oblique_sign_ok: bool
    outer_zero_ok: bool
    lower_bound_ok: bool
    eta0: float
    worst_violation: float
    n_samples: int = 0

    @property
    def passed(self):
        return (self.sub_elliptic_ok and self.dirichlet_bound_ok and self.oblique_sign_ok
                and self.outer_zero_ok and self.lower_bound_ok)

    def as_dict(self):
        return asdict(self)


def _offsets(spec, x):
    pts = as_points(x)
    d = pts - spec.center[: pts.shape[1]]
    r = np.linalg.norm(d, axis=1)
    if np.any(r == 0):
        raise BarrierError("barrier is singular at its center")
    return d, r


def barrier_eval(spec, x):
    """``w`` at one point (float) or many (array)."""
    _, r = _offsets(spec, x)
    s, ar = spec.s, spec.alpha * spec.R
    vals = (ar / r) ** s - (spec.alpha / spec.a) ** s
    return float(vals[0]) if np.ndim(x) == 1 else vals


def barrier_derivative(spec, x, ell):
    """Analytic derivative ``grad w . ell`` at points ``x`` for directions ``ell``."""
    d, r = _offsets(spec, x)
    ell = np.broadcast_to(np.atleast_2d(np.asarray(ell, dtype=float)), d.shape)
    s = spec.s
    return -s * (spec.alpha * spec.R) ** s * r ** (-s - 2) * np.sum(d * ell, axis=1)


def radial_L_apply(field, s, x, center=None):
    """Exact ``L |x - c|^-s = s |x|^(-s-2) (tr a - (s+2) xhat^T a xhat)``.

    Returns a float for one point and an array for many.
    """
    pts = as_points(x, field.n)
    d = pts if center is None else pts - np.asarray(center, dtype=float)
    r = np.linalg.norm(d, axis=1)
    if np.any(r == 0):
        raise BarrierError("radial power is singular at the origin")
    xhat = d / r[:, None]
    a = field(pts)
    tr = np.trace(a, axis1=1, axis2=2)
    form = np.einsum("mi,mij,mj->m", xhat, a, xhat)
    vals = s * r ** (-s - 2) * (tr - (s + 2) * form)
    return float(vals[0]) if np.ndim(x) == 1 else vals


def eps_tilde(L, eps):
    """Common slack in the bounds on ``|l'|`` and ``l_n`` for margin ``eps``."""
    phi = math.atan2(1.0, L)
    root = math.sqrt(1.0 + L * L)
    return min(1.0 / root - math.sin(phi - eps), math.cos(phi - eps) - L / root)


def dilation_residual(a, L, et):
    """Left side of the oblique-sign condition, ``sqrt(a^2-1)(sqrt(1+L^2) + et(L-1)) - et(L+1)``."""
    return math.sqrt(max(a * a - 1.0, 0.0)) * (math.sqrt(1 + L * L) + et * (L - 1)) - et * (L + 1)


def compute_a(L, eps):
    """Largest dilation ``a`` keeping the barrier's oblique derivative nonpositive.

    Returns
    -------
    (a, eps_tilde) : tuple of float

    Raises
    ------
    BarrierError
        If ``L < 0``, ``eps`` is outside ``(0, arccot L)``, or the margin is
        too small for a positive slack.
    """
    if L < 0:
        raise BarrierError("Lipschitz constant must be nonnegative")
    phi = math.atan2(1.0, L)
    if not 0 < eps < phi:
        raise BarrierError(f"eps must lie in (0, arccot L) = (0, {phi:.6g})")
    et = eps_tilde(L, eps)
    denom = math.sqrt(1 + L * L) + et * (L - 1)
    if et <= 0 or denom <= 0:
        raise BarrierError("vector field margin too small: no dilation a > 1 exists")
    a = math.sqrt(1.0 + (et * (L + 1) / denom) ** 2)
    return a, et


# ---------------------------------------------------------------------------
# Certification


def _ball_samples(center, radius, budget, n):
    """Deterministic samples of a closed ball: shells at graded radii plus the center."""
    n_shells = max(4, int(round(budget ** (1 / 3))))
    per_shell = max(16, budget // n_shells)
    radii = radius * (np.arange(1, n_shells + 1) / n_shells)
    pts = [center[None, :]]
    for r in radii:
        pts.append(sphere_points(per_shell, r, center, n))
    return np.vstack(pts)


def _graph_samples(domain, center, radius, budget):
    """Points of Gamma2 (within its patch) at distance at most ``radius`` from ``center``."""
    n = domain.n
    spacing = 2 * radius / max(8, int(round(budget ** (1 / (n - 1)))))
    xp = disk_lattice(radius, spacing, n - 1) + center[:-1]
    xp = xp[np.linalg.norm(xp, axis=1) <= domain.gamma2_patch_radius]
    if len(xp) == 0:
        return np.zeros((0, n))
    pts = np.column_stack([xp, domain.gamma2_graph(xp)])
    keep = np.linalg.norm(pts - center, axis=1) <= radius
    if domain.extent is not None:
        keep &= np.all(np.abs(pts[:, :-1]) <= domain.extent, axis=1)
    return pts[keep]


def verify_barrier(spec, domain: Domain, field: CoefficientField, ell: VectorField,
                   sample_budget=4000, tol=DEFAULT_TOL):
    """Check the five barrier conditions on deterministic samples.

    The conditions are tested with analytic formulas: ``Lw <= tol`` in the
    domain part of ``B(c, aR)``, ``w <= 1 + tol`` on Gamma1 there,
    ``dw/dl <= tol`` on Gamma2 there, ``w <= tol`` on the outer sphere
    inside the domain, and ``w >= eta0 - tol`` on the domain part of
    ``B(c, R)``.
    """
    n = domain.n
    c = spec.center
    if c.size != n:
        c = np.zeros(n)
        spec = BarrierSpec(spec.s, spec.alpha, spec.a, spec.R, c)
    big = spec.a * spec.R
    s = spec.s
    violations = {}

    # (i) subsolution; L w = (alpha R)^s L |x - c|^-s, the constant drops out.
    cloud = _ball_samples(c, big, sample_budget, n)
    cloud = cloud[np.linalg.norm(cloud - c, axis=1) > 0]
    inside = cloud[domain.inside(cloud)]
    lw = (spec.alpha * spec.R) ** s * radial_L_apply(field, s, inside, c) if len(inside) else np.zeros(0)
    violations["sub_elliptic"] = float(np.max(lw, initial=-np.inf))

    # (ii) bound on the Dirichlet part.
    spacing = big / max(8.0, math.sqrt(sample_budget / 4.0))
    g1 = domain.gamma1_cloud(Ball(c, big), spacing)
    at_center = bool(len(g1)) and bool(np.any(np.linalg.norm(g1 - c, axis=1) == 0))
    g1 = g1[np.linalg.norm(g1 - c, axis=1) > 0] if len(g1) else g1
    w1 = barrier_eval(spec, g1) - 1.0 if len(g1) else np.zeros(0)
    violations["dirichlet_bound"] = np.inf if at_center else float(np.max(w1, initial=-np.inf))

    # (iii) sign of the oblique derivative on Gamma2.
    g2 = _graph_samples(domain, c, big, sample_budget)
    g2_center = bool(len(g2)) and bool(np.any(np.linalg.norm(g2 - c, axis=1) == 0))
    g2 = g2[np.linalg.norm(g2 - c, axis=1) > 0] if len(g2) else g2
    dl = barrier_derivative(spec, g2, ell(g2)) if len(g2) else np.zeros(0)
    violations["oblique_sign"] = np.inf if g2_center else float(np.max(dl, initial=-np.inf))

    # (iv) outer sphere inside the closed domain.
    outer = sphere_points(max(64, sample_budget // 4), big, c, n)
    outer = outer[domain.inside(outer) | _near_graph(domain, outer, spacing)]
    wo = barrier_eval(spec, outer) if len(outer) else np.zeros(0)
    violations["outer_zero"] = float(np.max(wo, initial=-np.inf))

    # (v) lower bound on the inner ball.
    inner = _ball_samples(c, spec.R, sample_budget, n)
    inner = inner[(np.linalg.norm(inner - c, axis=1) > 0) & domain.inside(inner)]
    eta0 = spec.eta0
    wi = barrier_eval(spec, inner) if len(inner) else np.zeros(0)
    violations["lower_bound"] = float(np.max(eta0 - wi, initial=-np.inf))

    flags = {k: v <= tol for k, v in violations.items()}
    worst = max(0.0, max(violations.values()))
    reported_eta0 = eta0 if flags["lower_bound"] else float(np.min(wi, initial=np.nan))
    total = len(inside) + len(g1) + len(g2) + len(outer) + len(inner)
    return BarrierReport(flags["sub_elliptic"], flags["dirichlet_bound"], flags["oblique_sign"],
                         flags["outer_zero"], flags["lower_bound"], reported_eta0, worst, total)


def _near_graph(domain, pts, tol):
    """Points on the closure of the domain along Gamma2 (closure of Omega)."""
    return domain.in_patch(pts) & (np.abs(domain.graph_gap(pts)) <= 1e-12) & domain.in_box(pts)


def barrier_for_layer(L, eps, alpha, s, R=1.0, center=None):
    """Spec with ``a`` from :func:`compute_a`."""
    a, _ = compute_a(L, eps)
    return BarrierSpec(s, alpha, a, R, center)
