"""Measured growth of grid subsolutions between concentric balls and layers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..capacity import CapacityProblem, capacity_estimate
from ..chains import BallChain, LayerSpec, sphere_samples, verify_chain
from ..errors import ChainError, HypothesisError
from ..fdsolver import (ARTIFICIAL, GAMMA1, GAMMA2, INTERIOR, OMEGA_KINDS, GridSolution)
from ..geometry import Ball, as_points


@dataclass
class GrowthResult:
    """Sup over a small set, sup over a big set, and the predicted ratio floor.

    ``ratio = sup_big / sup_small``; ``passed`` iff ``ratio >= predicted_lower - tol``.
    """

    sup_small: float
    sup_big: float
    ratio: float
    predicted_lower: float
    passed: bool
    implied_eta: float = float("nan")
    tol: float = 0.0
    note: str = ""
    extra: dict = field(default_factory=dict)


def _finish(small, big, predicted, tol, implied=float("nan"), note="", extra=None):
    if small <= 0 or big <= 0:
        return GrowthResult(small, big, float("nan"), predicted, True, implied, tol,
                            note or "vacuous: u vanishes on the small set", extra or {})
    ratio = big / small
    return GrowthResult(small, big, ratio, predicted, bool(ratio >= predicted - tol), implied, tol,
                        note, extra or {})


def _node_sets(u, ball):
    grid = u.grid
    idx = np.flatnonzero(grid.kinds != 0)
    pts = grid.coords(idx)
    inside = ball.contains(pts, tol=1e-12 * ball.radius)
    return idx[inside], grid.kinds[idx[inside]]


def check_hypotheses(u: GridSolution, ball: Ball, tol=1e-8, dirichlet="zero", oblique=True,
                     exclude=None):
    """Check the growth-lemma hypotheses on the nodes of ``ball``.

    ``u >= -tol`` on domain nodes; ``u = 0`` (``dirichlet="zero"``) or
    ``u <= tol`` (``"nonpositive"``) on Gamma1 nodes; interior rows of the
    system give ``L u <= tol``; oblique rows give ``du/dl <= tol``.
    ``exclude`` is a predicate marking Gamma1 nodes that stand in for the
    junction point and are exempt.

    Raises
    ------
    HypothesisError
        Naming the first failing node.
    """
    system = u.system
    idx, kinds = _node_sets(u, ball)
    vals = u.flat[idx]
    pts = u.grid.coords(idx)
    omega = np.isin(kinds, OMEGA_KINDS)
    bad = omega & (vals < -tol)
    if np.any(bad):
        raise HypothesisError(f"u < 0 at node {pts[np.argmax(bad)]} ({vals[np.argmax(bad)]:.3g})")
    g1 = kinds == GAMMA1
    if exclude is not None and np.any(g1):
        g1 &= ~np.asarray(exclude(pts), dtype=bool)
    bad = g1 & ((np.abs(vals) > tol) if dirichlet == "zero" else (vals > tol))
    if np.any(bad):
        raise HypothesisError(f"Dirichlet hypothesis fails at node {pts[np.argmax(bad)]} "
                              f"(u = {vals[np.argmax(bad)]:.3g})")
    if system is not None:
        rows = system.index_map[idx]
        applied = system.apply(u.flat)[rows]
        bad = (kinds == INTERIOR) & (applied > tol * np.abs(system.matrix.diagonal()[rows]))
        if np.any(bad):
            raise HypothesisError(f"u is not sub-elliptic at node {pts[np.argmax(bad)]}")
        if oblique:
            bad = (kinds == GAMMA2) & (applied > tol * np.abs(system.matrix.diagonal()[rows]))
            if np.any(bad):
                raise HypothesisError(f"oblique derivative is positive at node {pts[np.argmax(bad)]}")


def sup_ball(u, ball, kinds=OMEGA_KINDS):
    grid = u.grid
    idx = np.flatnonzero(np.isin(grid.kinds, kinds))
    pts = grid.coords(idx)
    mask = ball.contains(pts, tol=1e-12 * ball.radius)
    if not np.any(mask):
        raise HypothesisError("ball contains no domain nodes")
    return float(np.max(u.flat[idx[mask]]))


def growth_via_barrier(domain, field_, ell, spec, u: GridSolution, tol=None, hyp_tol=1e-8):
    """Compare sups over ``B(c, R)`` and ``B(c, aR)`` with the barrier floor ``1/(1 - eta0)``.

    ``tol`` defaults to ``5h`` (first-order boundary scheme).
    """
    n = domain.n
    c = spec.center if spec.center.size == n else np.zeros(n)
    if np.all(np.nan_to_num(u.flat) == 0):
        return GrowthResult(0.0, 0.0, float("nan"), 1.0 / (1.0 - spec.eta0), True,
                            note="vacuous: u vanishes identically")
    big_ball = Ball(c, spec.a * spec.R)
    check_hypotheses(u, big_ball, hyp_tol)
    small = sup_ball(u, Ball(c, spec.R))
    big = sup_ball(u, big_ball)
    tol = 5 * u.grid.h if tol is None else tol
    return _finish(small, big, 1.0 / (1.0 - spec.eta0), tol, extra={"eta0": spec.eta0})


def growth_via_capacity(domain, field_, u: GridSolution, H, s, R, a, center=None, capacity=None,
                        hyp_tol=1e-8):
    """Measured ratio across ``B(c, R) -> B(c, aR)`` and the implied ``eta1``.

    ``eta1 = (1 - sup_small / sup_big) R^s / C_s(H)``. The oblique boundary
    must stay out of ``B(c, aR)``.
    """
    n = domain.n
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    big_ball = Ball(c, a * R)
    if domain.graph_distance(c, a * R * 1.001)[0] < a * R or domain.graph_gap(c)[0] <= 0:
        raise HypothesisError("Gamma2 meets B(c, aR); use growth_via_barrier instead")
    H = as_points(H) if np.size(H) else np.zeros((0, n))
    if capacity is None:
        capacity = capacity_estimate(CapacityProblem(H, s))[0] if len(H) else 0.0
    check_hypotheses(u, big_ball, hyp_tol, oblique=False)
    small = sup_ball(u, Ball(c, R))
    big = sup_ball(u, big_ball)
    if capacity <= 0:
        return _finish(small, big, 1.0, 0.0, note="vacuous: zero capacity", extra={"capacity": 0.0})
    implied = (1.0 - small / big) * R**s / capacity if big > 0 else float("nan")
    res = _finish(small, big, 1.0, 0.0, implied, extra={"capacity": capacity})
    res.passed = bool(res.passed and implied > 0)
    return res


def layer_sup(u: GridSolution, layer: LayerSpec):
    """Sup over domain nodes of the open layer ``q1 R < |x| < q4 R``."""
    grid = u.grid
    idx = np.flatnonzero(np.isin(grid.kinds, OMEGA_KINDS))
    r = np.linalg.norm(grid.coords(idx), axis=1)
    mask = (r > layer.q1 * layer.R) & (r < layer.q4 * layer.R)
    if not np.any(mask):
        raise HypothesisError("layer contains no domain nodes")
    return float(np.max(u.flat[idx[mask]]))


def sphere_sup(domain, u: GridSolution, layer: LayerSpec, samples=None):
    """Sup of the interpolated solution over ``S_R``; returns ``(value, point)``."""
    if samples is None:
        samples = sphere_samples(domain, layer, cover_band=0.0)
    vals = u.interpolate(samples)
    if not np.any(np.isfinite(vals)):
        raise HypothesisError("S_R samples fall outside the solved grid")
    k = int(np.nanargmax(vals))
    return float(vals[k]), samples[k]


def layer_hypotheses(u, layer, tol=1e-8):
    """Hypotheses of the layer lemma on the nodes of ``q1 R < |x| < q4 R``."""
    grid = u.grid
    idx = np.flatnonzero(grid.kinds != 0)
    pts = grid.coords(idx)
    r = np.linalg.norm(pts, axis=1)
    sel = (r > layer.q1 * layer.R) & (r < layer.q4 * layer.R)
    kinds = grid.kinds[idx[sel]]
    vals = u.flat[idx[sel]]
    p = pts[sel]
    bad = np.isin(kinds, OMEGA_KINDS) & (vals < -tol)
    if np.any(bad):
        raise HypothesisError(f"u < 0 at node {p[np.argmax(bad)]}")
    bad = (kinds == GAMMA1) & (vals > tol)
    if np.any(bad):
        raise HypothesisError(f"u > 0 on Gamma1 at node {p[np.argmax(bad)]}")
    if u.system is not None:
        rows = u.system.index_map[idx[sel]]
        applied = u.system.apply(u.flat)[rows]
        diag = np.abs(u.system.matrix.diagonal()[rows])
        bad = np.isin(kinds, (INTERIOR, GAMMA2)) & (applied > tol * diag)
        if np.any(bad):
            raise HypothesisError(f"sub-elliptic or oblique sign hypothesis fails at {p[np.argmax(bad)]}")


def growth_in_layer(domain, field_, ell, chain: BallChain, layer: LayerSpec, u: GridSolution, s,
                    capacity=None, report=None):
    """Sup over ``S_R`` against sup over the layer, with the implied ``eta``.

    ``eta = (1 - sup_S / sup_layer) R^s / C_s(H)`` for ``H`` the Dirichlet part
    of the inner layer.
    """
    report = verify_chain(domain, chain, layer, s) if report is None else report
    if not report.passed:
        raise ChainError("chain is not admissible: " + "; ".join(report.messages))
    layer_hypotheses(u, layer)
    small, _ = sphere_sup(domain, u, layer)
    big = layer_sup(u, layer)
    cap = chain.layer_capacity if capacity is None else capacity
    if not cap > 0:
        return _finish(small, big, 1.0, 0.0, note="vacuous: zero capacity in the layer")
    implied = (1.0 - small / big) * layer.R**s / cap if big > 0 else float("nan")
    res = _finish(small, big, 1.0, 1e-12, implied, extra={"capacity": cap})
    return res
