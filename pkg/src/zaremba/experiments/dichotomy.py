"""Layer suprema on a dyadic ladder of grids and their growth/decay alternative."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import linregress

from ..capacity import CapacityProblem, capacity_estimate
from ..chains import LayerSpec, build_chain, gamma1_in, verify_chain
from ..errors import ChainError, HypothesisError
from ..fdsolver import GAMMA1, GAMMA2, BoundaryData, assemble, build_grid, solve
from ..geometry import Ball, sphere_points

MIXED_TOL = 1e-8


@dataclass(frozen=True)
class DichotomyConfig:
    """Dyadic layers ``R_m = Q^-m`` for ``m = N0 .. N0 + M_layers - 1``.

    ``q`` holds ``(q1, q2, q*, q3, q4)``. ``points_per_R`` sets the ladder
    spacing ``h_m = R_m / points_per_R``; ``half_width`` is the box
    half-width of each level in units of ``h_m``.
    """

    Q: float = 2.0
    N0: int = 0
    M_layers: int = 5
    q: tuple = (0.5, 0.7, 0.9, 1.1, 1.3)
    theta: float = 0.15
    delta: float = 0.05
    kappa: float = 0.05
    s: float = 1.0
    a: float = 1.08
    points_per_R: int = 32
    half_width: int = 47
    root_h: float = 1.0 / 16
    sphere_samples: int = 4000
    solver_tol: float = 1e-10
    check_chains: bool = True
    candidate_density: int = 2

    def __post_init__(self):
        if not self.Q > 1:
            raise HypothesisError("Q must exceed 1")
        q1, q2, qs, q3, q4 = self.q
        if not qs < q1 * self.Q:
            raise HypothesisError("need q* < q1 Q so consecutive layers overlap")
        if self.points_per_R < 32:
            raise HypothesisError("ladder spacing must satisfy h_m <= R_m / 32")

    def R(self, m):
        return self.Q ** (-m)

    def layer(self, m):
        q1, q2, qs, q3, q4 = self.q
        return LayerSpec(q1, q2, qs, q3, q4, self.R(m), self.theta, self.delta, self.kappa, self.a)

    @property
    def indices(self):
        return list(range(self.N0, self.N0 + self.M_layers))


@dataclass
class DichotomySeries:
    """Layer maxima, capacities and the classification of their pattern."""

    m: list
    M: np.ndarray
    capacities: np.ndarray
    partial_sums: np.ndarray
    classification: str
    N1: Optional[int]
    eta_fit: float
    r_squared: float
    eta_stderr: float
    recursion_eta: np.ndarray
    grid_sizes: list = field(default_factory=list)
    chains: list = field(default_factory=list)

    def rows(self):
        out = []
        for i, m in enumerate(self.m):
            out.append((m, float(self.M[i]), float(self.capacities[i]), float(self.partial_sums[i]),
                        float(self.recursion_eta[i]) if i < len(self.recursion_eta) else float("nan")))
        return out


def classify_series(M, tol=MIXED_TOL):
    """``("decay", None)``, ``("growth", N1)``, ``("mixed", None)`` or ``("degenerate", None)``.

    ``N1`` is the position of the first nondecrease; growth requires every
    later step to be a nondecrease as well.
    """
    M = np.asarray(M, dtype=float)
    if np.all(np.abs(M) <= tol):
        return "degenerate", None
    d = np.diff(M)
    if np.all(d < -tol):
        return "decay", None
    first = int(np.flatnonzero(d >= -tol)[0])
    if np.all(d[first:] >= -tol):
        return "growth", first
    return "mixed", None


def capacity_sum(config: DichotomyConfig, clouds):
    """Partial sums of ``C_s(H_m) Q^{s m}``; ``clouds[i]`` is ``H_m`` for ``m = N0 + i``.

    Entries may also be precomputed capacities (floats).
    """
    caps = []
    for c in clouds:
        if np.isscalar(c):
            caps.append(float(c))
        elif np.size(c) == 0:
            caps.append(0.0)
        else:
            caps.append(capacity_estimate(CapacityProblem(np.asarray(c, dtype=float), config.s))[0])
    terms = np.array([cap * config.Q ** (config.s * m) for cap, m in zip(caps, config.indices)])
    return np.cumsum(terms) if len(terms) else np.zeros(0)


def layer_clouds(domain, config):
    out = []
    for m in config.indices:
        layer = config.layer(m)
        spacing = layer.theta * layer.R / 8.0
        out.append(gamma1_in(domain, Ball(np.zeros(domain.n), layer.q3 * layer.R), spacing, layer.inner))
    return out


def _level_box(domain, h, half):
    n = domain.n
    lo = np.full(n, -half * h)
    hi = np.full(n, half * h)
    hi[-1] = 0.0
    if domain.extent is not None:
        lo[:-1] = np.maximum(lo[:-1], -domain.extent)
        hi[:-1] = np.minimum(hi[:-1], domain.extent)
    if domain.depth is not None:
        lo[-1] = max(lo[-1], -domain.depth)
    return lo, hi


def _check_homogeneous(sol, system, radius, exempt, tol=1e-8):
    """``u <= 0`` on Gamma1 and ``du/dl <= 0`` on Gamma2 inside ``B(0, radius)``."""
    grid = sol.grid
    pts = system.coords()
    near = np.linalg.norm(pts, axis=1) < radius
    g1 = near & (system.row_kind == GAMMA1)
    if exempt is not None and np.any(g1):
        g1[g1] &= ~np.asarray(exempt(pts[g1]), dtype=bool)
    vals = sol.flat[system.nodes]
    if np.any(vals[g1] > tol):
        k = np.flatnonzero(g1 & (vals > tol))[0]
        raise HypothesisError(f"u > 0 on Gamma1 at {pts[k]} inside the first layer ball")
    g2 = near & (system.row_kind == GAMMA2)
    if np.any(system.rhs[g2] > tol):
        k = np.flatnonzero(g2 & (system.rhs > tol))[0]
        raise HypothesisError(f"oblique data positive at {pts[k]} inside the first layer ball")


def dichotomy_run(config: DichotomyConfig, domain, field_, ell, data: BoundaryData,
                  junction_exempt=None, progress=None):
    """Solve on a ladder of nested grids and classify ``M_m = max_{S_m} u``.

    The root level covers the whole truncation box at ``root_h``. Level
    ``m`` uses ``h_m = R_m / points_per_R`` on a box of half-width
    ``half_width * h_m`` whose faces take values interpolated from the
    previous level.

    Raises
    ------
    ChainError
        If a layer is not admissible (with ``check_chains``).
    HypothesisError
        If a level grid does not contain ``S_m`` or the ladder is too coarse.
    """
    n = domain.n
    chains = []
    if config.check_chains:
        for m in config.indices:
            layer = config.layer(m)
            try:
                ch = build_chain(domain, layer, config.s, candidate_density=config.candidate_density)
            except ChainError as exc:
                raise ChainError(f"layer m={m} is not admissible: {exc}") from exc
            rep = verify_chain(domain, ch, layer, config.s)
            if not rep.passed:
                raise ChainError(f"layer m={m} fails verification: {'; '.join(rep.messages)}")
            chains.append((m, ch.N, rep.capacity_ratio))

    lo, hi = _level_box(domain, config.root_h, 10**9)
    grid = build_grid(domain, lo, hi, config.root_h)
    system = assemble(domain, field_, grid, ell, data)
    coarse = solve(system, tol=config.solver_tol)
    sizes = [grid.shape]
    M = []
    for m in config.indices:
        R = config.R(m)
        h = R / config.points_per_R
        lo, hi = _level_box(domain, h, config.half_width)
        if np.any(hi[:-1] < config.q[4] * R) or -lo[-1] < config.q[4] * R * 0.999:
            raise HypothesisError(f"level {m} box does not contain the layer")
        grid = build_grid(domain, lo, hi, h)
        prev = coarse
        level_data = BoundaryData(data.phi, data.psi, data.g, artificial=lambda p, prev=prev: prev.interpolate(p))
        system = assemble(domain, field_, grid, ell, level_data)
        sol = solve(system, tol=config.solver_tol)
        sizes.append(grid.shape)
        _check_homogeneous(sol, system, config.q[4] * config.R(config.N0), junction_exempt)
        samples = sphere_points(config.sphere_samples, config.q[2] * R, None, n)
        samples = samples[domain.inside(samples)]
        vals = sol.interpolate(samples)
        if not np.any(np.isfinite(vals)):
            raise HypothesisError(f"S_{m} misses the level grid")
        M.append(float(np.nanmax(vals)))
        coarse = sol
        if progress is not None:
            progress(m, M[-1], grid.shape)

    M = np.asarray(M)
    clouds = layer_clouds(domain, config)
    caps = np.array([capacity_estimate(CapacityProblem(c, config.s))[0] if len(c) else 0.0 for c in clouds])
    sums = capacity_sum(config, caps)
    kind, N1 = classify_series(M)
    eta_fit = r2 = se = float("nan")
    if kind in ("decay", "growth") and np.all(M > 0) and len(M) >= 3 and np.ptp(sums) > 0:
        fit = linregress(sums, np.log(M))
        sign = -1.0 if kind == "decay" else 1.0
        eta_fit, r2, se = sign * fit.slope, fit.rvalue**2, fit.stderr
    terms = caps * config.Q ** (config.s * np.asarray(config.indices, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "growth":
            rec = (1.0 - M[:-1] / M[1:]) / terms[:-1]
        else:
            rec = (1.0 - M[1:] / M[:-1]) / terms[:-1]
    return DichotomySeries(config.indices, M, caps, sums, kind, N1, float(eta_fit), float(r2),
                           float(se), rec, sizes, chains)
