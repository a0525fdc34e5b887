"""Step-by-step certificate along a ball chain.

Starting from the root ball the walk compares the sup of ``u`` on each ball
of the path to the ball containing the maximizer of ``u`` on ``S_R`` with a
geometrically shrinking threshold. The first ball that reaches its
threshold certifies a lower bound on the sup of ``u`` over the layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..capacity import CapacityProblem, capacity_estimate, sphere_cloud
from ..chains import BallChain, LayerSpec, chain_path, sphere_samples
from ..errors import ChainError, HypothesisError
from ..fdsolver import OMEGA_KINDS, GridSolution
from .growth import layer_sup


@dataclass(frozen=True)
class GrowthConstants:
    """``eta1`` (capacity lemma), ``eta1_tilde`` (delta-ball lemma), ``eta2`` (barrier)."""

    eta1: float
    eta1_tilde: float
    eta2: float

    def __post_init__(self):
        for name in ("eta1", "eta1_tilde", "eta2"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise HypothesisError(f"{name} must lie in (0, 1), got {v}")

    @property
    def tau(self):
        return 0.5 * min(self.eta1_tilde, self.eta2)

    @classmethod
    def from_measurements(cls, eta1, delta, s, eta2, n_atoms=800):
        """``eta1_tilde = eta1 C_s(B(0, delta))`` with the ball capacity estimated numerically."""
        cap = capacity_estimate(CapacityProblem(sphere_cloud(n_atoms, delta), s))[0]
        return cls(eta1, eta1 * cap, eta2)


@dataclass
class StepRecord:
    step: int
    ball: int
    level: float          # m (1 - delta0 tau^k)
    threshold: float      # required sup of u - previous level
    achieved: float       # sup of u over the ball
    case: str             # "a": dilate clear of Gamma2, "b": dilate meets Gamma2, "root"
    success: bool


@dataclass
class ChainIterationTrace:
    """Per-step records and the certified lower bound on the layer sup."""

    m: float
    delta0: float
    tau: float
    x: float
    steps: list = field(default_factory=list)
    certified: float = float("nan")
    terminated_at: int = -1
    measured_sup: float = float("nan")
    path: list = field(default_factory=list)

    @property
    def sound(self):
        return bool(self.certified <= self.measured_sup + 1e-8)

    def rows(self):
        return [(r.step, r.ball, r.level, r.threshold, r.achieved, r.case, r.success)
                for r in self.steps]


def _ball_sup(u, center, radius, extra_pts=None, extra_vals=None):
    grid = u.grid
    idx = np.flatnonzero(np.isin(grid.kinds, OMEGA_KINDS))
    pts = grid.coords(idx)
    mask = np.linalg.norm(pts - center, axis=1) <= radius * (1 + 1e-12)
    best = float(np.max(u.flat[idx[mask]])) if np.any(mask) else -np.inf
    if extra_pts is not None and len(extra_pts):
        inside = np.linalg.norm(extra_pts - center, axis=1) <= radius * (1 + 1e-12)
        if np.any(inside):
            best = max(best, float(np.nanmax(extra_vals[inside])))
    return best


def chain_iteration(domain, chain: BallChain, layer: LayerSpec, u: GridSolution,
                    constants: GrowthConstants, s, capacity=None, samples=None):
    """Run the threshold walk from the root to the ball holding ``max_{S_R} u``.

    Step 0 tests ``sup_{B^0} u >= m (1 - delta0)`` and certifies
    ``M >= m (1 - delta0) / (1 - x)`` with ``x = kappa eta1 C_s(H) R^-s``.
    Step ``k >= 1`` tests ``sup_{B^k} u >= m (1 - delta0 tau^k)`` and
    certifies ``M >= m (1 + delta0 tau^k / (1 - 2 tau))``. The last ball
    contains the maximizer, so the walk ends within ``N`` steps. ``S_R`` is
    sampled as in the chain cover, without the thin band next to Gamma2.

    Raises
    ------
    ChainError
        If the walk does not terminate within ``N`` steps (inconsistent inputs).
    """
    cap = chain.layer_capacity if capacity is None else capacity
    x = layer.kappa * constants.eta1 * cap * layer.R ** (-s)
    if not 0 < x < 0.5:
        raise HypothesisError(f"kappa eta1 C_s(H) R^-s = {x:.4g} must lie in (0, 1/2)")
    delta0 = x / (2.0 * (1.0 - x))
    tau = constants.tau
    if samples is None:
        # Same sampling as the chain cover, so the maximizer has a holder.
        samples = sphere_samples(domain, layer, chain.info.get("n_samples_request"),
                                 chain.info.get("cover_band", 0.02))
    vals = u.interpolate(samples)
    ok = np.isfinite(vals)
    samples, vals = samples[ok], vals[ok]
    if len(vals) == 0:
        raise HypothesisError("no S_R samples inside the solved grid")
    j = int(np.argmax(vals))
    m, y = float(vals[j]), samples[j]
    if m <= 0:
        raise HypothesisError("sup of u over S_R is not positive")
    d = np.linalg.norm(chain.centers - y, axis=1)
    holders = np.flatnonzero(d <= chain.radius * (1 + 1e-12))
    if len(holders) == 0:
        raise ChainError("the maximizer on S_R is not covered by the chain")
    # Nearest-to-root holder keeps the walk short.
    k_end = min(holders, key=lambda k: (len(chain_path(chain, int(k))), int(k)))
    path = list(reversed(chain_path(chain, int(k_end))))
    trace = ChainIterationTrace(m, delta0, tau, x, path=path, measured_sup=layer_sup(u, layer))
    dil = layer.a * chain.radius
    for step, ball in enumerate(path):
        sup_b = _ball_sup(u, chain.centers[ball], chain.radius, samples, vals)
        if step == 0:
            level_prev, target = m, m * (1.0 - delta0)
            case = "root"
        else:
            level_prev = m * (1.0 - delta0 * tau ** (step - 1))
            target = m * (1.0 - delta0 * tau**step)
            clear = domain.graph_gap(chain.centers[ball])[0] > 0 and \
                domain.graph_distance(chain.centers[ball], dil * 1.001)[0] >= dil
            case = "a" if clear else "b"
        success = sup_b >= target - 1e-14 * abs(m)
        trace.steps.append(StepRecord(step, int(ball), target, target - (level_prev if step else 0.0),
                                      sup_b, case, bool(success)))
        if success:
            trace.terminated_at = step
            if step == 0:
                trace.certified = m * (1.0 - delta0) / (1.0 - x)
            else:
                trace.certified = m * (1.0 + delta0 * tau**step / (1.0 - 2.0 * tau))
            return trace
    raise ChainError(f"threshold walk did not terminate within {len(path)} steps")
