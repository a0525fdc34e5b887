"""Dense primal-dual interior point method for packing LPs.

Solves ``max 1^T x  s.t.  A x <= b, x >= 0`` with ``A, b > 0`` entrywise,
the shape of every capacity problem. Mehrotra predictor-corrector on the
normal equations ``(A^T diag(y/w) A + diag(z/x)) dx = r``, which stay
``n_atoms x n_atoms`` regardless of the number of constraints.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import ConvergenceError


def _step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def packing_lp(A, b, tol=1e-11, max_iter=200):
    """Return ``(x, y, info)``: primal optimum, duals of ``A x <= b`` and diagnostics."""
    A = np.ascontiguousarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    c = np.ones(n)
    # Strictly interior start: a uniform feasible x, slack, and a dual with z > 0.
    x = np.full(n, 0.5 / max(np.max(A.sum(axis=1) / b), 1e-300))
    w = b - A @ x
    y = np.full(m, 2.0 / np.min(A.sum(axis=0)))
    z = A.T @ y - c
    scale_b = 1.0 + np.linalg.norm(b, np.inf)
    for it in range(1, max_iter + 1):
        rp = b - A @ x - w
        rd = c - A.T @ y + z
        gap = x @ z + w @ y
        mu = gap / (n + m)
        pobj, dobj = c @ x, b @ y
        if (abs(dobj - pobj) <= tol * (1.0 + abs(pobj))
                and np.linalg.norm(rp, np.inf) <= tol * scale_b
                and np.linalg.norm(rd, np.inf) <= tol * (1.0 + np.linalg.norm(c, np.inf))):
            return x, y, {"iterations": it, "gap": dobj - pobj, "status": "optimal"}
        d = y / w
        N = (A.T * d) @ A
        N[np.diag_indices(n)] += z / x
        try:
            fac = cho_factor(N, lower=False, check_finite=False)
        except LinAlgError:
            N[np.diag_indices(n)] += 1e-14 * np.max(np.diag(N))
            fac = cho_factor(N, lower=False, check_finite=False)

        def solve(rxz, rwy):
            rhs = rd + rxz / x + A.T @ (d * (rp - rwy / y))
            dx = cho_solve(fac, rhs, check_finite=False)
            dy = d * (A @ dx - rp + rwy / y)
            dz = (rxz - z * dx) / x
            dw = (rwy - w * dy) / y
            return dx, dy, dz, dw

        # Predictor.
        dx, dy, dz, dw = solve(-x * z, -w * y)
        ap = min(_step(x, dx), _step(w, dw))
        ad = min(_step(z, dz), _step(y, dy))
        mu_aff = ((x + ap * dx) @ (z + ad * dz) + (w + ap * dw) @ (y + ad * dy)) / (n + m)
        sigma = (mu_aff / mu) ** 3
        # Corrector.
        dx, dy, dz, dw = solve(sigma * mu - x * z - dx * dz, sigma * mu - w * y - dw * dy)
        ap = 0.995 * min(_step(x, dx), _step(w, dw))
        ad = 0.995 * min(_step(z, dz), _step(y, dy))
        x = x + ap * dx
        w = w + ap * dw
        y = y + ad * dy
        z = z + ad * dz
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            break
    raise ConvergenceError("interior point method did not converge",
                           residual=float(abs(b @ y - c @ x)), iterations=max_iter)
