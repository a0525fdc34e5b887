"""Library-level walk through one growth measurement.

Builds a half-space with a small ball on the Dirichlet side, certifies the
barrier for that ball, solves the mixed problem with the walls held at 1
and compares the measured sup ratio with the barrier floor.
"""

import math

import numpy as np

from zaremba import barrier, coeffs, fdsolver, geometry
from zaremba.experiments import growth_via_barrier

h = 1.0 / 32
center = np.array([0.0, 0.0, -0.5])
R, alpha = 0.4, 0.2

dom = geometry.halfspace(3, [geometry.BallObstacle(center, 0.1)], 0.75, 1.0)
field = coeffs.rot2d(0.2, [1.0, 1.3, 1.1])
ell = geometry.VectorField.constant([0.0, 0.0, 1.0], math.pi / 4)

s = max(1.0, coeffs.e1(field, np.zeros((1, 3))) - 2)
a, eps_tilde = barrier.compute_a(0.0, math.pi / 4)
spec = barrier.BarrierSpec(s, alpha, a, R, center)
cert = barrier.verify_barrier(spec, dom, field, ell)
print(f"s = {s:.4f}  a = {a:.6f}  eta0 = {cert.eta0:.6f}  barrier certified: {cert.passed}")

data = fdsolver.BoundaryData(phi=fdsolver.BoundaryData.piecewise(dom, {"walls": 1.0}))
u = fdsolver.solve_problem(dom, field, ell, data, *fdsolver.domain_box(dom), h)
res = growth_via_barrier(dom, field, ell, spec, u)
print(f"sup B(R) = {res.sup_small:.5f}  sup B(aR) = {res.sup_big:.5f}")
print(f"ratio = {res.ratio:.5f}  floor 1/(1-eta0) = {res.predicted_lower:.5f}  passed: {res.passed}")
