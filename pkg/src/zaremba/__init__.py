"""Numerical laboratory for mixed Dirichlet/oblique-derivative problems near a junction point.

Modules
-------
geometry    domains below a Lipschitz graph, balls, layers, predicates
coeffs      coefficient fields and the ellipticity function
capacity    Riesz s-capacity through admissible discrete measures
barrier     radial barrier, dilation factor and certification
fdsolver    monotone finite differences and solver
chains      admissible ball chains in spherical layers
experiments growth measurements, chain certificate, dichotomy runs
cli         command-line front end
"""

__version__ = "0.1.0"
