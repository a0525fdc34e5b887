"""Exception hierarchy shared by all modules."""


class ZarembaError(Exception):
    """Base class for every error raised by the package."""


class GeometryError(ZarembaError, ValueError):
    """Invalid geometric input or an ambiguous boundary classification."""


class EllipticityError(ZarembaError, ValueError):
    """Coefficient matrix is not positive definite (or not admissible)."""


class CapacityError(ZarembaError, ValueError):
    """Capacity problem is ill-posed, e.g. the constraint set is empty."""


class BarrierError(ZarembaError, ValueError):
    """Barrier parameters violate their invariants."""


class AssemblyError(ZarembaError, ValueError):
    """The monotone discretization cannot be built on the given grid."""


class ConvergenceError(ZarembaError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Last residual norm reached.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ChainError(ZarembaError, RuntimeError):
    """Admissible ball chain could not be constructed."""


class HypothesisError(ZarembaError, ValueError):
    """A growth-lemma hypothesis fails on the supplied grid function."""
