"""Exception catalog for the workbench.

Every failure mode that callers are expected to handle gets its own class so
that tests and the CLI can match on type rather than message text.
"""


class FibervacError(Exception):
    """Base class for all workbench errors."""


class UnknownAlgebra(FibervacError):
    """Requested Lie algebra name is not in the supported table."""


class NotSemisimple(FibervacError):
    """Operation requires a semisimple algebra (nondegenerate Killing form)."""


class EmbeddingFailure(FibervacError):
    """Subalgebra embedding could not be constructed or failed validation."""


class NotSubalgebra(FibervacError):
    """Candidate eigenspace is not closed under the Lie bracket."""


class NotAlmostComplex(FibervacError):
    """Endomorphism does not square to minus the identity."""


class UnsupportedLabel(FibervacError):
    """Irreducible representation label outside the implemented range."""


class QuadratureUnderresolved(FibervacError):
    """Doubling the quadrature rule moved the result more than the tolerance."""


class GridTooCoarse(FibervacError):
    """Finite-difference grid too coarse for the requested accuracy."""


class SingularMetric(FibervacError):
    """Metric determinant vanishes (or is numerically singular) on the grid."""


class NotUnitImaginary(FibervacError):
    """Octonion argument is not a unit imaginary octonion."""


class DegenerateResult(FibervacError):
    """Computation produced a degenerate object (zero span, repeated roots...)."""


class DimensionMismatch(FibervacError):
    """Array shapes or manifold dimensions are incompatible."""


class SingularGauge(FibervacError):
    """Gauge transformation field is singular (non-invertible) somewhere."""


class ZeroCoupling(FibervacError):
    """Coupling constant e must be nonzero."""


class NonDecreasingStep(FibervacError):
    """Line search failed to decrease the energy for too many iterations."""


class NotBlockDiagonal(FibervacError):
    """Operator has off-diagonal blocks across a direct-sum decomposition."""


class ConfigError(FibervacError):
    """Experiment configuration file or CLI arguments are invalid."""


class SectionUnbounded(FibervacError):
    """Local section has unbounded derivative outside its singular set."""
