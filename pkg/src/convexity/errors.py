"""Exception hierarchy.

Every error carries a short ``kind`` string used by the CLI for its
``error: <kind>: <detail>`` messages.  Subclasses of :class:`ValidationError`
map to exit code 2 and subclasses of :class:`NumericError` to exit code 3.
"""


class ConvexityError(Exception):
    kind = "error"


class ValidationError(ConvexityError, ValueError):
    kind = "validation"


class NumericError(ConvexityError, ArithmeticError):
    kind = "numeric"


class TooFewVertices(ValidationError):
    kind = "too_few_vertices"


class DegenerateEdge(ValidationError):
    kind = "degenerate_edge"


class SelfIntersecting(ValidationError):
    kind = "self_intersecting"


class NotWatertight(ValidationError):
    kind = "not_watertight"


class BadParams(ValidationError):
    kind = "bad_params"


class FileFormatError(ValidationError):
    kind = "file_format"


class BadDimension(ValidationError):
    kind = "bad_dimension"


class DimensionUnsupported(ValidationError):
    kind = "dimension_unsupported"


class CoincidentPoints(ValidationError):
    kind = "coincident_points"


class IndexOutOfRange(ValidationError, IndexError):
    kind = "index_out_of_range"


class PointOutside(ValidationError):
    kind = "point_outside"


class PointTooCloseToBoundary(ValidationError):
    kind = "point_too_close_to_boundary"


class BallTooSmall(ValidationError):
    kind = "ball_too_small"


class TooFewHits(NumericError):
    kind = "too_few_hits"


class NonFiniteGradient(NumericError):
    kind = "non_finite_gradient"


class SelfIntersectionUnrecoverable(NumericError):
    kind = "self_intersection_unrecoverable"
