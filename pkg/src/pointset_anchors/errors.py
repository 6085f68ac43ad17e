"""Exception types raised by validation and construction paths."""


class PointSetError(ValueError):
    """Base class for all errors raised by this library."""


class DegenerateSegmentError(PointSetError):
    """Segment endpoints coincide where a direction is required."""


class DegenerateBoxError(PointSetError):
    """Box is malformed (non-finite, min > max) or has no usable extent."""


class TooFewVerticesError(PointSetError):
    """A polygon needs at least 3 vertices."""


class DegenerateContourError(PointSetError):
    """Contour has zero signed area."""


class NonPositiveScaleError(PointSetError):
    """Scale factors must be strictly positive."""


class BadPointCountError(PointSetError):
    """Anchor point count must be a positive multiple of 4."""


class MissingCanonicalPosesError(PointSetError):
    """Pose grid generation needs canonical poses."""


class JointCountMismatchError(PointSetError):
    """Pose arrays must carry exactly NUM_JOINTS joints."""


class NoVisibleJointsError(PointSetError):
    """OKS is undefined for a ground truth with no visible joints."""


class BadThresholdsError(PointSetError):
    """Assignment thresholds must satisfy 0 <= lo <= hi <= 1."""


class LengthMismatchError(PointSetError):
    """Parallel arrays disagree in length."""


class TooFewValidPointsError(PointSetError):
    """Mask construction needs at least 3 valid points."""


class NoValidPointsError(PointSetError):
    """At least one valid point is required."""


class TooFewVisibleJointsError(PointSetError):
    """Pose normalization needs at least 2 visible joints."""


class TooFewPosesError(PointSetError):
    """Clustering needs at least k admissible poses."""


class MalformedDocumentError(PointSetError):
    """Annotation document is structurally invalid; message names the field."""


class NoApplicableRecordsError(PointSetError):
    """No input record carries the annotations the operation needs."""
