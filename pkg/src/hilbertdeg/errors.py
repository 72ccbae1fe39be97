"""Exception hierarchy.

Two families: ``CertificationFailure`` marks a mathematically meaningful
negative outcome (a map vanishes on a boundary, a window does not
stabilize, ...), everything else is a usage error.  The CLI maps the
first family to exit status 2.
"""


class CertificationFailure(Exception):
    """A certificate could not be established."""


class NoGap(CertificationFailure):
    pass


class GapFailure(CertificationFailure):
    pass


class BoundaryGapMissing(CertificationFailure):
    pass


class TailBoundStalls(CertificationFailure):
    pass


class StabilizationFailure(CertificationFailure):
    pass


class InvarianceFailure(CertificationFailure):
    pass


class EnclosureFailure(CertificationFailure):
    pass


class DegenerateValue(CertificationFailure):
    pass


class NewtonBudgetExceeded(CertificationFailure):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class MeshBudgetExceeded(CertificationFailure):
    pass


class Unbounded(CertificationFailure):
    pass


class AuditFailure(CertificationFailure):
    """A sampled audit (Lipschitz, tail bound, gradient) was violated."""


# usage errors


class OutOfDomain(ValueError):
    pass


class DimensionTooSmall(ValueError):
    pass


class RegionMismatch(ValueError):
    pass


class NotInterior(ValueError):
    pass


class ShapeNotRotatable(ValueError):
    pass


class PieceMismatch(ValueError):
    pass


class NotOrthogonal(ValueError):
    pass


class UnsupportedRegion(ValueError):
    pass


class ConfigError(ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
