"""Exception hierarchy shared by all modules.

InputError subclasses map to CLI exit code 2; anything else that escapes
is an internal error (exit 3).
"""


class CamCondError(Exception):
    """Base class for all toolchain errors."""


class InputError(CamCondError):
    """Bad user-supplied data (files, parameters, shapes)."""


# geometry
class BehindCamera(CamCondError):
    pass


class NonPositiveDepth(InputError):
    pass


# depth mesh
class DimensionMismatch(InputError):
    pass


class EmptyMesh(InputError):
    pass


class NoBoundaryData(InputError):
    pass


# scene transfer
class EmptyMask(InputError):
    pass


class ZeroTotalWeight(InputError):
    pass


class NonPositiveResult(CamCondError):
    """Affine depth alignment produced a non-positive depth."""


# motion fitting
class DegenerateConfiguration(InputError):
    pass


# rasterization
class AllUncovered(InputError):
    pass


class LengthMismatch(InputError):
    pass


# schedule
class InvalidFraction(InputError):
    pass


class InvalidSteps(InputError):
    pass


class StepOutOfRange(InputError):
    pass


# trajectory
class InvalidSpec(InputError):
    pass


# metrics
class ShapeMismatch(InputError):
    pass


class ZeroBaseline(InputError):
    pass


class DegenerateMatch(InputError):
    pass


# io
class SchemaViolation(InputError):
    pass


class MalformedHeader(InputError):
    pass


class IoFailure(InputError):
    pass
