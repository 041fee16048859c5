"""Exception hierarchy shared by all modules."""


class LayerSpecError(Exception):
    """Base class for every error raised by the package."""


class ProfileError(LayerSpecError, ValueError):
    pass


class NonPositiveValue(ProfileError):
    pass


class UnsortedBreakpoints(ProfileError):
    pass


class EmptyProfile(ProfileError):
    pass


class OutOfDomain(LayerSpecError, ValueError):
    pass


class ThresholdOutOfRange(LayerSpecError, ValueError):
    pass


class SolverError(LayerSpecError, RuntimeError):
    """Numerical failure inside a solver (CLI exit code 3)."""


class StepSizeUnderflow(SolverError):
    pass


class BracketFailure(SolverError):
    pass


class NotAnEigenvalue(LayerSpecError, ValueError):
    pass


class NotSmoothProfile(LayerSpecError, ValueError):
    pass


class OutOfSector(LayerSpecError, ValueError):
    pass


class NotPiecewiseConstant(LayerSpecError, ValueError):
    pass


class NotInSector(OutOfSector):
    pass


class UnsupportedCrossSection(LayerSpecError, ValueError):
    pass


class BadLayer(LayerSpecError, ValueError):
    pass


class EmptyFamily(LayerSpecError, ValueError):
    pass


class LayerIntersectsWell(LayerSpecError, ValueError):
    pass


class TooManyRequested(LayerSpecError, ValueError):
    pass


class ClusterUnresolved(SolverError):
    pass


class LengthMismatch(LayerSpecError, ValueError):
    pass
