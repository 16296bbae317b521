"""Exception types raised across the package."""


class RcbasinError(Exception):
    """Base class for all package-specific errors."""


class ZeroRangeError(RcbasinError):
    """A signal component is constant, so no scale can be fitted for it."""


class DimensionMismatchError(RcbasinError):
    """Array shapes are inconsistent with the reservoir or signal dimensions."""


class NonFiniteError(RcbasinError):
    """A state or output became NaN or infinite during evolution."""


class SingularSpectrumError(RcbasinError):
    """A random reservoir matrix has (numerically) zero spectral radius."""


class SingularSystemError(RcbasinError):
    """The unregularized normal equations are rank-deficient."""


class TooShortError(RcbasinError):
    """A training signal is too short to yield at least one fit pair."""


class SamplingExhaustedError(RcbasinError):
    """Rejection sampling hit its attempt cap without enough accepted draws."""


class InvalidWindowError(RcbasinError):
    """The test-signal window leaves no room for closed-loop prediction."""


class SchemaMismatchError(RcbasinError):
    """A persisted file does not match the schema this version writes."""


class DegenerateCloudError(RcbasinError):
    """A sample cloud has zero kernel bandwidth (all points identical)."""


class StepSizeUnderflowError(RcbasinError):
    """The adaptive integrator could not proceed at the requested tolerance."""
