"""Exception and warning types shared across the package."""


class KdvLabError(Exception):
    """Base class for all package errors."""


class SymmetryViolation(KdvLabError):
    """Coefficient array is not Hermitian-symmetric within tolerance."""


class ZeroModePresent(KdvLabError):
    """Caller supplied a coefficient slot for the structurally absent n = 0 mode."""


class TruncationMismatch(KdvLabError):
    """Operands live on different spatial truncations."""


class GridMismatch(KdvLabError):
    """Operands live on different space-time lattices."""


class PhaseMismatch(KdvLabError):
    """Phase data is inconsistent with the field or initial data it is used with."""


class UnsupportedExponent(KdvLabError):
    """Requested Lebesgue exponent is not one of {2, 4, 6}."""


class ZeroFrequency(KdvLabError):
    """Operation requested at the excluded frequency n = 0."""


class EmptyBlock(KdvLabError):
    """Dyadic frequency block contains no active modes."""


class DivisionByZeroNorm(KdvLabError):
    """Ratio requested against a vanishing source norm."""


class EmptyRegion(KdvLabError):
    """Scan region is empty for the given parameters."""


class BlowupDetected(KdvLabError):
    """Time integration exceeded the norm growth guard."""


class StepTooLarge(KdvLabError):
    """Requested time step violates the stability guard."""


class NoContraction(KdvLabError):
    """Fixed-point iteration failed to contract for several consecutive steps."""


class MaxIterExceeded(KdvLabError):
    """Fixed-point iteration hit the iteration cap before converging."""


class DecompositionFailed(KdvLabError):
    """State decomposition violated its closure invariants."""


class ConfigError(KdvLabError):
    """Session configuration file or flags are invalid."""


class SmallnessViolated(UserWarning):
    """Initial data exceeds the configured smallness threshold (warn, not fail)."""
