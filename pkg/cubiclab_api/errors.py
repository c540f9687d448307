"""
Exception hierarchy for CubicLab
"""


class CubicLabError(Exception):
    """Base class for all CubicLab errors"""


class InvalidFormError(CubicLabError, ValueError):
    """Malformed cubic form input (bad index, non-finite coefficient, ...)"""


class DimensionMismatchError(CubicLabError, ValueError):
    """An element does not live in the form's space"""

    def __init__(self, expected: int, got: int, what: str = "element"):
        super().__init__(f"{what} has dimension {got}, expected {expected}")
        self.expected = expected
        self.got = got


class FormFileError(CubicLabError, ValueError):
    """Form file missing or not in the documented JSON format"""


class SelectorError(CubicLabError, ValueError):
    """Unknown or malformed catalog selector"""


class NotEiconalError(CubicLabError, ValueError):
    """|grad u|^2 / |x|^4 is not constant"""


class NotStronglyEllipticError(CubicLabError, ValueError):
    """Maz'ya parameters violate the ellipticity condition"""


class NegativeRadicandError(CubicLabError, ValueError):
    """Maz'ya exponent is not real"""


class NotIdempotentError(CubicLabError, ValueError):
    """Element fails c^2 = c within tolerance"""


class MissingEigenspaceError(CubicLabError, ValueError):
    """A required Peirce eigenspace is empty"""


class NonEiconalSpectrumError(CubicLabError, ValueError):
    """Peirce spectrum is not contained in {1, 1/2, -1}"""


class DegenerateProbeError(CubicLabError, ValueError):
    """No usable probe point for a fit"""


class PoleError(CubicLabError, ValueError):
    """Evaluation point coincides with a pole"""


class ZeroInputError(CubicLabError, ValueError):
    """Operation undefined at the origin"""


class ConvergenceError(CubicLabError, RuntimeError):
    """Iterative solver exhausted its iteration budget"""

    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class ConfigError(CubicLabError, ValueError):
    """Configuration file unreadable or holding invalid values"""
