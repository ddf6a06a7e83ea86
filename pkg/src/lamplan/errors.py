"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error JSON without string matching.
"""


class LamplanError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class WindowError(LamplanError):
    code = "invalid-window"


class BoundsError(LamplanError):
    code = "out-of-bounds"


class ExtentError(LamplanError):
    code = "extent-mismatch"


class SigmaError(LamplanError):
    code = "invalid-sigma"


class ShapeError(LamplanError):
    code = "shape-mismatch"


class EmptyInputError(LamplanError):
    code = "empty-input"


class ParameterError(LamplanError):
    code = "invalid-parameter"


class GeometryError(LamplanError):
    """Degenerate anatomy: collapsed axis, unresolved sides, bad regions."""

    code = "degenerate-geometry"


class WeightsError(LamplanError):
    code = "bad-weights"


class NumericError(LamplanError):
    code = "non-finite"


class FormatError(LamplanError):
    code = "bad-format"


class ConfigError(LamplanError):
    code = "bad-config"
