"""Exception types shared across the package."""


class FocalMarginError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(FocalMarginError, ValueError):
    """Two grids that must share a shape do not."""

    def __init__(self, a_shape, b_shape, what="grids"):
        self.a_shape = tuple(a_shape)
        self.b_shape = tuple(b_shape)
        super().__init__(
            f"shape mismatch between {what}: {self.a_shape} vs {self.b_shape}"
        )


class ParameterError(FocalMarginError, ValueError):
    """A scalar parameter is outside its valid range."""


class FormatError(FocalMarginError, ValueError):
    """A grid or mask file could not be parsed.

    ``path`` and ``line`` are filled in when known so the CLI can point at
    the offending location.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class GenerationError(FocalMarginError, RuntimeError):
    """The synthetic mask generator could not meet its target ratio."""


class DivergenceError(FocalMarginError, RuntimeError):
    """Training produced a non-finite loss or parameter."""

    def __init__(self, epoch, message):
        self.epoch = epoch
        super().__init__(f"diverged at epoch {epoch}: {message}")
