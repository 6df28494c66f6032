"""Exception types shared across the package."""


class SamplingExhausted(RuntimeError):
    """Rejection sampling hit its redraw cap; the configuration is likely infeasible."""


class OutsideArea(ValueError):
    pass


class DegenerateGeometry(ValueError):
    pass


class EpisodeFinished(RuntimeError):
    pass


class ShapeMismatch(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


class ConfigMismatch(ValueError):
    pass


class BufferTooSmall(RuntimeError):
    pass


class EmptyDenominator(ZeroDivisionError):
    pass


class ConfigParseError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


class ValidationError(ValueError):
    """A configuration value breaks a stated invariant."""
