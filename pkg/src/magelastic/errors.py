"""Exception hierarchy shared by all modules."""


class MagelasticError(Exception):
    """Base class for library errors."""


class InvalidDegree(MagelasticError, ValueError):
    pass


class InvalidMetric(MagelasticError, ValueError):
    pass


class NotRepresentable(MagelasticError, ValueError):
    """A matrix lies outside the image of the stress isomorphism."""


class DegenerateElement(MagelasticError, ValueError):
    pass


class OutsideElement(MagelasticError, ValueError):
    pass


class StrainTooLarge(MagelasticError, ValueError):
    pass


class NotOnSurface(MagelasticError, ValueError):
    pass


class InvalidMaterial(MagelasticError, ValueError):
    pass


class ConfigError(MagelasticError, ValueError):
    """Invalid problem description. ``line`` is set for file parse errors."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MeshFormatError(ConfigError):
    pass


class IllPosedLoad(MagelasticError):
    """Load not orthogonal to the kernel of a semidefinite system."""


class NonSolenoidalCurrent(IllPosedLoad):
    pass


class NoConvergence(MagelasticError, RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
