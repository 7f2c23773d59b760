"""Exception hierarchy shared by every hirob module."""


class HirobError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(HirobError, ValueError):
    pass


class ValidationError(HirobError, ValueError):
    """A model object violates one of its construction invariants."""


class UnsupportedExpression(ValidationError):
    """The expression falls outside the Clarke-regular function class."""


class DomainError(HirobError, ValueError):
    pass


class SolverError(HirobError, RuntimeError):
    pass


class CombinatorialBlowup(HirobError, RuntimeError):
    pass


class ConfigError(HirobError, ValueError):
    pass


class NotApplicable(HirobError):
    pass


class ParseError(HirobError, ValueError):
    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class IngestError(HirobError, ValueError):
    pass
