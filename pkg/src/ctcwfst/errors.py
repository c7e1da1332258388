"""Exception types shared across the package."""


class CtcWfstError(Exception):
    """Base class for all errors raised by this package."""


class FstParseError(CtcWfstError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class SymbolTableError(CtcWfstError):
    pass


class EnumerationOverflowError(CtcWfstError):
    """Path enumeration exceeded its budget; shrink the instance."""


class LexiconError(CtcWfstError):
    pass


class ArpaParseError(CtcWfstError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class GraphError(CtcWfstError):
    pass


class DecodeError(CtcWfstError):
    pass


class BoostError(CtcWfstError):
    pass


class BoostParseError(BoostError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class StreamError(CtcWfstError):
    pass


class QueueingError(CtcWfstError):
    pass


class InstabilityError(QueueingError):
    """Arrival rate at or above service rate: queues grow without bound."""
