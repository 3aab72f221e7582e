class DtlaError(Exception):
    """Base class for all errors raised by the package."""


class TreeError(DtlaError):
    pass


class InvalidAddress(TreeError):
    pass


class ArityMismatch(TreeError):
    pass


class EmptyInput(TreeError):
    pass


class UndefinedImage(TreeError):
    pass


class OverlappingKeys(TreeError):
    pass


class TermSyntaxError(TreeError):
    pass


class ParseError(DtlaError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class SemanticError(DtlaError):
    pass


class NotTotal(DtlaError):
    pass


class PreconditionViolation(DtlaError):
    pass


class NotApplicable(DtlaError):
    """A bound or analysis does not apply to the given transducer class."""


class MalformedTuple(DtlaError):
    pass


class MissingRho(DtlaError):
    pass


class NodeNotInOutput(DtlaError):
    pass
