"""Exception hierarchy shared by every stage of the pipeline."""


class ArasError(Exception):
    pass


class ParseError(ArasError):
    """The scenario or data document is not well-formed JSON."""


class ValidationError(ArasError):
    """A document parsed but broke a structural rule.

    ``path`` locates the offending value, e.g. ``nodes[1].id``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class PastTime(ArasError):
    pass


class Unreachable(ArasError):
    pass


class UnknownTarget(ArasError):
    pass


class MissingClassDefault(ArasError):
    pass


class OutOfRange(ArasError):
    pass


class BadRanks(ArasError):
    pass


class DuplicateArea(ArasError):
    pass


class MissingArea(ArasError):
    pass


class BadWindow(ArasError):
    pass


class ZeroTransmitted(ArasError):
    pass


class SchemaMismatch(ArasError):
    pass
