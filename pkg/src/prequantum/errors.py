"""Exception hierarchy shared by every module of the engine."""


class PrequantumError(Exception):
    """Base class for all engine errors."""


class RemovedPoint(PrequantumError, ValueError):
    pass


class DimensionMismatch(PrequantumError, ValueError):
    pass


class NotClosed(PrequantumError, ValueError):
    pass


class EndpointMismatch(PrequantumError, ValueError):
    pass


class QuadratureNotConverged(PrequantumError, ArithmeticError):
    pass


class NotHomotopic(PrequantumError, ValueError):
    pass


class AntipodalDegeneracy(PrequantumError, ValueError):
    pass


class UnsupportedModel(PrequantumError, NotImplementedError):
    pass


class MissingDeclaredValue(PrequantumError, KeyError):
    def __str__(self):
        # KeyError quotes its argument; keep the message readable.
        return str(self.args[0]) if self.args else ""


class NotARelation(PrequantumError, ValueError):
    pass


class BasisMismatch(PrequantumError, ValueError):
    pass


class UnmarkedEndpoint(PrequantumError, ValueError):
    pass


class UnreachablePhase(PrequantumError, ValueError):
    pass


class NotFlat(PrequantumError, ValueError):
    pass


class UnsupportedSymmetry(PrequantumError, ValueError):
    pass


class IncompatibleCharacter(PrequantumError, ValueError):
    pass


class ParseError(PrequantumError, ValueError):
    pass


class SchemaError(PrequantumError, ValueError):
    pass
