"""Exception hierarchy shared by every module."""


class PhiContractError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PhiContractError, ValueError):
    """Malformed or out-of-range input (bad tolerance, empty sample, ...)."""


class OutsideCarrierError(InputError):
    def __init__(self, x, carrier=None):
        self.x = x
        super().__init__(f"point {x!r} is not in the carrier {carrier!s}")


class InvalidMetricError(PhiContractError):
    """The distance expression produced a negative or non-finite value."""

    def __init__(self, x, y, value):
        self.x, self.y, self.value = x, y, value
        super().__init__(f"p({x!r}, {y!r}) = {value!r} is not a finite nonnegative real")


# expression language

class ExprError(InputError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset, source=""):
        self.offset = offset
        self.source = source
        super().__init__(f"syntax error at offset {offset}: {message}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name, offset, allowed=()):
        self.name = name
        self.offset = offset
        allowed = ", ".join(sorted(allowed)) or "none"
        super().__init__(f"unknown identifier {name!r} at offset {offset} (variables: {allowed})")


class ArityError(ExprError):
    def __init__(self, name, expected, got, offset):
        self.name = name
        self.offset = offset
        super().__init__(f"{name}() takes {expected} argument(s), got {got} (offset {offset})")


class EvaluationError(PhiContractError, ArithmeticError):
    """Arithmetic failure while evaluating an expression.

    ``bindings`` holds the variable values at the offending point.
    """

    def __init__(self, message, bindings=None):
        self.bindings = dict(bindings or {})
        where = ", ".join(f"{k}={v!r}" for k, v in sorted(self.bindings.items()))
        super().__init__(f"{message} at {where}" if where else message)


class DivisionByZeroError(EvaluationError):
    pass


class EvalDomainError(EvaluationError):
    """sqrt of a negative number, 0 to a negative power, and similar."""


class NonFiniteError(EvaluationError):
    pass


# maps

class MapError(PhiContractError):
    pass


class TotalityError(MapError):
    def __init__(self, x, map_name=""):
        self.x = x
        super().__init__(f"map {map_name!r}: no piece guards x={x!r}")


class NotASelfMapError(MapError):
    def __init__(self, x, image, map_name=""):
        self.x = x
        self.image = image
        self.partial_trace = None
        super().__init__(f"map {map_name!r} is not a self-map: T({x!r}) = {image!r} lies outside the carrier")


# comparison functions

class RangeError(PhiContractError):
    """f(t) = t - phi(t) never reaches the requested value below t_max."""


class InvalidHypothesisError(PhiContractError):
    """Numerical evidence that a structural hypothesis (monotonicity) fails."""
