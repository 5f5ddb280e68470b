"""Exception hierarchy.

``ValidationError`` subclasses describe bad input or configuration and map to
CLI exit status 1; everything else is a runtime failure (exit status 2).
"""


class EmoxgenError(Exception):
    pass


class ValidationError(EmoxgenError):
    pass


class ShapeError(ValidationError, ValueError):
    def __init__(self, primitive, *shapes):
        self.primitive = primitive
        self.shapes = shapes
        shown = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{primitive}: incompatible shapes {shown}")


class ContractError(ValidationError, ValueError):
    pass


class ConfigError(ValidationError, ValueError):
    pass


class SchemaError(ValidationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DataError(ValidationError, ValueError):
    pass


class TaxonomyError(ValidationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class FixtureParseError(ValidationError, ValueError):
    pass


class WeightFormatError(ValidationError, ValueError):
    pass


class StateError(EmoxgenError, RuntimeError):
    pass


class NumericError(EmoxgenError, ArithmeticError):
    pass


class DomainError(ValidationError, ArithmeticError):
    pass
