"""Exception hierarchy shared by all modules.

Every exception carries an ``exit_code`` used by the command line interface:
2 for bad input, 3 for numerical failure.
"""


class DPWError(Exception):
    exit_code = 3


class InputError(DPWError):
    exit_code = 2


class ValidationError(InputError):
    """Input object violates a structural precondition.

    ``defect`` holds the measured violation (a norm), when there is one.
    """

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ExpressionSyntaxError(InputError):
    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at offset {offset}"
                         + (f"; expected one of {sorted(expected)}" if expected else ""))
        self.offset = offset
        self.expected = frozenset(expected)


class UnknownIdentifierError(InputError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class EvaluationError(DPWError):
    """Arithmetic failure (pole, branch cut) when evaluating an expression."""

    def __init__(self, message, where=None):
        super().__init__(message if where is None else f"{message} at z={where}")
        self.where = where


class FactorizationError(DPWError):
    def __init__(self, message, section=None, conditioning=None):
        super().__init__(message)
        self.section = section
        self.conditioning = conditioning


class ConfigError(InputError):
    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))
        self.key = key
        self.line = line
