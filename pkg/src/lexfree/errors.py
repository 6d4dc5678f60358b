"""Exception types shared across the package."""


class LexfreeError(Exception):
    """Base class for all package errors."""


class UnknownCharacter(LexfreeError, ValueError):
    pass


class EmptyWord(LexfreeError, ValueError):
    pass


class DanglingRepetition(LexfreeError, ValueError):
    pass


class UnknownToken(LexfreeError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ParseError(LexfreeError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderMismatch(ParseError):
    pass


class ModeMismatch(LexfreeError, ValueError):
    pass


class EmptyBeam(LexfreeError, RuntimeError):
    pass


class TooLarge(LexfreeError, ValueError):
    pass


class LengthMismatch(LexfreeError, ValueError):
    pass


class EmptyCorpus(LexfreeError, ValueError):
    pass


class DegenerateCountsWarning(UserWarning):
    """Count-of-counts too sparse for modified Kneser-Ney discounts."""
