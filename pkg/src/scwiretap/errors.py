"""Exception and warning types shared across the package."""


class ScWiretapError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ScWiretapError, ValueError):
    """Operand dimensions do not agree."""


class Inconsistent(ScWiretapError):
    """A linear system over GF(2) has no solution."""


class InvalidParams(ScWiretapError, ValueError):
    """Ensemble or solver parameters violate a precondition."""


class Indivisible(InvalidParams):
    """Socket counts cannot be split evenly into check nodes."""


class RateOutOfRange(InvalidParams):
    """Requested rate lies outside the branch handled by the selector."""


class DegreeTooSmall(InvalidParams):
    """Selected type-1 variable degree is below 3."""


class OutOfRange(ScWiretapError, ValueError):
    """Argument lies outside the attainable interval of a function."""


class TooLarge(ScWiretapError, ValueError):
    """Exhaustive enumeration requested on an instance that is too big."""


class DegenerateEnsembleWarning(UserWarning):
    """Degree selection produced l2 = 0, so the code carries no secret bits."""


class ProfileRounding(UserWarning):
    """Constellation profile counts had to be rounded to integers."""
