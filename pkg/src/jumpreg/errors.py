"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 for bad input, 3 for infeasible configurations and 4 for numerical
degeneracy.
"""

from __future__ import annotations


class JumpRegError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class InputError(JumpRegError, ValueError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateX(InputError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"duplicated covariate value x = {value!r}")


class EmptyFile(InputError):
    pass


class NonIncreasing(InputError):
    pass


class EmptyWindow(InputError):
    pass


class IndexOrder(InputError):
    pass


class BadParam(InputError):
    pass


class BadProb(InputError):
    pass


class BadPrior(InputError):
    pass


class Mismatch(InputError):
    pass


class BadIncumbent(InputError):
    """The supplied incumbent RSS is below the attainable optimum."""


class Infeasible(JumpRegError):
    exit_code = 3


class TooFew(Infeasible):
    pass


class TooLarge(Infeasible):
    pass


class NumericalError(JumpRegError, ArithmeticError):
    exit_code = 4


class DegenerateSigma(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class BoundaryMax(NumericalError):
    """The maximum of a simulated criterion process touches the truncation range."""


class TruncationError(NumericalError):
    """Posterior mass near the truncation boundary exceeds tolerance."""


class DegenerateSigmaWarning(UserWarning):
    pass


class NonPositiveCWarning(UserWarning):
    pass
