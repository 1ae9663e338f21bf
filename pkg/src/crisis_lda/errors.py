"""Exception hierarchy.

Validation problems (bad input files, closed-enum violations) derive from
:class:`ValidationError`; numerical failures (fits that do not converge,
discretisations that are too coarse) derive from :class:`NumericalError`.
The CLI maps the two families to exit codes 2 and 3.
"""


class CrisisLdaError(Exception):
    """Base class for all package errors."""


class ValidationError(CrisisLdaError, ValueError):
    pass


class NumericalError(CrisisLdaError, ArithmeticError):
    pass


class MalformedRow(ValidationError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class InteriorGap(ValidationError):
    def __init__(self, country, year):
        self.country = country
        self.year = year
        super().__init__(f"interior gap in GDP series of {country} at {year}")


class NonPositiveGdp(ValidationError):
    def __init__(self, country, year, value):
        self.country = country
        self.year = year
        super().__init__(f"non-positive GDP {value!r} for {country} in {year}")


class UnknownKind(ValidationError):
    pass


class UnknownEnumValue(ValidationError):
    pass


class SeriesTooShort(ValidationError):
    pass


class InsufficientHistory(CrisisLdaError):
    """Not enough observations around an onset to evaluate a measure.

    This is an exclusion signal rather than a failure: the episode is dropped
    from the sample of that one measure.
    """


class EmptySample(NumericalError):
    pass


class Underdispersed(UserWarning):
    pass


class DuplicateEvent(UserWarning):
    pass


class NonConvergence(NumericalError):
    pass


class SupportViolation(NumericalError):
    pass


class StepTooCoarse(NumericalError):
    pass


class NoExceedances(NumericalError):
    pass


class QuantileMissing(CrisisLdaError, KeyError):
    pass
