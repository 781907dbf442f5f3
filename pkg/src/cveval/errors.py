"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (malformed or insufficient
input, CLI exit code 2) and :class:`DegeneracyError` (the data are well formed
but the statistics are undefined, exit code 3).
"""


class CVEvalError(ValueError):
    """Base class for all errors raised by this package."""


class InputError(CVEvalError):
    pass


class DegeneracyError(CVEvalError):
    pass


# estimator core
class EmptyPopulation(InputError):
    pass


class DegenerateMetric(DegeneracyError):
    pass


class EmptySample(InputError):
    pass


class LengthMismatch(InputError):
    pass


class ZeroN(InputError):
    pass


class RhoOutOfRange(InputError):
    pass


class NegativeGamma(InputError):
    pass


class NonpositiveTarget(InputError):
    pass


# variance components
class NoReplicatedItems(DegeneracyError):
    pass


class TooFewItems(InputError):
    pass


class DegenerateF(DegeneracyError):
    pass


class DegenerateInput(DegeneracyError):
    pass


# text metrics
class NoReferences(InputError):
    pass


class DimensionMismatch(InputError):
    pass


# bootstrap
class GridExceedsData(InputError):
    pass


class ZeroWidth(DegeneracyError):
    pass


# simulation
class NotPSD(InputError):
    pass


class TooFewReplicates(InputError):
    pass


class TooFewPoints(InputError):
    pass


class MalformedAssignment(InputError):
    pass


# linear algebra
class RowCountMismatch(InputError):
    pass


class SingularShift(DegeneracyError):
    pass


class SingularInner(DegeneracyError):
    pass


class NonIdentityU(InputError):
    pass


class SingularD(DegeneracyError):
    pass


class NotSPD(DegeneracyError):
    pass


# dataset io
class ParseError(InputError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class DuplicateKey(InputError):
    pass


class MissingField(InputError):
    pass


class NoJudgments(InputError):
    pass


class UnknownMetric(InputError):
    pass
