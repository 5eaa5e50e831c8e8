"""Exception types raised across the package.

Input-validation failures derive from :class:`InputError` (a ``ValueError``);
failures of a numerical procedure on valid input derive from
:class:`NumericalError`. The CLI maps the two families to distinct exit codes.
"""


class InputError(ValueError):
    """Invalid input data or arguments."""


class NumericalError(ArithmeticError):
    """A numerical procedure could not produce a meaningful result."""


# core-space
class NonSquareMatrix(InputError):
    pass


class NegativeDistance(InputError):
    pass


class NonzeroDiagonal(InputError):
    pass


class AsymmetryWithoutFlag(InputError):
    pass


class DimensionMismatch(InputError):
    pass


# gamma calculus
class CutLocusPair(InputError):
    """The pair lies in the cut locus; the curvature is undefined there."""


class SamePoint(InputError):
    pass


class NoAdmissiblePairs(InputError):
    pass


class OracleRequired(InputError):
    pass


class DegenerateGamma(NumericalError):
    """The carre du champ vanishes on every nonconstant field at the point."""


class NonInvariantMeasure(InputError):
    pass


class NonpositiveK(InputError):
    pass


# operator builders
class DisconnectedGraph(InputError):
    pass


class NonpositiveWeight(InputError):
    pass


class DuplicatePoints(InputError):
    pass


class NonpositiveBandwidth(InputError):
    pass


class NonuniformGrid(InputError):
    pass


class NotAGenerator(InputError):
    pass


class ReducibleChain(NumericalError):
    pass


# smooth oracles
class StepTooLarge(InputError):
    pass


class RemainderBelowNoiseFloor(NumericalError):
    """The remainder is identically zero to rounding; no slope exists."""


class FlowExtinct(InputError):
    pass


class UnsupportedSampler(InputError):
    pass


# transport
class MeasureMismatch(InputError):
    pass


class DegenerateDecay(NumericalError):
    pass
