"""Exception hierarchy shared by all spectre modules."""


class SpectreError(Exception):
    """Base class for every error raised by spectre."""


class NonHermitianInput(SpectreError):
    pass


class DomainError(SpectreError):
    """A scalar function is undefined at some eigenvalue."""


class Infeasible(SpectreError):
    pass


class MaxIterExceeded(SpectreError):
    """The iterative solver ran out of budget before meeting its stopping rule.

    The last iterate is kept on ``self.x`` so callers can inspect it.
    """

    def __init__(self, msg, x=None, objective=None):
        super().__init__(msg)
        self.x = x
        self.objective = objective


class SolverFailure(SpectreError):
    pass


class MissingGrading(SpectreError):
    pass


class NotHermitian(SpectreError):
    pass


class NoRealStructure(SpectreError):
    pass


class NotCommutative(SpectreError):
    pass


class NotInAlgebra(SpectreError):
    pass


class NotPositive(SpectreError):
    pass


class OutOfRange(SpectreError):
    pass


class TooShort(SpectreError):
    pass


class NotTimelike(SpectreError):
    pass


class LatticeTooSmall(SpectreError):
    pass


class InvalidSymmetry(SpectreError):
    pass


class NotSeparating(SpectreError):
    """Two distinct points receive identical values from every generator."""

    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair
