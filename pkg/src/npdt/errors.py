"""Exception hierarchy for the toolkit.

Input problems (bad files, bad parameters) are distinguished from numeric
failures (non-convergence, singular solves, blow-up) so the CLI can map them
to distinct exit codes.
"""


class NpdtError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(NpdtError):
    """Vector/matrix/measure dimensions do not agree."""


class DomainError(NpdtError):
    """A parameter is outside its mathematical domain."""


class InputError(NpdtError):
    """Malformed model file, family file or command line."""


class NumericError(NpdtError):
    """A numerical procedure failed to meet its contract."""


class SingularShiftError(NumericError):
    """Resolvent solve requested at (or numerically at) an eigenvalue."""


class StructureError(NumericError):
    """A structural guarantee (positivity of a Perron vector) failed."""


class NoEquilibriumError(NumericError):
    """Principal eigenvalue is nonnegative; positive r makes this unreachable
    for well-formed data, so it signals corrupted input."""


class StiffnessError(NumericError):
    """Adaptive step size underflowed."""


class PositivityError(NumericError):
    """Trajectory left the nonnegative cone beyond roundoff tolerance."""


class BlowUpError(NumericError):
    """State norm exceeded the blow-up threshold.  Carries the partial
    trajectory as evidence for an ``unbounded`` classification."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
