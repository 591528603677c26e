"""Exception hierarchy for the fairrank package.

Every domain failure raises a subclass of :class:`FairRankError`, so callers
(CLI, HTTP service, experiment harness) can distinguish bad inputs from
legitimate negative outcomes such as an infeasible program.
"""

from __future__ import annotations


class FairRankError(Exception):
    """Base class for all package errors."""


class ValidationError(FairRankError):
    """Base class for input-validation failures."""


class DimensionMismatch(ValidationError):
    pass


class ProbabilityOutOfRange(ValidationError):
    pass


class NegativeUtility(ValidationError):
    pass


class RowSumViolation(ValidationError):
    pass


class ZeroGroupSize(ValidationError):
    pass


class PhiOutOfRange(ValidationError):
    pass


class DeltaOutOfRange(ValidationError):
    pass


class PsiAssumptionViolated(ValidationError):
    pass


class EtaTooLarge(ValidationError):
    pass


class FamilyConditionViolated(ValidationError):
    pass


class EmptyCheckpointSet(ValidationError):
    pass


class ConfigInvalid(ValidationError):
    pass


class InfeasibleProgram(FairRankError):
    """The optimization program admits no feasible point."""


class NumericalFailure(FairRankError):
    """A solver failed to converge within its iteration budget."""


class TooLarge(FairRankError):
    """Instance exceeds the size limit of an enumeration-based routine."""


class NotDecomposable(FairRankError):
    """Matrix violates the doubly-stochastic invariants beyond tolerance."""


class IterationCapExceeded(FairRankError):
    """A randomized loop exceeded its hard iteration cap."""


class Stuck(FairRankError):
    """A greedy ranker found no feasible item for some slot."""


class EmptyNoisyGroup(FairRankError):
    """Randomized response produced an empty noisy group, so the derived
    probability matrix is undefined."""


class IoError(FairRankError):
    """File could not be read or written."""
