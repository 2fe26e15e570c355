"""Exception types raised by the batch evaluation engine."""


class ExemError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(ExemError, ValueError):
    """Vectors with incompatible dimensionality were combined."""


class EmptyGroundSetError(ExemError, ValueError):
    """A ground set must contain at least one observation."""


class EmptyEvaluationSetError(ExemError, ValueError):
    """An operation that minimizes over a set received an empty set."""


class InvalidDataError(ExemError, ValueError):
    """Non-finite input data or an invalid dissimilarity result."""


class SharedMemoryOverflowError(ExemError, ValueError):
    """A single ground vector does not fit into the per-block staging budget."""


class OutOfMemoryError(ExemError, RuntimeError):
    """The memory budget cannot hold even one evaluation set."""


class BudgetExceedsGroundSetError(ExemError, ValueError):
    """The selection budget k exceeds the number of ground observations."""


class InstanceTooLargeError(ExemError, ValueError):
    """Exhaustive search was requested on a combinatorially infeasible instance."""


class IncomparableRecordsError(ExemError, ValueError):
    """Speedup was requested between benchmark records of different problems."""
