"""
Toolkit exceptions.

Every error raised on purpose by the toolkit derives from LearnerError.
The family decides the process exit code used by the command line.
"""


class LearnerError(Exception):
    """Base exception for toolkit errors."""

    exit_code = 1
    error = "Error"


class UsageError(LearnerError):
    """Invalid invocation or configuration."""

    exit_code = 2
    error = "UsageError"


class DataError(LearnerError):
    """Input data violates a precondition."""

    exit_code = 3
    error = "DataError"


class NumericError(LearnerError):
    """A numerical procedure could not produce a usable result."""

    exit_code = 4
    error = "NumericError"


class ConfigError(UsageError):
    """Raised when a run configuration fails validation."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


class DimensionMismatch(DataError):
    """Raised when operand shapes are incompatible."""

    def __init__(self, what: str, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected shape {expected}, got {got}")


class NonFiniteInput(DataError):
    """Raised when an input holds NaN or infinite values where finite ones are required."""

    def __init__(self, what: str):
        super().__init__(f"{what} contains non-finite entries")


class RankOutOfRange(DataError):
    """Raised when a requested rank is outside [1, limit]."""

    def __init__(self, rank: int, limit: int):
        self.rank = rank
        self.limit = limit
        super().__init__(f"Rank {rank} outside the admissible range [1, {limit}]")


class RankDeficient(DataError):
    """Raised when a basis does not have full column rank."""

    def __init__(self, numerical_rank: int, columns: int):
        self.numerical_rank = numerical_rank
        self.columns = columns
        super().__init__(
            f"Matrix has numerical column rank {numerical_rank} < {columns} columns"
        )


class EmptyObservationSet(DataError):
    """Raised when a matrix has no observed entries."""

    def __init__(self):
        super().__init__("Observed matrix has no observed entries")


class EmptyRowOrColumn(DataError):
    """Raised when a row or column has no observed entry."""

    def __init__(self, axis: str, index: int):
        self.axis = axis
        self.index = index
        super().__init__(f"{axis} {index} has no observed entries")


class TooFewObservations(DataError):
    """Raised when there are fewer observed entries than folds."""

    def __init__(self, observed: int, folds: int):
        self.observed = observed
        self.folds = folds
        super().__init__(f"{observed} observed entries cannot be split into {folds} folds")


class EmptyHoldout(DataError):
    """Raised when a holdout set is empty."""

    def __init__(self):
        super().__init__("Holdout set is empty")


class IndexOutOfRange(DataError):
    """Raised when an index subset points outside the matrix."""

    def __init__(self, index: int, size: int):
        self.index = index
        self.size = size
        super().__init__(f"Index {index} out of range for dimension {size}")


class NotOrthonormal(DataError):
    """Raised when a basis is expected to be orthonormal and is not."""

    def __init__(self, deviation: float):
        self.deviation = deviation
        super().__init__(f"Basis columns deviate from unit norm by {deviation:.3g}")


class InvalidCorrelation(DataError):
    """Raised when a noise correlation lies outside [0, 1)."""

    def __init__(self, rho: float):
        self.rho = rho
        super().__init__(f"Correlation {rho} outside [0, 1)")


class RankZeroSelected(NumericError):
    """Raised when rank selection retains no singular value."""

    def __init__(self, threshold: float):
        self.threshold = threshold
        super().__init__(
            f"No singular value exceeds the selected threshold {threshold:.6g}"
        )


class ScenarioFailed(NumericError):
    """Raised when a simulation repetition fails."""

    def __init__(self, rep: int, cause: Exception):
        self.rep = rep
        self.cause = cause
        super().__init__(f"Repetition {rep} failed: {cause.__class__.__name__}: {cause}")


class HoldoutNotObserved(DataError):
    """Raised when a holdout index points at a missing entry."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Holdout index {index} is not an observed entry")
