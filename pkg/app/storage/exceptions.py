"""
Storage-specific exceptions.

These exceptions provide detailed error handling for matrix and artifact files.
"""
from app.exceptions import DataError


class StorageError(DataError):
    """Base exception for storage operations."""

    error = "StorageError"


class ParseError(StorageError):
    """Raised when a token cannot be read as a number or missing marker."""

    def __init__(self, path: str, line: int, column: int, token: str):
        self.path = path
        self.line = line
        self.column = column
        self.token = token
        super().__init__(
            f"{path}: cannot parse {token!r} at line {line}, column {column}"
        )


class RaggedRows(StorageError):
    """Raised when rows of a matrix file have different lengths."""

    def __init__(self, path: str, line: int, expected: int, got: int):
        self.path = path
        self.line = line
        self.expected = expected
        self.got = got
        super().__init__(
            f"{path}: line {line} has {got} fields, expected {expected}"
        )


class AllMissing(StorageError):
    """Raised when a matrix file holds no observed value."""

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"{path}: every entry is missing")


class EmptyMatrix(StorageError):
    """Raised when writing or reading a matrix with no rows or columns."""

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"{path}: matrix has no rows or columns")


class IoError(StorageError):
    """Raised when a file cannot be read or written."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")
