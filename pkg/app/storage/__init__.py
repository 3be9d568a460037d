"""
File formats and run artifacts.

Matrices are stored as delimited text; reports and manifests as JSON;
tables as CSV.
"""

from app.storage.artifacts import write_json, write_manifest, write_table
from app.storage.exceptions import (
    AllMissing,
    EmptyMatrix,
    IoError,
    ParseError,
    RaggedRows,
    StorageError,
)
from app.storage.matrix_csv import read_labels, read_matrix, write_matrix

__all__ = [
    "read_labels",
    "read_matrix",
    "write_matrix",
    "write_json",
    "write_manifest",
    "write_table",
    "StorageError",
    "ParseError",
    "RaggedRows",
    "AllMissing",
    "EmptyMatrix",
    "IoError",
]
