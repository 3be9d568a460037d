from typing import Generic, TypeVar

from pydantic import BaseModel

from app.config import settings

T = TypeVar("T")


class CommandResponse(BaseModel, Generic[T]):
    success: bool = True
    data: T | None = None


class ErrorResponse(BaseModel):
    success: bool = False
    error: str
    message: str


class Versioned(BaseModel):
    """Base for every JSON artifact: carries the schema version."""

    schema_version: str = settings.SCHEMA_VERSION
