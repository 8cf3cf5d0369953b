"""Shared primitives: the missing-value sentinel, feature kinds, error types."""

from __future__ import annotations

import enum


class _MissingType:
    """Singleton sentinel for a missing cell value.

    Carried through ingestion, training, and prediction; learners route
    missing values fractionally instead of dropping rows.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __reduce__(self):
        return (_MissingType, ())

    def __bool__(self):
        return False


MISSING = _MissingType()


class FeatureKind(enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


class DriverIdError(Exception):
    """Base class for all package errors."""


class ConfigError(DriverIdError):
    """Bad run or ingestion configuration (CLI exit code 2)."""


class DataError(DriverIdError):
    """Bad or unusable input data (CLI exit code 3)."""


class SchemaError(DataError):
    """Input data does not match the declared or trained schema."""


class EmptyDatasetError(DataError):
    """A dataset with zero data rows."""
