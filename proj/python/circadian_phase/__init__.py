"""Circadian phase estimation from wearable heart rate and step counts.

Records are passed as three equal-length columns: minute index from midnight
of the first day, heart rate in bpm and steps per minute, with NaN for a
missing cell. ``simulate`` and ``read_csv`` return dictionaries in that shape.
"""

import json

from . import _circadian
from ._circadian import (
    ConfigError,
    NumericalError,
    ValidationError,
    clock_drift,
    read_csv,
    rmse,
    schema_version,
    simulate,
    steps_to_light,
    write_csv,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "ValidationError",
    "clock_drift",
    "extract",
    "read_csv",
    "rmse",
    "run",
    "schema_version",
    "simulate",
    "steps_to_light",
    "sweep",
    "write_csv",
]


def _columns(records):
    return records["minute"], records["hr"], records["steps"]


def run(records, estimator="filter", **options):
    """Runs ``filter``, ``model-only`` or ``hr-only`` and returns the result
    document (the same schema the CLI writes)."""
    return json.loads(_circadian.run(*_columns(records), estimator=estimator, **options))


def extract(records, **options):
    """Daily HR-phase estimates, one dict per calendar day."""
    return _circadian.extract(*_columns(records), **options)


def sweep(scenario, days, seed, grid, **options):
    """Mean and standard error of RMSE and NCR per grid point."""
    return json.loads(_circadian.sweep(scenario, days, seed, list(grid), **options))
