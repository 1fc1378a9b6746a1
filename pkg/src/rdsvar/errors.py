"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: UsageError -> 1, DataError -> 2,
BudgetError -> 3.
"""


class RdsVarError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class UsageError(RdsVarError):
    """Bad flags, bad config keys, invalid parameter combinations."""

    exit_code = 1


class DataError(RdsVarError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class BudgetError(RdsVarError):
    """A runtime budget was exceeded (enumeration too large, sample starved)."""

    exit_code = 3
