"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, SolverError -> 3,
NetworkError -> 4. Usage errors are handled by the argument parser (exit 1).
"""


class GlucokitError(Exception):
    """Base class for all package errors."""


class DataError(GlucokitError):
    """Invalid input data: malformed CSV rows, violated invariants, bad values."""


class SolverError(GlucokitError):
    """Numerical failure: rank deficiency, non-convergence, NaN loss."""


class NetworkError(GlucokitError):
    """Upload failure or dead-letter outcome on the telemetry path."""
