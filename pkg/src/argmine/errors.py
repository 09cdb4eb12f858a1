"""Exception hierarchy shared across the package.

Two broad families matter to callers: bad input (recoverable, exit code 1
in the CLI) and violated internal invariants (bugs, exit code 2).
"""


class InputError(ValueError):
    """Raised when user-supplied data or parameters are unusable."""


class NoDenseRegionError(InputError):
    """DBSCAN found no core instance: every point is noise."""


class UndefinedScoreError(InputError):
    """Silhouette score is undefined (fewer than two clusters)."""


class OptimizationFailedError(InputError):
    """Every parameter combination in a search space failed."""


class InvariantError(RuntimeError):
    """An internal consistency guarantee was violated; indicates a bug."""
