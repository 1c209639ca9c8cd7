class ClusterTreeError(ValueError):
    """Base error for the cluster tree toolkit.

    `kind` is a stable, machine-readable tag; the message is for humans.
    """

    kind: str = "error"

    def __init__(self, message: str, *, kind: str | None = None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind


class InputError(ClusterTreeError):
    """Raised when point data cannot be ingested."""

    kind = "input"


class ParameterError(ClusterTreeError):
    """Raised when a numeric parameter is outside its accepted range."""

    kind = "parameter"


class OracleSizeError(ClusterTreeError):
    """Raised when a brute-force oracle is asked to handle too many vertices."""

    kind = "oracle_size"
