"""Exception types shared across the package."""


class HetmatchError(Exception):
    """Base class for all package-specific errors."""


class DuplicateDocument(HetmatchError):
    """A document id was added to a corpus that already contains it."""


class NotFound(HetmatchError):
    """Unknown document id or field."""


class ConfigError(HetmatchError):
    """Invalid weight configuration, grid, or generator parameters."""


class DimensionError(HetmatchError):
    """Mismatched vector/weight list lengths."""


class EmptyDataset(HetmatchError):
    """An operation that needs labeled pairs received none."""


class TrainError(HetmatchError):
    """Training aborted (non-finite loss or collapsed parameters)."""
