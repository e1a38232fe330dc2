"""Exception types shared across the package."""


class MediaMindError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(MediaMindError):
    """Input violates a documented invariant or schema."""


class TranscriptionError(MediaMindError):
    """A transcript could not be produced for an item."""

    def __init__(self, item_id: str, message: str):
        super().__init__(f"{message} (item {item_id})")
        self.item_id = item_id


class StorageError(MediaMindError):
    """A durable store could not be read or written."""


class NotFoundError(MediaMindError):
    """Lookup by id found nothing."""


class ConflictError(MediaMindError):
    """The operation collides with existing state, e.g. duplicate registration."""


class PipelineError(MediaMindError):
    """Pipeline validation or execution failed."""
