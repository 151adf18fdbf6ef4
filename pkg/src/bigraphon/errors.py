"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """A documented operation precondition does not hold for the given input."""


class SchemaError(ValueError):
    """An input document violates one of the JSON schemas.

    ``field`` is a dotted path into the offending document, e.g. ``"mu"``
    or ``"edges[3]"``.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
