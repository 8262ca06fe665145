class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


class ParseError(ValidationError):
    """Malformed input file or record.

    ``location`` identifies the offending record (trial or decision index) and
    ``field`` the key that failed, when known.
    """

    def __init__(self, message, location=None, field=None):
        self.location = location
        self.field = field
        prefix = []
        if location is not None:
            prefix.append(str(location))
        if field is not None:
            prefix.append(f"field {field!r}")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)
