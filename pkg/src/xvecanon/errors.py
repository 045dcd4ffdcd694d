"""Exception types shared across the toolkit."""


class XvecAnonError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(XvecAnonError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(InvalidInputError):
    """An embedding file could not be parsed.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}: "
        elif path is not None:
            loc += " "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class DegenerateDataError(XvecAnonError):
    """Training data is too small or has no variance to fit a model."""


class RejectionExhaustedError(XvecAnonError):
    """Forced-dissimilarity resampling hit the attempt limit.

    ``last_similarity`` is the cosine similarity of the final rejected draw.
    """

    def __init__(self, attempts, last_similarity):
        super().__init__(
            f"no sufficiently dissimilar vector after {attempts} attempts "
            f"(last similarity {last_similarity:.6f})"
        )
        self.attempts = attempts
        self.last_similarity = last_similarity


class ModelFormatError(XvecAnonError):
    """A serialized model file is malformed or has an unsupported version.

    ``field`` names the missing or invalid entry when applicable.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{message}: {field}")
        self.field = field
