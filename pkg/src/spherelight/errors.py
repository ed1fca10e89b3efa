"""Exception types shared across the package."""


class DegenerateInputError(ValueError):
    """Input is well-formed but numerically degenerate (e.g. an all-zero image)."""


class UnsupportedSizeError(ValueError):
    """Problem size exceeds what an exact solver is meant to handle."""


class ImageFormatError(ValueError):
    """Malformed or unsupported image file.

    ``offset`` is the byte position at which decoding failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class HeaderError(ImageFormatError):
    pass


class TruncatedDataError(ImageFormatError):
    pass


class UnsupportedFormatError(ImageFormatError):
    pass
