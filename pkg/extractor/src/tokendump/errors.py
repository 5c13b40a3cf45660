"""Exception taxonomy for the extraction tool."""


class ExtractorError(Exception):
    """Base class for every error this package raises on purpose."""


class ModelLoadFailure(ExtractorError):
    """The vision encoder or its preprocessor could not be loaded."""


class ImageDecodeFailure(ExtractorError):
    """An input image could not be opened or decoded."""


class LayerOutOfRange(ExtractorError):
    """The requested attention layer does not exist in the loaded model."""
