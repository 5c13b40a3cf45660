"""Vision-encoder token dumping to the .tpk1 binary format."""

from .errors import (
    ExtractorError,
    ImageDecodeFailure,
    LayerOutOfRange,
    ModelLoadFailure,
)
from .extract import (
    DUMP_SUFFIX,
    IMAGE_SUFFIXES,
    MANIFEST_NAME,
    ExtractionJob,
    extract,
    pack_dump,
)

__version__ = "0.1.0"

__all__ = [
    "DUMP_SUFFIX",
    "IMAGE_SUFFIXES",
    "MANIFEST_NAME",
    "ExtractionJob",
    "ExtractorError",
    "ImageDecodeFailure",
    "LayerOutOfRange",
    "ModelLoadFailure",
    "extract",
    "pack_dump",
]
