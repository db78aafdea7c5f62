"""Embedding extraction bridge.

Runs pretrained audio models over standardized WAV files and writes one
FVEC v1 feature file per sound, updating the dataset manifest's feature
set list. The classifier package consumes the emitted files purely
through the documented FVEC and manifest formats.
"""

__version__ = "0.1.0"

from bsdextract.specs import EXTRACTOR_SPECS, ExtractorSpec
from bsdextract.backends import (
    MissingModelAssets,
    available_backends,
    register_backend,
    resolve_backend,
)
from bsdextract.extract import DimsMismatch, ExtractError, extract_directory

__all__ = [
    "__version__",
    "ExtractorSpec",
    "EXTRACTOR_SPECS",
    "MissingModelAssets",
    "register_backend",
    "resolve_backend",
    "available_backends",
    "extract_directory",
    "ExtractError",
    "DimsMismatch",
]
