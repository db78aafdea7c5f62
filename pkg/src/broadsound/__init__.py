"""Broad sound classification toolkit.

Ingests precomputed per-sound feature matrices, builds fixed-length
representations (min-max scaling, PCA, temporal mean), trains and
grid-searches exact k-NN classifiers over a two-level sound taxonomy,
and produces hierarchical evaluation reports plus a human review
service for error characterization.
"""

__version__ = "0.1.0"

from broadsound.errors import (
    AudioError,
    BroadsoundError,
    DataError,
    StoreCorruptError,
    TaxonomyError,
)

__all__ = [
    "__version__",
    "BroadsoundError",
    "TaxonomyError",
    "DataError",
    "AudioError",
    "StoreCorruptError",
]
