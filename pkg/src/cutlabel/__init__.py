"""Turns single-label image datasets into spatially grounded multi-label ones.

The pipeline discovers object regions from frozen patch features with an
iterative normalized-cut, trains a lightweight region classifier on the
surviving regions, aggregates per-region predictions into image-level label
sets, and optionally reconciles systematically confusable class pairs.
"""

__version__ = "0.1.0"

from cutlabel.errors import DataError

__all__ = ["DataError", "__version__"]
