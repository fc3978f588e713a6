"""Aspect and opinion term extraction, opinion sentiment and aspect-opinion
relations with small numpy neural networks."""

from .corpus import Review, load_corpus, save_corpus
from .errors import BundleError, DataError, NumericFault, RelsentError, ShapeError
from .iob2 import Span
from .bundle import load_bundle, save_bundle
from .pipeline import cross_validate, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "Review", "Span", "load_corpus", "save_corpus", "load_bundle", "save_bundle",
    "run_pipeline", "cross_validate", "RelsentError", "DataError", "BundleError",
    "ShapeError", "NumericFault", "__version__",
]
