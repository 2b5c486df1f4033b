"""In-memory adapter over the flashvid compression pipeline.

Four blocking operations on host arrays: ``compress``, ``dyseg_partition``,
``budget_align``, and ``dpcknn_reduce``. Inputs are ingested zero-copy via
the buffer protocol; wrong dtypes raise instead of being cast silently so
byte-level parity with the CLI is preserved. Calls keep no hidden state —
repeated calls with the same arguments return identical results.
"""

from .core import (
    AdapterResult,
    budget_align,
    compress,
    dpcknn_reduce,
    dyseg_partition,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterResult",
    "budget_align",
    "compress",
    "dpcknn_reduce",
    "dyseg_partition",
    "__version__",
]
