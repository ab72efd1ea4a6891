"""Graph-association multi-object tracking: core operations.

The heavy lifting lives in the C++ extension ``sinkmatch._core``; this
package re-exports its public surface.
"""

from ._core import (
    DataError,
    InternalError,
    __version__,
    cosine,
    gradient_check,
    iou,
    max_weight_matching,
    sinkhorn,
)

__all__ = [
    "DataError",
    "InternalError",
    "__version__",
    "cosine",
    "gradient_check",
    "iou",
    "max_weight_matching",
    "sinkhorn",
]
