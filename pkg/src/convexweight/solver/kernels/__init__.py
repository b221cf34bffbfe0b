"""Per-iteration hot kernels of the interior-point solver.

The compiled Cython implementation is used when available; setting
``CONVEXWEIGHT_PURE_PYTHON=1`` (or a failed build) selects the numpy
fallback.  ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

from . import _numpy_impl

if os.environ.get("CONVEXWEIGHT_PURE_PYTHON"):
    _impl = _numpy_impl
    HAVE_COMPILED = False
else:
    try:
        from . import _cykernels as _impl  # type: ignore[no-redef]

        HAVE_COMPILED = True
    except ImportError:
        _impl = _numpy_impl
        HAVE_COMPILED = False

gram_conjugated = _impl.gram_conjugated
weighted_sum = _impl.weighted_sum
inner_products = _impl.inner_products

IMPLEMENTATION = "cython" if HAVE_COMPILED else "numpy"

__all__ = [
    "gram_conjugated",
    "weighted_sum",
    "inner_products",
    "HAVE_COMPILED",
    "IMPLEMENTATION",
]
