"""Kernel selection.

The compiled extension is used when it imports; ``CHEBFLAT_PURE_PYTHON=1``
forces the fallback (the benchmark and the parity tests use this switch).
"""

import os

from . import _kernels_py as python_kernels

compiled_kernels = None
if not os.environ.get("CHEBFLAT_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels

BACKEND = kernels.BACKEND
