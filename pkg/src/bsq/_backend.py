"""Selects the kernel implementation at import time.

The compiled extension is preferred; set ``BSQ_PURE_PYTHON=1`` to force the
numpy fallback (used by the benchmark and the backend-equivalence tests).
"""

import os

if os.environ.get("BSQ_PURE_PYTHON", "") not in ("", "0"):
    from bsq import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from bsq import _kernels as kernels

        BACKEND = "cython"
    except ImportError:
        from bsq import _kernels_py as kernels

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
