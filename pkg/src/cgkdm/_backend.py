"""Select the compiled kernels when available.

Set ``CGKDM_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _pykernels

BACKEND = "python"
pair_excess_sum = _pykernels.pair_excess_sum

if os.environ.get("CGKDM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        pair_excess_sum = _ckernels.pair_excess_sum
