"""Kernel selection: compiled extension when importable, numpy otherwise.

Set SYNTHCAP_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("SYNTHCAP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

sequence_loglik = _impl.sequence_loglik
batch_tv = _impl.batch_tv
