"""Select the compiled kernels when available, else the pure-Python fallback.

Set ``DUALLOCO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("DUALLOCO_PURE_PYTHON", "").strip() not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    fwht_rows = _compiled.fwht_rows
    sdca_epoch = _compiled.sdca_epoch
    sdca_run = _compiled.sdca_run
    BACKEND = "compiled"
else:
    fwht_rows = _fallback.fwht_rows
    sdca_epoch = _fallback.sdca_epoch
    sdca_run = _fallback.sdca_run
    BACKEND = "python"
