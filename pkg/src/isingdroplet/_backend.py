"""Select the compiled kernels when available, else the pure-Python twins.

Set ``ISINGDROPLET_PURE=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("ISINGDROPLET_PURE", "") not in ("", "0"):
    _impl = _fallback
    COMPILED = False
else:
    try:
        from . import _kernels as _impl

        COMPILED = True
    except ImportError:  # extension not built
        _impl = _fallback
        COMPILED = False

kmc_run = _impl.kmc_run
graphical_run = _impl.graphical_run
uniform = _impl.uniform

__all__ = ["COMPILED", "kmc_run", "graphical_run", "uniform", "_fallback"]
