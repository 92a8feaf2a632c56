"""Select the kernel implementation at import time.

The compiled extension is preferred; set ``QUICKTEXT_PURE_PYTHON=1`` to
force the numpy fallback (or when the extension was not built).
"""

import os

from quicktext import _pykernels

NATIVE = False
kernels = _pykernels

if os.environ.get("QUICKTEXT_PURE_PYTHON", "") in ("", "0"):
    try:
        from quicktext import _kernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _kernels
        NATIVE = True

BACKEND = "cython" if NATIVE else "python"
