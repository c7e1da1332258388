"""Kernel selection: compiled extension when available, pure Python otherwise.

Set CTCWFST_PURE_PYTHON=1 to force the fallback. Both kernels produce
bit-identical results; the compiled one releases the GIL, so batch decoding
can scale across threads.
"""

from __future__ import annotations

import os

from . import _pykernel

if os.environ.get("CTCWFST_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernel
    KERNEL_NAME = "python"
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]

        KERNEL_NAME = "compiled"
    except ImportError:
        _impl = _pykernel
        KERNEL_NAME = "python"

OK = _pykernel.OK
ERR_EPS_ITERS = _pykernel.ERR_EPS_ITERS
ERR_NO_SURVIVORS = _pykernel.ERR_NO_SURVIVORS

advance_chunk = _impl.advance_chunk
python_advance_chunk = _pykernel.advance_chunk


def compiled_available() -> bool:
    try:
        from . import _kernel  # noqa: F401
    except ImportError:
        return False
    return True
