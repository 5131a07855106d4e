"""Kernel backend selection: compiled extension if available, numpy fallback.

Set ``SG2D_KERNELS=python`` or ``SG2D_KERNELS=compiled`` to force a backend
(the latter raises if the extension is missing); default is ``auto``.
"""

import os

from . import _kernels_py

_choice = os.environ.get("SG2D_KERNELS", "auto").lower()

if _choice not in ("auto", "python", "compiled"):
    raise RuntimeError(f"SG2D_KERNELS must be auto|python|compiled, got {_choice!r}")

if _choice == "python":
    _impl = _kernels_py
else:
    try:
        from . import _fused as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _kernels_py

lattice_cos_sum = _impl.lattice_cos_sum
wave_step = _impl.wave_step
heat_step = _impl.heat_step


def backend_name() -> str:
    return _impl.BACKEND
