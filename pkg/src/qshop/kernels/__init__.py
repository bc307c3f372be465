"""Gate-kernel backend selection.

The compiled Cython extension is used when available; otherwise the
numpy fallback. Set QSHOP_KERNELS=py (or =c) to force a backend.
"""
import os

_choice = os.environ.get("QSHOP_KERNELS", "auto")

if _choice == "py":
    from . import _fallback as _impl
elif _choice == "c":
    from . import _core as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _fallback as _impl

BACKEND = _impl.BACKEND
apply_1q = _impl.apply_1q
apply_cnot = _impl.apply_cnot
prob_one = _impl.prob_one
collapse = _impl.collapse
