"""Kernel backend selection.

The compiled Cython kernel is preferred when the extension built; the
pure-numpy fallback is always available.  ``KRONO_KERNEL=python`` or
``KRONO_KERNEL=compiled`` forces a backend (the latter raises if the
extension is missing), which the benchmark and the tests use to compare
the two implementations.
"""

import os

from . import _modes as _python_backend

try:
    from . import _modes_cy as _compiled_backend
except ImportError:
    _compiled_backend = None


def _select():
    forced = os.environ.get("KRONO_KERNEL", "auto").lower()
    if forced == "python":
        return _python_backend, "python"
    if forced == "compiled":
        if _compiled_backend is None:
            raise ImportError("KRONO_KERNEL=compiled but the extension is not built")
        return _compiled_backend, "compiled"
    if _compiled_backend is not None:
        return _compiled_backend, "compiled"
    return _python_backend, "python"


_impl, BACKEND = _select()

apply_modes = _impl.apply_modes
apply_modes_python = _python_backend.apply_modes
apply_modes_compiled = _compiled_backend.apply_modes if _compiled_backend else None
