"""LSTM kernel backend selection.

The compiled extension is preferred; the numpy implementation is the
fallback and the reference.  Set PYCC_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import py_kernels

if os.environ.get("PYCC_PURE_PYTHON", "") not in ("", "0"):
    _impl = py_kernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = py_kernels

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
BACKEND = _impl.BACKEND


def get_backend(name: str):
    """Explicit backend lookup, used by tests and the benchmark."""
    if name == "python":
        return py_kernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend: {name}")
