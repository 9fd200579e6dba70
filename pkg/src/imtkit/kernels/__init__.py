"""Kernel backend selection.

The compiled core (``imtkit.kernels._ext``) is preferred when importable;
``IMTKIT_BACKEND=python`` forces the numpy fallback and
``IMTKIT_BACKEND=ext`` makes a missing extension a hard error.
"""

import os

from . import pyref

_choice = os.environ.get("IMTKIT_BACKEND", "auto").lower()
if _choice not in ("auto", "ext", "python"):
    raise ValueError(f"IMTKIT_BACKEND must be auto|ext|python, got {_choice!r}")

if _choice in ("auto", "ext"):
    try:
        from . import _ext as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "ext":
            raise
        _impl = pyref
else:
    _impl = pyref

BACKEND = _impl.BACKEND_NAME

softmax = _impl.softmax
log_softmax = _impl.log_softmax
sigmoid = _impl.sigmoid
affine_fwd = _impl.affine_fwd
affine_bwd = _impl.affine_bwd
tanh_fwd = _impl.tanh_fwd
tanh_bwd = _impl.tanh_bwd
gru_fwd = _impl.gru_fwd
gru_bwd = _impl.gru_bwd
attn_fwd = _impl.attn_fwd
attn_bwd = _impl.attn_bwd
softmax_xent_fwd = _impl.softmax_xent_fwd
softmax_xent_bwd = _impl.softmax_xent_bwd


def available_backends():
    """Names of importable kernel backends (for tests and the benchmark)."""
    names = ["python"]
    try:
        from . import _ext  # noqa: F401

        names.append("ext")
    except ImportError:
        pass
    return names


def get_impl(name):
    if name == "python":
        return pyref
    if name == "ext":
        from . import _ext

        return _ext
    raise ValueError(f"unknown backend {name!r}")
