"""Backend selection for the per-round kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. Setting ``GTFT_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("GTFT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def available_backends():
    """Map backend name -> module for every importable implementation."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


local_gradients = _impl.local_gradients
mix = _impl.mix
gt_round = _impl.gt_round
dgd_round = _impl.dgd_round
objective_and_gradient = _impl.objective_and_gradient
metrics_row = _impl.metrics_row
