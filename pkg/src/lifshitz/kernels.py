"""Backend selection for the inner loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``LIFSHITZ_PURE_PYTHON`` is set to a non-empty value,
the pure-Python twins are used. ``BACKEND`` names the active one.
"""
import os

from . import _purepy

if os.environ.get("LIFSHITZ_PURE_PYTHON"):
    _impl = _purepy
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _purepy

BACKEND = "python" if _impl is _purepy else "cython"

model_orbit = _impl.model_orbit
anderson_orbit = _impl.anderson_orbit
envelope_passage = _impl.envelope_passage
sturm_count = _impl.sturm_count

pure = _purepy
try:
    from . import _kernels as compiled
except ImportError:
    compiled = None
