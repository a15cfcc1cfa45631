"""Backend selection for the hot evaluation kernels.

Two interchangeable implementations exist: numba-jitted kernels
(``numba_impl``) and a pure-numpy fallback (``numpy_impl``).  The active
one is chosen once at import time:

* ``NESTQUAD_BACKEND=numpy`` forces the numpy path,
* ``NESTQUAD_BACKEND=numba`` requires numba (ImportError otherwise),
* unset: numba when importable, numpy otherwise.

``python -m nestquad.bench`` compares the two on the same inputs.
"""
from __future__ import annotations

import os
import warnings

# the image's TBB is too old for numba; pick the OpenMP layer up front so
# imports stay quiet (explicit user settings win)
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

_requested = os.environ.get("NESTQUAD_BACKEND", "").strip().lower()
if _requested not in ("", "numpy", "numba"):
    raise ValueError(
        f"NESTQUAD_BACKEND must be 'numpy' or 'numba', got {_requested!r}"
    )

if _requested == "numpy":
    from . import numpy_impl as _impl
elif _requested == "numba":
    from . import numba_impl as _impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba unavailable, falling back to numpy kernels")
        from . import numpy_impl as _impl


def active_backend() -> str:
    """Name of the kernel implementation in use ('numba' or 'numpy')."""
    return _impl.NAME


norm_cdf = _impl.norm_cdf
norm_icdf = _impl.norm_icdf
synthetic_inner = _impl.synthetic_inner
logit_inner = _impl.logit_inner
genz_inner = _impl.genz_inner

__all__ = [
    "active_backend",
    "norm_cdf",
    "norm_icdf",
    "synthetic_inner",
    "logit_inner",
    "genz_inner",
]
