"""Kernel backend selection.

The hot lattice sweeps exist twice: a numba ``@njit`` version and a
pure-numpy version with identical contracts.  ``SHARPWAVE_BACKEND=numpy``
(or ``numba``) forces one; the default takes numba when it imports.
``SHARPWAVE_THREADS`` caps numba's thread pool when set.
"""

import os

_choice = os.environ.get("SHARPWAVE_BACKEND", "auto").strip().lower()

if _choice == "numpy":
    from . import _kernels_numpy as kernels
elif _choice == "numba":
    from . import _kernels_numba as kernels
else:
    try:
        from . import _kernels_numba as kernels
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        from . import _kernels_numpy as kernels

if kernels.BACKEND == "numba":
    _threads = os.environ.get("SHARPWAVE_THREADS", "").strip()
    if _threads:
        import numba

        numba.set_num_threads(max(1, int(_threads)))


def backend_name() -> str:
    return kernels.BACKEND
