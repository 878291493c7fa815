"""Backend selection for the batched geometry kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernels`` is used.  Setting the environment
variable ``HYPERMOD_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("HYPERMOD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = active.BACKEND

euclid_dist = active.euclid_dist
euclid_combine = active.euclid_combine
euclid_ray = active.euclid_ray
hp_dist = active.hp_dist
hp_combine = active.hp_combine
hp_ray = active.hp_ray
star_dist = active.star_dist
star_combine = active.star_combine
star_ray = active.star_ray


def get_backend(name):
    """Return the kernel module called ``name`` ("python" or "cython")."""
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not available")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
