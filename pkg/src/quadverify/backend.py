"""Rollout kernel selection.

The compiled Cython kernel is preferred; the pure-numpy fallback is used when
the extension is missing or when QUADVERIFY_BACKEND=python is set. Both expose
run_closed_loop with the same contract.
"""

import os

from . import _kernel_py

if os.environ.get("QUADVERIFY_BACKEND", "").lower() == "python":
    kernel = _kernel_py
else:
    try:
        from . import _kernel_cy as kernel
    except ImportError:
        kernel = _kernel_py

BACKEND_NAME = kernel.BACKEND_NAME


def available_backends():
    """Names of the kernels importable in this environment."""
    names = ["python"]
    try:
        from . import _kernel_cy  # noqa: F401
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_kernel(name=None):
    if name is None:
        return kernel
    if name == "python":
        return _kernel_py
    if name == "cython":
        from . import _kernel_cy
        return _kernel_cy
    raise ValueError(f"unknown backend {name!r}")
