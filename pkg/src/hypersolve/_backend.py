"""Select the sweep-kernel backend at import time.

The compiled extension is preferred when it imported cleanly; otherwise the
numpy fallback is used.  ``HYPERSOLVE_KERNELS=python`` or ``=c`` forces a
backend (``=c`` raises if the extension is unavailable, instead of silently
running slow).
"""
import os

from . import _kernels_py

_requested = os.environ.get("HYPERSOLVE_KERNELS", "auto").lower()

if _requested == "python":
    _impl = _kernels_py
    BACKEND = "python"
elif _requested in ("auto", "c"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise
        _impl = _kernels_py
        BACKEND = "python"
else:
    raise ValueError(
        f"HYPERSOLVE_KERNELS must be 'auto', 'c' or 'python', got {_requested!r}"
    )

axis_sweep_convex = _impl.axis_sweep_convex
axis_sweep_delta = _impl.axis_sweep_delta


def available_backends():
    """Names of the importable backends (used by the benchmark)."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "c")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the kernel module for an explicit backend name."""
    if name == "python":
        return _kernels_py
    if name == "c":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
