"""Backend selection: compiled extension when available, numpy otherwise.

The active backend is chosen once at import time. Set NONLOCAL_LWR_BACKEND
to "python" or "cython" to force a choice (forcing "cython" raises if the
extension was not built).
"""

from __future__ import annotations

import os

from . import _kernels_py


def _load_cython():
    from . import _speedups  # noqa: PLC0415

    return _speedups


def available_backends() -> list[str]:
    names = ["python"]
    try:
        _load_cython()
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_kernels(name: str | None = None):
    """Return the kernel module for `name` (or the default choice)."""
    if name is None:
        name = os.environ.get("NONLOCAL_LWR_BACKEND", "")
    if name == "python":
        return _kernels_py
    if name == "cython":
        return _load_cython()
    if name:
        raise ValueError(f"unknown backend {name!r}; expected 'python' or 'cython'")
    try:
        return _load_cython()
    except ImportError:
        return _kernels_py


kernels = get_kernels()
BACKEND = kernels.NAME
