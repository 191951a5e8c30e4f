"""Backend and thread-count selection.

Every hot loop in the package ships in two versions: a numba-compiled kernel
and a pure numpy (or plain Python, where the loop is inherently sequential)
fallback.  The active backend is chosen once per process from the
CFLAB_BACKEND environment variable:

* ``numba`` - require numba; error if it cannot be imported.
* ``numpy`` - force the fallback path even when numba is available.
* unset    - use numba when it imports cleanly, fallback otherwise.

Both backends produce identical digit sequences; the numeric kernels agree to
floating-point roundoff.  ``benchmarks/benchmark_backends.py`` times the two
paths against each other.
"""

from __future__ import annotations

import os

_VALID = ("numba", "numpy")
_BACKEND: str | None = None


def _detect() -> str:
    requested = os.environ.get("CFLAB_BACKEND", "").strip().lower()
    if requested and requested not in _VALID:
        raise ValueError(f"CFLAB_BACKEND must be one of {_VALID}, got {requested!r}")
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except Exception:
        if requested == "numba":
            raise RuntimeError("CFLAB_BACKEND=numba but numba is not importable")
        return "numpy"
    return "numba"


def backend_name() -> str:
    """Name of the active backend, resolved once per process."""
    global _BACKEND
    if _BACKEND is None:
        _BACKEND = _detect()
    return _BACKEND


def use_numba() -> bool:
    return backend_name() == "numba"


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else CFLAB_THREADS, else cpu count."""
    if threads is None:
        env = os.environ.get("CFLAB_THREADS", "").strip()
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads
