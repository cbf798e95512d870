"""Selection of the hot-loop implementation.

Two interchangeable modules provide the per-step kernels (pair sums, stress
evaluation, ray casting): a numba-jitted one and a pure-numpy one.  The
``TLSPH_BACKEND`` environment variable picks one explicitly ("numba" or
"numpy"); when unset, numba is used if it imports and numpy otherwise.

Both backends accumulate neighbor contributions in the same CSR order, so a
given backend is bitwise reproducible from run to run.
"""

import importlib
import os
import warnings

_ENV_VAR = "TLSPH_BACKEND"
_cache = {}


def numba_available():
    try:
        importlib.import_module("numba")
    except ImportError:
        return False
    return True


def default_backend_name():
    forced = os.environ.get(_ENV_VAR, "").strip().lower()
    if forced in ("numba", "numpy"):
        return forced
    if forced:
        raise ValueError(
            f"unknown {_ENV_VAR} value {forced!r}; expected 'numba' or 'numpy'"
        )
    return "numba" if numba_available() else "numpy"


def get_ops(name=None):
    """Return the kernel module for the requested (or default) backend."""
    if name is None:
        name = default_backend_name()
    name = name.lower()
    if name in _cache:
        return _cache[name]
    if name == "numba":
        if not numba_available():
            raise ImportError(
                "numba backend requested but numba is not installed; "
                f"install numba or set {_ENV_VAR}=numpy"
            )
        mod = importlib.import_module("tlsph._impl_numba")
    elif name == "numpy":
        mod = importlib.import_module("tlsph._impl_numpy")
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    _cache[name] = mod
    return mod


def set_threads(n):
    """Limit the numba thread pool; a no-op for the numpy backend."""
    if n is None:
        return
    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    if numba_available():
        import numba

        try:
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
        except ValueError as exc:  # pragma: no cover - platform dependent
            warnings.warn(f"could not set numba thread count: {exc}")
