"""Backend selection for the hot numeric kernels.

Every expensive inner loop in this package exists twice: a scalar-loop
version compiled with numba's @njit, and a vectorized pure-numpy version.
The environment variable WMRELAX_BACKEND picks the path:

    WMRELAX_BACKEND=numba   force the jit path (error if numba missing)
    WMRELAX_BACKEND=numpy   force the pure-numpy fallback
    unset                   numba when importable, else numpy

`benchmarks/bench_backends.py` times the two paths against each other.
"""

import os

_env = os.environ.get("WMRELAX_BACKEND", "").strip().lower()

if _env not in ("", "numba", "numpy"):
    raise ValueError(
        f"WMRELAX_BACKEND={_env!r} not understood (use 'numba' or 'numpy')"
    )

if _env == "numpy":
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _env != "numpy"


def maybe_njit(*args, **kwargs):
    """@njit(cache=True, ...) when the jit path is active, identity otherwise."""
    if USE_NUMBA:
        import numba

        kwargs.setdefault("cache", True)
        kwargs.setdefault("fastmath", False)
        return numba.njit(*args, **kwargs)

    if args and callable(args[0]):
        return args[0]

    def deco(f):
        return f

    return deco


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
