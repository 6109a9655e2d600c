"""Special functions and smooth cutoffs.

Bessel J0..J3, modified Bessel K0..K2, the upper incomplete gamma function,
and the two mollified cutoffs used to shape the radiation data and the
far-field corrections.  Scalar calls go through the (possibly jitted)
cores; array calls through the vectorized twins.
"""

from dataclasses import dataclass

import numpy as np

from . import _sf_core as _core
from . import _sf_numpy as _vec

__all__ = [
    "bessel_j", "bessel_k", "bessel_k1_minus_recip", "upper_incomplete_gamma",
    "CutoffSpec", "CHI_LE_QUARTER", "CHI_GE_ONE", "cutoff",
    "chi_le_quarter", "chi_ge_one", "log_symbol",
]


def bessel_j(n: int, x):
    """Bessel function of the first kind, order n in 0..3."""
    if not 0 <= n <= 3:
        raise ValueError(f"order {n} outside 0..3")
    if np.ndim(x) == 0:
        if x < 0:
            raise ValueError("negative argument")
        return _core.bessel_j_scalar(n, float(x))
    x = np.asarray(x, dtype=float)
    if (x < 0).any():
        raise ValueError("negative argument")
    return _vec.bessel_j_array(n, x)


def bessel_k(n: int, x):
    """Modified Bessel function of the second kind, order n in 0..2."""
    if not 0 <= n <= 2:
        raise ValueError(f"order {n} outside 0..2")
    if np.ndim(x) == 0:
        if x <= 0:
            raise ValueError("argument must be positive")
        return _core.bessel_k_scalar(n, float(x))
    x = np.asarray(x, dtype=float)
    if (x <= 0).any():
        raise ValueError("argument must be positive")
    return _vec.bessel_k_array(n, x)


def bessel_k1_minus_recip(x):
    """K_1(x) - 1/x without cancellation; the small-argument remainder."""
    if np.ndim(x) == 0:
        return _core.bessel_k1_minus_recip(float(x))
    return _vec.bessel_k1_minus_recip_array(np.asarray(x, dtype=float))


def upper_incomplete_gamma(s: float, x):
    """Gamma(s, x) = integral(x..inf) t^(s-1) e^(-t) dt for x > 0, real s."""
    if np.ndim(x) == 0:
        if x <= 0:
            raise ValueError("x must be positive")
        return _core.upper_gamma_scalar(float(s), float(x))
    x = np.asarray(x, dtype=float)
    if (x <= 0).any():
        raise ValueError("x must be positive")
    return np.array([_core.upper_gamma_scalar(float(s), float(v)) for v in x])


@dataclass(frozen=True)
class CutoffSpec:
    """Plateau/support description of a mollified cutoff."""

    kind: str           # "low" | "high"
    inner: float        # plateau edge
    outer: float        # support edge

    def __post_init__(self):
        if self.kind not in ("low", "high"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")


CHI_LE_QUARTER = CutoffSpec("low", 0.125, 0.25)
CHI_GE_ONE = CutoffSpec("high", 2.0, 1.0)


def cutoff(spec: CutoffSpec, x, deriv: int = 0):
    """Evaluate a cutoff (or its first/second derivative) at x >= 0."""
    if deriv not in (0, 1, 2):
        raise ValueError("deriv must be 0, 1 or 2")
    if spec.kind == "low":
        if np.ndim(x) == 0:
            return _core.chi_low_scalar(float(x), deriv)
        return _vec.chi_low_array(np.asarray(x, dtype=float), deriv)
    if np.ndim(x) == 0:
        return _core.chi_high_scalar(float(x), deriv)
    return _vec.chi_high_array(np.asarray(x, dtype=float), deriv)


def chi_le_quarter(x, deriv: int = 0):
    return cutoff(CHI_LE_QUARTER, x, deriv)


def chi_ge_one(x, deriv: int = 0):
    return cutoff(CHI_GE_ONE, x, deriv)


def log_symbol(xi, b: float):
    """Frequency weight of the radiation data: log^(1-b)(1/xi) (loglog at b=1)."""
    if np.ndim(xi) == 0:
        return _core.log_symbol(float(xi), float(b))
    return _vec.log_symbol_array(np.asarray(xi, dtype=float), float(b))
