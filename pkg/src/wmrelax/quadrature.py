"""Panel quadrature utilities shared by every evaluator in the package.

Everything here is plain numpy; heavy integrand reductions live in `_hot`.
The basic object is a panel decomposition: an increasing array of
breakpoints plus a fixed Gauss-Legendre rule applied on each panel.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes/weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x.copy(), w.copy()


def panel_nodes(breaks: np.ndarray, n: int = 8):
    """Flattened Gauss-Legendre nodes/weights for the given panel edges."""
    gx, gw = gauss_legendre(n)
    a = breaks[:-1]
    half = 0.5 * (breaks[1:] - a)
    nodes = (a[:, None] + half[:, None] * (1.0 + gx[None, :])).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def integrate_panels(f, breaks, n=8):
    x, w = panel_nodes(np.asarray(breaks, dtype=float), n)
    return float(np.dot(w, f(x)))


def geom_breaks(a: float, b: float, per_decade: int = 10) -> np.ndarray:
    """Geometric panel edges covering [a, b], a > 0."""
    if not (0.0 < a < b):
        raise ValueError("need 0 < a < b")
    m = max(2, int(np.ceil(np.log10(b / a) * per_decade)) + 1)
    return np.geomspace(a, b, m)


def halfline_breaks(t: float, w_min: float, w_max: float,
                    per_decade: int = 12) -> np.ndarray:
    """Edges in w = s - t for integrals over s in (t, t + w_max]."""
    br = geom_breaks(w_min, w_max, per_decade)
    return np.concatenate(([0.0], br))


def osc_breaks(a: float, b: float, period: float, per_period: int = 1,
               per_decade: int = 12) -> np.ndarray:
    """Panel edges on [a, b] resolving an oscillation of the given period.

    Uniform spacing period/per_period once panels would otherwise exceed it;
    geometric refinement toward a (useful for integrands with log structure
    at 0).  a may be 0.
    """
    hu = period / per_period
    lo = max(a, 1e-3 * hu)
    edges = [a] if a < lo else []
    g = lo
    ratio = 10.0 ** (1.0 / per_decade)
    while g * (ratio - 1.0) < hu and g < b:
        edges.append(g)
        g *= ratio
    start = min(g, b)
    m = int(np.ceil((b - start) / hu))
    if m > 0:
        edges.extend(np.linspace(start, b, m + 1))
    else:
        edges.append(b)
    out = np.array(edges, dtype=float)
    return np.unique(out)


def periodic_trapezoid(n: int):
    """Nodes/weights for one full period of a periodic integrand on [0, 2pi)."""
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    w = np.full(n, 2.0 * np.pi / n)
    return th, w


@dataclass
class QuadRecord:
    """Bookkeeping for one improper-integral evaluation."""

    value: float
    err_est: float = np.nan
    truncation: float = np.nan
    detail: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


def richardson_pair(coarse: float, fine: float, order: int = 4):
    """Error estimate from two resolutions of an order-p rule."""
    err = abs(fine - coarse) / (2 ** order - 1)
    return fine, err
