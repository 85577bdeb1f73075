"""Numerical moment integrals used to cross-check the closed forms.

Integration runs over ``t = log(y)``, which turns the polynomial tails of
both families into exponential ones. The range is split at a ladder of
model quantiles so every piece contains a manageable part of the mass.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

_LADDER = (1e-9, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1 - 1e-4, 1 - 1e-9)


def moment_by_quadrature(dist, r: float = 0.0, lower: float | None = None,
                         epsrel: float = 1e-11) -> float:
    """Adaptive-quadrature value of ``E[Y**r 1{Y > lower}]``.

    ``dist`` is any object with scalar ``logpdf`` and ``ppf`` methods.
    """
    t_lo = -math.inf if lower is None else math.log(lower)
    knots = [float(math.log(dist.ppf(u))) for u in _LADDER]
    knots = [t for t in knots if t > t_lo]
    edges = [t_lo, *knots, math.inf]

    def integrand(t):
        if t > 700.0 or t < -700.0:
            return 0.0
        log_val = r * t + t + float(dist.logpdf(math.exp(t)))
        return math.exp(log_val) if log_val > -745.0 else 0.0

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, _ = quad(integrand, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
        total += val
    return total


def density_mass(dist, lower: float | None = None) -> float:
    """Probability mass above ``lower`` by quadrature."""
    return moment_by_quadrature(dist, 0.0, lower)


def cell_probabilities(dist, y: np.ndarray) -> np.ndarray:
    """Quadrature masses of consecutive cells ``(y[i], y[i+1])``; used to
    check a CDF against its density."""
    y = np.asarray(y, dtype=float)
    out = np.empty(len(y) - 1)
    for i in range(len(y) - 1):
        out[i], _ = quad(lambda v: float(dist.pdf(v)), y[i], y[i + 1],
                         epsabs=0.0, epsrel=1e-12, limit=200)
    return out
