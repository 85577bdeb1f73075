"""Dense BFGS with a backtracking Armijo line search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    iterations: int
    message: str
    n_eval: int


def bfgs(fun_grad, x0, gtol: float = 1e-6, ftol: float = 1e-10,
         max_iter: int = 1000, c1: float = 1e-4, max_backtracks: int = 60,
         noise: float = 1e-13) -> OptimizeResult:
    """Minimize ``f`` given ``fun_grad(x) -> (f, g)``.

    Stops when ``max|g| < gtol``, or when a backtracked step lowers ``f`` by
    less than ``ftol`` (stagnation). Full-length steps that make little
    progress do not stop the iteration, so a ``gtol`` exit stays reachable
    near a well-conditioned optimum. A non-finite objective marks an
    infeasible point and is handled by shrinking the step.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    n_eval = 1
    if not math.isfinite(f):
        return OptimizeResult(x, f, g, False, 0, "objective not finite at start", n_eval)
    dim = x.size
    eye = np.eye(dim)
    H = eye.copy()
    scaled = False
    for k in range(max_iter):
        gnorm = float(np.max(np.abs(g)))
        if gnorm < gtol:
            return OptimizeResult(x, f, g, True, k, "gradient tolerance reached", n_eval)
        d = -H @ g
        slope = float(g @ d)
        if not slope < 0:
            H = eye.copy()
            d = -g
            slope = float(g @ d)
        step = 1.0
        accepted = False
        for _ in range(max_backtracks):
            xn = x + step * d
            fn, gn = fun_grad(xn)
            n_eval += 1
            if not math.isfinite(fn):
                step *= 0.5
                continue
            if fn <= f + c1 * step * slope:
                accepted = True
                break
            # near the optimum f is dominated by rounding; accept steps that
            # keep f within that noise and shrink the gradient instead
            if fn <= f + noise * max(1.0, abs(f)) and np.max(np.abs(gn)) < gnorm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return OptimizeResult(x, f, g, False, k, "line search failed", n_eval)
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            if not scaled:
                H = (sy / float(yv @ yv)) * eye
                scaled = True
            rho = 1.0 / sy
            Hy = H @ yv
            H = (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                 + (rho * rho * float(yv @ Hy) + rho) * np.outer(s, s))
        df = f - fn
        x, f, g = xn, fn, gn
        if df < ftol and step < 1.0:
            return OptimizeResult(x, f, g, True, k + 1, "objective change below tolerance", n_eval)
    return OptimizeResult(x, f, g, False, max_iter, "iteration limit reached", n_eval)
