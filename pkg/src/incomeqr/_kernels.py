"""Log-likelihood and score kernels for the two regression families.

Each kernel returns ``(nll, d_gamma, d_a, d_shape)`` where ``nll`` is the
negative log-likelihood summed over observations, ``d_gamma[i]`` is its
derivative with respect to ``gamma[i]``, and ``d_a``/``d_shape`` are the
derivatives with respect to the two shape parameters. ``lc`` is the log of
the family constant (``c_q`` or ``e_p``) and ``dlc`` its derivative with
respect to the second shape.
"""

import math

import numpy as np

from incomeqr._accel import njit, select


@njit
def _softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


@njit
def qsm_nll_grad_loop(y, gamma, a, q, lc, dlc):
    n = y.shape[0]
    dg = np.empty(n)
    const = math.log(a) + math.log(q) + lc
    nll = 0.0
    da = 0.0
    dq = 0.0
    for i in range(n):
        t = math.log(y[i] / gamma[i])
        lw = lc + a * t
        sp = _softplus(lw)
        sig = _sigmoid(lw)
        nll -= const + (a - 1.0) * t - math.log(gamma[i]) - (1.0 + q) * sp
        dg[i] = -a * ((1.0 + q) * sig - 1.0) / gamma[i]
        da -= 1.0 / a + t - (1.0 + q) * sig * t
        dq -= 1.0 / q + dlc * (1.0 - (1.0 + q) * sig) - sp
    return nll, dg, da, dq


def qsm_nll_grad_vec(y, gamma, a, q, lc, dlc):
    t = np.log(y / gamma)
    lw = lc + a * t
    sp = np.logaddexp(0.0, lw)
    sig = np.exp(lw - sp)
    n = y.shape[0]
    nll = -(n * (math.log(a) + math.log(q) + lc) + np.sum((a - 1.0) * t - np.log(gamma) - (1.0 + q) * sp))
    dg = -a * ((1.0 + q) * sig - 1.0) / gamma
    da = -(n / a + np.sum(t - (1.0 + q) * sig * t))
    dq = -(n / q + np.sum(dlc * (1.0 - (1.0 + q) * sig) - sp))
    return float(nll), dg, float(da), float(dq)


@njit
def qda_nll_grad_loop(y, gamma, a, p, le, dle):
    n = y.shape[0]
    dg = np.empty(n)
    const = math.log(a) + math.log(p) - p * le
    nll = 0.0
    da = 0.0
    dp = 0.0
    for i in range(n):
        t = math.log(y[i] / gamma[i])
        lw = a * t - le
        sp = _softplus(lw)
        sig = _sigmoid(lw)
        nll -= const + (a * p - 1.0) * t - math.log(gamma[i]) - (1.0 + p) * sp
        dg[i] = -(-a * p + (1.0 + p) * a * sig) / gamma[i]
        da -= 1.0 / a + p * t - (1.0 + p) * sig * t
        dp -= 1.0 / p + a * t - le - sp + dle * (-p + (1.0 + p) * sig)
    return nll, dg, da, dp


def qda_nll_grad_vec(y, gamma, a, p, le, dle):
    t = np.log(y / gamma)
    lw = a * t - le
    sp = np.logaddexp(0.0, lw)
    sig = np.exp(lw - sp)
    n = y.shape[0]
    nll = -(n * (math.log(a) + math.log(p) - p * le)
            + np.sum((a * p - 1.0) * t - np.log(gamma) - (1.0 + p) * sp))
    dg = -(-a * p + (1.0 + p) * a * sig) / gamma
    da = -(n / a + np.sum(p * t - (1.0 + p) * sig * t))
    dp = -(n / p + np.sum(a * t - le - sp + dle * (-p + (1.0 + p) * sig)))
    return float(nll), dg, float(da), float(dp)


qsm_nll_grad = select(qsm_nll_grad_loop, qsm_nll_grad_vec)
qda_nll_grad = select(qda_nll_grad_loop, qda_nll_grad_vec)
