"""Dormand-Prince 5(4) integrator with PI step control and dense output.

Written here rather than taken from :func:`scipy.integrate.solve_ivp` so that
a projection hook can run after every accepted step (the orientation is kept
inside [0, 1]) and so that failures carry the time at which they happened.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from coldcavity.errors import NonFiniteStateError, StepSizeUnderflowError

__all__ = ["Solution", "dopri5"]

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth-order minus embedded fourth-order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Shampine's fourth-order continuous extension: rows are stages, columns theta**1..4
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
# PI controller exponents (Hairer & Wanner, DOPRI5 defaults)
BETA_PI = 0.04
ALPHA_PI = 0.2 - 0.75 * BETA_PI


class Solution:
    """Samples of an integration on the requested grid plus step statistics."""

    def __init__(self, t, y, n_steps, n_rejected, n_evals):
        self.t = t
        self.y = y
        self.n_steps = n_steps
        self.n_rejected = n_rejected
        self.n_evals = n_evals

    def __repr__(self):
        return (f"Solution(samples={len(self.t)}, steps={self.n_steps}, "
                f"rejected={self.n_rejected})")


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return math.sqrt(float(np.mean((err / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, rtol, atol):
    # Hairer, Norsett & Wanner, Sec. II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri5(fun: Callable[[float, np.ndarray], np.ndarray], t0: float, y0,
           t_eval, rtol: float = 1e-8, atol: float | None = None,
           post_step: Callable[[np.ndarray], np.ndarray] | None = None,
           max_step: float = math.inf, first_step: float | None = None) -> Solution:
    """Integrate ``y' = fun(t, y)`` from ``t0`` and sample at ``t_eval``.

    Parameters
    ----------
    fun : callable
        Right-hand side returning an array shaped like ``y``.
    t0 : float
        Initial time, must not exceed ``t_eval[0]``.
    y0 : array_like
        Initial state (real).
    t_eval : array_like
        Nondecreasing output times; the integration stops at ``t_eval[-1]``.
    rtol, atol : float
        Local error tolerances; ``atol`` defaults to ``rtol``.
    post_step : callable, optional
        Projection applied to every accepted step (for example clipping a
        variable into its invariant interval). Must be idempotent.
    max_step : float
        Upper bound on the step size.

    Returns
    -------
    Solution
        ``y`` has shape ``(len(t_eval), len(y0))``.
    """
    if atol is None:
        atol = rtol
    t_eval = np.asarray(t_eval, dtype=float)
    y = np.array(y0, dtype=float)
    out = np.empty((len(t_eval), y.size))
    if len(t_eval) == 0:
        return Solution(t_eval, out, 0, 0, 0)
    if t_eval[0] < t0 or np.any(np.diff(t_eval) < 0):
        raise ValueError("t_eval must be nondecreasing and start at or after t0")
    t_end = float(t_eval[-1])

    t = float(t0)
    k = np.empty((7, y.size))
    k[0] = fun(t, y)
    n_evals = 1
    if not np.all(np.isfinite(k[0])):
        raise NonFiniteStateError(t)

    i_out = 0
    while i_out < len(t_eval) and t_eval[i_out] == t:
        out[i_out] = y
        i_out += 1

    if first_step is None:
        h = _initial_step(fun, t, y, k[0], rtol, atol) if t_end > t else 0.0
        n_evals += 1
    else:
        h = first_step
    h = min(h, max_step)
    err_old = 1e-4
    n_steps = n_rejected = 0

    while i_out < len(t_eval):
        min_step = 16 * np.spacing(max(abs(t), 1.0))
        if h < min_step:
            raise StepSizeUnderflowError(t, h)
        last = t + h >= t_end
        if last:
            h = t_end - t

        for s in range(1, 7):
            k[s] = fun(t + C[s] * h, y + h * (A[s] @ k[:s]))
        n_evals += 6
        y_new = y + h * (B @ k)
        err = _error_norm(h * (E @ k), y, y_new, rtol, atol)

        if not math.isfinite(err):
            if not np.all(np.isfinite(y_new)) and h <= min_step * 2:
                raise NonFiniteStateError(t)
            h *= FAC_MIN
            n_rejected += 1
            continue

        if err <= 1.0:
            t_new = t_end if last else t + h
            while i_out < len(t_eval) and t_eval[i_out] <= t_new:
                theta = (t_eval[i_out] - t) / h
                powers = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
                sample = y + h * ((k.T @ P) @ powers)
                out[i_out] = sample if post_step is None else post_step(sample)
                i_out += 1
            fsal = k[6].copy()
            if post_step is not None:
                projected = post_step(y_new)
                if not np.array_equal(projected, y_new):
                    y_new = projected
                    fsal = fun(t_new, y_new)
                    n_evals += 1
                    if i_out > 0 and t_eval[i_out - 1] == t_new:
                        out[i_out - 1] = y_new
            if not np.all(np.isfinite(y_new)):
                raise NonFiniteStateError(t_new)
            t, y = t_new, y_new
            k[0] = fsal
            n_steps += 1
            err = max(err, 1e-10)
            fac = SAFETY * err ** -ALPHA_PI * err_old ** BETA_PI
            h = min(h * min(FAC_MAX, max(FAC_MIN, fac)), max_step)
            err_old = err
        else:
            n_rejected += 1
            h *= max(FAC_MIN, SAFETY * err ** -ALPHA_PI)

    return Solution(t_eval, out, n_steps, n_rejected, n_evals)
