"""Independent reference computations used by the tests.

Nothing here imports the code under test beyond plain data containers.
"""

from __future__ import annotations

import math

import numpy as np


def lorentzian_intensity(t2, drive, gamma_cav, detuning):
    """Empty-cavity steady intensity ``t**2 a_in**2 / (gamma**2 + phi**2)``."""
    return t2 * drive ** 2 / (gamma_cav ** 2 + np.asarray(detuning) ** 2)


def kerr_cubic_coefficients(y_in, gamma_cav, phi_offset, kerr):
    """Coefficients (highest first) of ``I (gamma**2 + (phi_offset - K I)**2) - y_in``."""
    phi_offset = np.asarray(phi_offset, dtype=float)
    return (np.full_like(phi_offset, kerr ** 2), -2.0 * kerr * phi_offset,
            gamma_cav ** 2 + phi_offset ** 2, np.full_like(phi_offset, -float(y_in)))


def cubic_real_root_count(a, b, c, d):
    """3 where the cubic discriminant is positive, else 1 (vectorized)."""
    disc = 18 * a * b * c * d - 4 * b ** 3 * d + b ** 2 * c ** 2 - 4 * a * c ** 3 - 27 * a ** 2 * d ** 2
    return np.where(disc > 0, 3, 1)


def finite_difference_jacobian(fun, x, step=1e-6):
    """Central differences of a vector function, relative step."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x))
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2 * h)
    return jac


def two_level_relaxation_rate(excitation, decay=1.0, return_fraction=1.0):
    """Slow eigenvalue magnitude of a ground/excited pair with partial return.

    Ground population ``g`` is excited at rate ``excitation``; the excited
    state decays at ``decay``, a fraction ``return_fraction`` back to ``g``.
    """
    r, k, f = excitation, decay, return_fraction
    tr = -(r + k)
    det = r * k * (1 - f)
    disc = math.sqrt(tr * tr - 4 * det)
    return -(tr + disc) / 2


def wigner3j_cg_squared(j1, m1, j2, m2, j, m):
    """Squared Clebsch-Gordan coefficient from sympy's Wigner 3j symbol."""
    from sympy.physics.wigner import wigner_3j

    w = wigner_3j(j1, j2, j, m1, m2, -m)
    return float((2 * j + 1) * w ** 2)


def sinusoid_trace_arrays(period, duration, samples, offset=1.0, amplitude=0.5, phase_lag=0.0):
    t = np.linspace(0.0, duration, samples)
    x = offset + amplitude * np.sin(2 * np.pi * t / period)
    y = 0.5 + 0.1 * np.sin(2 * np.pi * (t - phase_lag) / period)
    return t, x, y
