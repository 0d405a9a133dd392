"""Spectral window of the one-loop trajectory and frequency-response kernels.

The windowed cosine arch w(t) = cos(omega0*t) - 1 on [0, tau] has transform
W(omega) = integral w(t) exp(i*omega*t) dt whose squared magnitude factorises
as |W(omega0*xi)|^2 = (4/omega0^2) * f_aa(xi) with the dimensionless kernel

    f_aa(xi) = sin^2(pi*xi) / (xi^2 * (xi^2 - 1)^2),

even in xi, with removable singularities f_aa(0) = pi^2 and f_aa(+-1) =
pi^2/4.  Every dephasing integral in this package is a PSD weighted by this
kernel; its full-line integral is 3*pi^2/2.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureError
from .model import axis_cosine

# Switch to 2nd-order series this close to a removable singularity; beyond it
# the direct formula keeps ~1e-12 relative accuracy despite cancellation.
_SERIES_HALFWIDTH = 1e-4

PI2 = math.pi**2
KERNEL_INTEGRAL_EXACT = 1.5 * PI2  # value of the full-line kernel integral


def _f_aa_series_origin(xi):
    # f(xi) = pi^2 * (1 + (2 - pi^2/3) xi^2 + O(xi^4))
    return PI2 * (1.0 + (2.0 - PI2 / 3.0) * xi**2)


def _f_aa_series_unit(u):
    # f(1+u) = (pi^2/4) * (1 - 3u + (23/4 - pi^2/3) u^2 + O(u^3))
    return 0.25 * PI2 * (1.0 - 3.0 * u + (5.75 - PI2 / 3.0) * u**2)


def f_aa(xi):
    """Acceleration-response kernel sin^2(pi*xi)/(xi^2*(xi^2-1)^2).

    Total function: the removable singularities at xi = 0 and xi = +-1 are
    replaced by their series limits.  Accepts scalar or array input.
    """
    xi = np.asarray(xi, dtype=float)
    scalar = xi.ndim == 0
    xi = np.atleast_1d(xi)
    out = np.empty_like(xi)

    a = np.abs(xi)
    near0 = a < _SERIES_HALFWIDTH
    near1 = np.abs(a - 1.0) < _SERIES_HALFWIDTH
    regular = ~(near0 | near1)

    if np.any(regular):
        x = xi[regular]
        out[regular] = np.sin(np.pi * x) ** 2 / (x**2 * (x**2 - 1.0) ** 2)
    if np.any(near0):
        out[near0] = _f_aa_series_origin(xi[near0])
    if np.any(near1):
        out[near1] = _f_aa_series_unit(a[near1] - 1.0)

    return float(out[0]) if scalar else out


def window_sq(omega, omega0: float) -> float:
    """|W(omega)|^2 for the one-loop window, in s^2.

    W(omega) = integral_0^tau (cos(omega0*t) - 1) e^{i omega t} dt.  Uses the
    closed form |W(omega0*xi)|^2 = (4/omega0^2) f_aa(xi); W(0) = -tau, so
    window_sq(0) = tau^2.
    """
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    return (4.0 / omega0**2) * f_aa(np.asarray(omega, dtype=float) / omega0)


def kernel_integral(half_width: float = 50.0, tail_fraction: float = 1e-8) -> float:
    """Full-line integral of f_aa by adaptive quadrature, equal to 3*pi^2/2.

    Integrates |xi| <= half_width piecewise between the integer zeros of
    sin^2 (each piece is smooth, so quad converges fast), doubles by evenness,
    and bounds the discarded tail by integral of xi^-6/(1-1/xi^2)^2 analytically.
    Raises QuadratureError if quad's own error estimate or the tail bound
    exceeds tail_fraction of the total.
    """
    if half_width < 2.0:
        raise ValueError("half_width must be >= 2")
    total = 0.0
    err = 0.0
    k = 0.0
    while k < half_width:
        hi = min(k + 1.0, half_width)
        v, e = quad(f_aa, k, hi, limit=200, epsabs=1e-13, epsrel=1e-12)
        total += v
        err += e
        k = hi
    total *= 2.0
    err *= 2.0

    # For |xi| >= X > 1: f_aa <= 1/(xi^2 (xi^2-1)^2) <= xi^-6 (1-1/X^2)^-2,
    # so the two tails are below 2 (1-1/X^2)^-2 / (5 X^5).
    x = half_width
    tail = 2.0 / (5.0 * x**5) / (1.0 - 1.0 / x**2) ** 2

    if tail > tail_fraction * total or err > tail_fraction * total:
        raise QuadratureError(
            f"kernel integral not converged: quad error {err:.3e}, "
            f"tail bound {tail:.3e}",
            achieved=max(err, tail) / total,
        )
    return total


def transfer_accel(omega, model, params):
    """Squared effective transfer function of acceleration noise.

    |F_a,eff(omega0*xi)|^2 = (4 cos^2(theta0) / (hbar^2 omega0^6))
                             * (Ctilde_R^2 + Ctilde_L^2) * f_aa(xi).
    Identically zero at theta0 = pi/2, where axis and noise decouple.
    """
    hbar = params.constants.hbar
    pref = (
        4.0
        * axis_cosine(params.theta0) ** 2
        / (hbar**2 * model.omega0**6)
        * (model.ctilde_r**2 + model.ctilde_l**2)
    )
    return pref * f_aa(np.asarray(omega, dtype=float) / model.omega0)


def transfer_tilt(omega, model, params):
    """Squared effective transfer function of tilt-angle noise.

    |F_theta,eff(omega0*xi)|^2 = (4 gamma_e eta0)^2
                                 * (a sin(theta0)/omega0^3)^2 * f_aa(xi).
    Vanishes for zero external acceleration: tilt fluctuations only dephase
    through the inertial force they modulate.
    """
    pref = (4.0 * params.constants.gamma_e * params.eta0) ** 2 * (
        params.accel * math.sin(params.theta0) / model.omega0**3
    ) ** 2
    return pref * f_aa(np.asarray(omega, dtype=float) / model.omega0)
