"""Tolerable-PSD bounds and minimum-sensitivity operating points.

Inverting Gamma*tau = target for a white PSD gives the largest tolerable
level S = target / (tau * coefficient); the amplitude bound is sqrt(S).
Two operating points minimize the acceleration sensitivity: the acceleration
a_m at which the spin-independent forces cancel, and (for fixed a) the tilt
angle theta_m doing the same.  Both have closed forms that we cross-check
against direct numerical minimization on every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dephasing import rate_coefficient
from .errors import DomainError, InvalidParameterError
from .kernel import KERNEL_INTEGRAL_EXACT
from .model import DerivedModel, ExperimentParams, axis_cosine, derive

UNBOUNDED = math.inf

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundResult:
    """Largest tolerable amplitude spectral density for one channel.

    sqrt_psd_bound is in raw units (sqrt of the two-sided per-rad/s PSD);
    math.inf marks the unbounded sentinel (channel insensitive at this
    geometry).  params is the snapshot the bound was computed for.
    """

    channel: str
    sqrt_psd_bound: float
    gamma_tau_target: float
    params: ExperimentParams


def psd_bound(
    model: DerivedModel,
    params: ExperimentParams,
    channel: str,
    gamma_tau_target: float = 1.0,
) -> BoundResult:
    """Invert the white-noise rate into a tolerable PSD bound.

    S = target / (tau * coefficient * 3pi^2/2); plugging S back into the rate
    gives Gamma*tau = target exactly.  A vanishing coefficient (accel channel
    at theta0 = 90 deg, tilt channel at a = 0 or theta0 = 0) means arbitrary
    noise amplitude is tolerable: the bound is the inf sentinel.
    """
    if gamma_tau_target <= 0:
        raise InvalidParameterError(
            f"gamma_tau_target must be positive, got {gamma_tau_target}"
        )
    coeff = rate_coefficient(model, params, channel) * KERNEL_INTEGRAL_EXACT
    if coeff == 0.0:
        return BoundResult(channel, UNBOUNDED, gamma_tau_target, params)
    level = gamma_tau_target / (model.tau * coeff)
    return BoundResult(channel, math.sqrt(level), gamma_tau_target, params)


def magnetic_acceleration(params: ExperimentParams) -> float:
    """(-chi_rho/mu0) * B0 * eta0: the spin-independent magnetic force per unit mass."""
    c = params.constants
    return (-c.chi_rho / c.mu0) * params.b0 * params.eta0


def find_a_min(params: ExperimentParams) -> float:
    """Acceleration a_m that cancels the spin-independent force at fixed theta0.

    Closed form a_m = (-chi_rho/mu0) B0 eta0 / cos(theta0), leaving the arm
    forces at +-hbar*gamma_e*eta0.  Cross-checked against a golden-section
    minimization of Ctilde_R^2 + Ctilde_L^2 over a.
    """
    cos_t = axis_cosine(params.theta0)
    if cos_t <= 1e-12:
        raise DomainError("no finite a_m at theta0 = 90 deg (cos(theta0) = 0)")
    a_m = magnetic_acceleration(params) / cos_t

    def force_sq(a: float) -> float:
        m = derive(_with(params, accel=a))
        return m.ctilde_r**2 + m.ctilde_l**2

    a_num = _golden_section(force_sq, 0.0, 4.0 * a_m, tol=a_m * 1e-9)
    if abs(a_num - a_m) > 1e-6 * a_m:
        raise RuntimeError(
            f"closed-form a_m = {a_m:.9g} disagrees with numeric minimum {a_num:.9g}"
        )
    return a_m


def find_theta_min(params: ExperimentParams) -> float:
    """Tilt angle minimizing the acceleration dephasing rate at fixed a.

    Minimizes Gamma(theta) ~ cos^2(theta) * (Ctilde_R(theta)^2 +
    Ctilde_L(theta)^2) in u = cos(theta), where the objective is a smooth
    quartic u^2 ((p - q u)^2 + k^2).  Its interior local minimum sits just
    below the cancellation angle cos(theta_c) = (-chi_rho/mu0) B0 eta0 / a;
    we bracket it between the quartic's local maximum and the rising branch
    and golden-search, cross-checking against the closed-form stationary
    point.  Returns pi/2 (boundary sentinel) when the cancellation is not
    reachable, i.e. a <= (-chi_rho/mu0) B0 eta0.
    """
    a_mag = magnetic_acceleration(params)
    if params.accel <= a_mag:
        return math.pi / 2.0

    c = params.constants
    p = (-c.chi_rho * params.mass / c.mu0) * params.b0 * params.eta0  # N
    q = params.mass * params.accel                                   # N
    k = c.hbar * c.gamma_e * params.eta0                              # N

    # Stationary points of u^2((p-qu)^2+k^2): v = p - q u solves
    # 2v^2 - p v + k^2 = 0.  No real root means no interior minimum.
    disc = p * p - 8.0 * k * k
    if disc < 0.0:
        return math.pi / 2.0
    v_minus = (p - math.sqrt(disc)) / 4.0   # -> interior minimum
    v_plus = (p + math.sqrt(disc)) / 4.0    # -> local maximum below it
    u_star = (p - v_minus) / q
    u_lmax = (p - v_plus) / q
    if not (0.0 < u_star < 1.0):
        return math.pi / 2.0

    def gamma_shape(u: float) -> float:
        v = p - q * u
        return u * u * (v * v + k * k)

    u_hi = min(1.0, 2.0 * u_star - u_lmax)
    u_num = _golden_section(gamma_shape, max(u_lmax, 0.0), u_hi, tol=u_star * 1e-12)
    if abs(u_num - u_star) > 1e-6 * u_star:
        raise RuntimeError(
            f"numeric theta_m (cos = {u_num:.9g}) disagrees with closed "
            f"form (cos = {u_star:.9g})"
        )
    return math.acos(u_num)


def _with(params: ExperimentParams, **overrides) -> ExperimentParams:
    from dataclasses import replace

    return replace(params, **overrides)


def _golden_section(f, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Golden-section search for the minimum of a unimodal f on [lo, hi]."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 > f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)
