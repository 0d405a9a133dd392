"""Analytic dephasing rates, coherence measure, and multi-source combination.

The per-shot random phase between the arms has variance

    E[dphi^2] = K_channel * integral S(omega0*xi) f_aa(xi) dxi

with channel coefficients

    K_accel = 4 cos^2(theta0) (Ctilde_R^2 + Ctilde_L^2) / (hbar^2 omega0^5)
    K_tilt  = 4 (2 gamma_e eta0 a sin(theta0))^2 / omega0^5

(the tilt channel carries no 1/hbar^2: the arm separation it couples to is
itself proportional to hbar).  We adopt the rate convention Gamma = E[dphi^2]
per shot and the coherence criterion Gamma*tau <= 1 literally; for white noise
the kernel integral is 3*pi^2/2 and the rates close in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ApproximationDomainError, InvalidParameterError, QuadratureError
from .kernel import KERNEL_INTEGRAL_EXACT, f_aa
from .model import DerivedModel, ExperimentParams, axis_cosine
from .noise import WHITE, PsdSpec

ACCEL = "accel"
TILT = "tilt"
CHANNELS = (ACCEL, TILT)

# Quadrature window in xi for colored-noise rates; beyond it the kernel tail
# contributes < 1e-10 of the white-noise integral.
_XI_WINDOW = 50.0


@dataclass(frozen=True)
class DephasingResult:
    """Dephasing of one noise channel.

    phase_variance is E[dphi^2] per shot (rad^2); gamma stores the same
    number under the rate convention; gamma_tau = gamma*tau and coherence =
    exp(-gamma_tau).
    """

    channel: str
    phase_variance: float
    gamma: float
    gamma_tau: float
    coherence: float


def coherence(gamma_tau: float) -> float:
    """Coherence measure exp(-Gamma*tau), in (0, 1]."""
    if gamma_tau < 0:
        raise InvalidParameterError(f"gamma_tau must be >= 0, got {gamma_tau}")
    return math.exp(-gamma_tau)


def mean_decoherence_time(gamma: float) -> float:
    """Mean decoherence time 1/Gamma; inf for gamma = 0."""
    if gamma < 0:
        raise InvalidParameterError(f"gamma must be >= 0, got {gamma}")
    return math.inf if gamma == 0.0 else 1.0 / gamma


def combine_rates(rates) -> float:
    """Upper bound on the total rate from independent sources: sqrt(sum Gamma_i^2)."""
    rates = np.asarray(list(rates), dtype=float)
    if rates.size == 0:
        return 0.0
    if np.any(rates < 0):
        raise InvalidParameterError("rates must be >= 0")
    return float(np.sqrt(np.sum(rates**2)))


def accel_rate_coefficient(model: DerivedModel, params: ExperimentParams) -> float:
    """Gamma_aa / (S_aa * kernel integral): the white rate is coeff * 3pi^2/2 * S."""
    hbar = params.constants.hbar
    return (
        4.0
        * axis_cosine(params.theta0) ** 2
        / (hbar**2 * model.omega0**5)
        * (model.ctilde_r**2 + model.ctilde_l**2)
    )


def tilt_rate_coefficient(model: DerivedModel, params: ExperimentParams) -> float:
    """Gamma_tt / (S_tt * kernel integral)."""
    amp = 2.0 * params.constants.gamma_e * params.eta0 * params.accel * math.sin(
        params.theta0
    )
    return (amp / model.omega0**2) ** 2 * 4.0 / model.omega0


def rate_coefficient(model: DerivedModel, params: ExperimentParams, channel: str) -> float:
    if channel == ACCEL:
        return accel_rate_coefficient(model, params)
    if channel == TILT:
        return tilt_rate_coefficient(model, params)
    raise InvalidParameterError(f"unknown channel {channel!r}")


def _result(channel: str, variance: float, tau: float) -> DephasingResult:
    gamma_tau = variance * tau
    return DephasingResult(
        channel=channel,
        phase_variance=variance,
        gamma=variance,
        gamma_tau=gamma_tau,
        coherence=math.exp(-gamma_tau),
    )


def gamma_accel_white(
    model: DerivedModel, params: ExperimentParams, s_aa: float
) -> DephasingResult:
    """White-noise acceleration dephasing rate.

    Gamma_aa = [4 cos^2(theta0)/(hbar^2 omega0^5)] (Ctilde_R^2 + Ctilde_L^2)
               * (3 pi^2 / 2) * S_aa.
    """
    if s_aa < 0:
        raise InvalidParameterError(f"s_aa must be >= 0, got {s_aa}")
    gamma = accel_rate_coefficient(model, params) * KERNEL_INTEGRAL_EXACT * s_aa
    return _result(ACCEL, gamma, model.tau)


def gamma_tilt_white(
    model: DerivedModel, params: ExperimentParams, s_tt: float
) -> DephasingResult:
    """White-noise tilt dephasing rate.

    Gamma_tt = (2 gamma_e eta0 a sin(theta0) / omega0^2)^2 * (4/omega0)
               * (3 pi^2 / 2) * S_tt.
    Zero for a = 0: without a mean inertial force, tilt fluctuations do not
    dephase at first order.
    """
    if s_tt < 0:
        raise InvalidParameterError(f"s_tt must be >= 0, got {s_tt}")
    gamma = tilt_rate_coefficient(model, params) * KERNEL_INTEGRAL_EXACT * s_tt
    return _result(TILT, gamma, model.tau)


def gamma_colored(
    model: DerivedModel,
    params: ExperimentParams,
    channel: str,
    psd: PsdSpec,
) -> DephasingResult:
    """Dephasing rate for an arbitrary PSD: K * integral S(omega0*xi) f_aa(xi) dxi.

    Adaptive quadrature over xi in [-50, 50], split at the kernel's removable
    singularities {0, +-1} and at the PSD's tabulation nodes so the
    piecewise-linear interpolant does not defeat the error estimate.  For a
    white PSD this reproduces the closed forms to better than 1e-6 relative.
    """
    coeff = rate_coefficient(model, params, channel)
    omega0 = model.omega0

    # Normalize the PSD to O(1) so quad's absolute tolerance is meaningful.
    if psd.kind == WHITE:
        scale = psd.level
        if scale == 0.0:
            return _result(channel, 0.0, model.tau)
        kernel_part = scale * _kernel_weighted_integral(lambda xi: 1.0, (), _XI_WINDOW)
    else:
        scale = float(np.max(psd.values))
        xi_grid = psd.omega / omega0
        hi = min(_XI_WINDOW, float(xi_grid[-1]))
        if scale == 0.0 or hi <= 0:
            return _result(channel, 0.0, model.tau)
        nodes = tuple(float(x) for x in xi_grid if 0.0 < x < hi)
        kernel_part = scale * _kernel_weighted_integral(
            lambda xi: psd(omega0 * xi) / scale, nodes, hi
        )

    return _result(channel, coeff * kernel_part, model.tau)


def _kernel_weighted_integral(s_of_xi, interior_points, hi: float) -> float:
    """2 * integral_0^hi s(xi) f_aa(xi) dxi for a normalized s, piecewise adaptive.

    Splits at the kernel's removable singularity xi = 1, at every integer node
    (one piece per sin^2 oscillation), and at the caller's breakpoints.
    """
    edges = {0.0, hi}
    edges.update(p for p in interior_points if 0.0 < p < hi)
    edges.update(float(k) for k in range(1, int(math.ceil(hi))))
    edges = sorted(edges)
    total = 0.0
    err = 0.0

    def integrand(xi):
        return s_of_xi(xi) * f_aa(xi)

    for lo, up in zip(edges[:-1], edges[1:]):
        v, e = quad(integrand, lo, up, limit=200, epsabs=1e-13, epsrel=1e-10)
        total += v
        err += e
    total *= 2.0  # evenness of f_aa and S
    err *= 2.0
    if err > 1e-9 * total + 1e-12:
        raise QuadratureError(
            f"colored-noise quadrature residual {err:.3e} exceeds tolerance",
            achieved=err / max(total, 1e-300),
        )
    return total


def gamma_accel_near_perp(
    model: DerivedModel,
    params: ExperimentParams,
    s_aa: float,
    dev: float,
    enforce_domain: bool = True,
) -> DephasingResult:
    """Taylor form of the acceleration rate near theta0 = pi/2.

    Gamma ~ [4 dev^2/(hbar^2 omega0^5)] ((C_R eta0)^2 + (C_L eta0)^2)
            * (3 pi^2/2) * S_aa,
    i.e. the full formula with cos(theta0) -> dev and the inertial term
    m*a*cos(theta0) dropped.  Valid only while the diamagnetic force dominates
    the projected inertial force; in the cancellation region near theta_m the
    approximation is off by O(1), which is why the domain check exists.
    """
    if s_aa < 0:
        raise InvalidParameterError(f"s_aa must be >= 0, got {s_aa}")
    if not (0.0 <= dev <= 0.01):
        raise ApproximationDomainError(f"dev must lie in [0, 0.01] rad, got {dev}")
    c = params.constants
    magnetic = -(c.chi_rho * params.mass / c.mu0) * params.b0 * params.eta0
    inertial = params.mass * params.accel * dev
    if enforce_domain and not (magnetic > 3.0 * inertial):
        raise ApproximationDomainError(
            f"magnetic force {magnetic:.3e} N does not dominate projected "
            f"inertial force {inertial:.3e} N; the Taylor form breaks down"
        )
    hbar = c.hbar
    forces_sq = (model.c_r * params.eta0) ** 2 + (model.c_l * params.eta0) ** 2
    gamma = (
        4.0 * dev**2 / (hbar**2 * model.omega0**5)
        * forces_sq
        * KERNEL_INTEGRAL_EXACT
        * s_aa
    )
    return _result(ACCEL, gamma, model.tau)
