"""Deterministic model of the one-loop Stern-Gerlach interferometer.

A nanoparticle with an embedded spin (S_x = +1 on the right arm, -1 on the
left) moves in a harmonic magnetic trap B(x) = B0 + eta0*x.  Each arm feels a
constant net force and executes one full oscillation of the trap in
tau = 2*pi/omega0, closing the loop with zero residual displacement and
velocity.  Everything here is a pure function of the experiment parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameterError


@dataclass(frozen=True)
class PhysConstants:
    """Physical constants in SI units.

    chi_rho is the mass magnetic susceptibility of diamond (negative:
    diamagnetic).  Defaults are the values used throughout the package.
    """

    hbar: float = 1.05e-34          # J s
    gamma_e: float = 1.761e11       # s^-1 T^-1
    chi_rho: float = -6.286e-9      # m^3 kg^-1
    mu0: float = 4e-7 * math.pi     # H m^-1

    def __post_init__(self):
        if not (self.chi_rho < 0):
            raise InvalidParameterError("chi_rho must be negative (diamagnetic)")
        for name in ("hbar", "gamma_e", "mu0"):
            if not (getattr(self, name) > 0):
                raise InvalidParameterError(f"{name} must be positive")


@dataclass(frozen=True)
class ExperimentParams:
    """All physical inputs of a run.

    theta0 is the tilt angle (radians) between the superposition axis and the
    external acceleration of magnitude `accel`.  zfs_d (zero-field splitting)
    and the constant Lagrangian terms it multiplies are carried for
    completeness but drop out of every arm phase difference for the symmetric
    spin states used here; nothing downstream computes with it.
    """

    constants: PhysConstants = field(default_factory=PhysConstants)
    mass: float = 1e-15             # kg
    eta0: float = 6e3               # T m^-1
    b0: float = 1e-3                # T
    accel: float = 9.81             # m s^-2
    theta0: float = math.pi / 2     # rad
    zfs_d: float = 2.87e9           # s^-1, inert (see docstring)

    def __post_init__(self):
        if not (self.mass > 0):
            raise InvalidParameterError(f"mass must be positive, got {self.mass}")
        if not (self.eta0 > 0):
            raise InvalidParameterError(f"eta0 must be positive, got {self.eta0}")
        if not (0.0 <= self.theta0 <= math.pi / 2):
            raise InvalidParameterError(
                f"theta0 must lie in [0, pi/2], got {self.theta0}"
            )
        if not (self.accel >= 0):
            raise InvalidParameterError(f"accel must be >= 0, got {self.accel}")


def axis_cosine(theta0: float) -> float:
    """cos(theta0), snapped to exactly 0 at the perpendicular orientation.

    At theta0 = pi/2 the axis and the external acceleration decouple exactly;
    the ~6e-17 representation residue of cos(pi/2) would otherwise leak a
    spurious finite coupling into every downstream quantity.
    """
    if abs(theta0 - math.pi / 2.0) < 1e-12:
        return 0.0
    return math.cos(theta0)


@dataclass(frozen=True)
class DerivedModel:
    """Quantities derived from ExperimentParams.

    c_r/c_l are the per-arm magnetic couplings (J/T); ctilde_r/ctilde_l the
    net constant forces (N) driving each arm; dx_max the maximum spatial
    superposition size (m), reached at t = pi/omega0.
    """

    omega0: float       # rad s^-1
    tau: float          # s, one-loop time 2*pi/omega0
    c_r: float          # J T^-1
    c_l: float          # J T^-1
    ctilde_r: float     # N
    ctilde_l: float     # N
    dx_max: float       # m


def derive(params: ExperimentParams) -> DerivedModel:
    """Compute all derived quantities of the interferometer.

    omega0   = sqrt(-chi_rho/mu0) * eta0
    C_j      = S_xj*hbar*gamma_e - (chi_rho*m/mu0)*B0,   S_xR = +1, S_xL = -1
    Ctilde_j = C_j*eta0 - m*a*cos(theta0)
    dx_max   = 4*hbar*gamma_e*eta0 / (m*omega0^2)

    dx_max is independent of B0, a and theta0; so is the arm difference
    Ctilde_R - Ctilde_L = 2*hbar*gamma_e*eta0.
    """
    c = params.constants
    try:
        omega0 = math.sqrt(-c.chi_rho / c.mu0) * params.eta0
        tau = 2.0 * math.pi / omega0

        diamag = -(c.chi_rho * params.mass / c.mu0) * params.b0
        c_r = c.hbar * c.gamma_e + diamag
        c_l = -c.hbar * c.gamma_e + diamag

        inertial = params.mass * params.accel * axis_cosine(params.theta0)
        ctilde_r = c_r * params.eta0 - inertial
        ctilde_l = c_l * params.eta0 - inertial

        dx_max = 4.0 * c.hbar * c.gamma_e * params.eta0 / (params.mass * omega0**2)
    except (OverflowError, ZeroDivisionError) as exc:
        raise InvalidParameterError(
            f"derived quantities overflow: {exc}; check parameter magnitudes"
        ) from exc

    values = (omega0, tau, c_r, c_l, ctilde_r, ctilde_l, dx_max)
    if not all(math.isfinite(v) for v in values):
        raise InvalidParameterError(
            "derived quantities are not finite; check parameter magnitudes"
        )
    return DerivedModel(*values)


def trajectory(model: DerivedModel, mass: float, arm: str, t):
    """Position of one arm at time t in [0, tau].

    x_j(t) = Ctilde_j/(m*omega0^2) * (cos(omega0*t) - 1), so x_j(0) = x_j(tau)
    = 0 and the velocity vanishes at both endpoints.  Accepts scalar or array
    t.
    """
    if arm not in ("L", "R"):
        raise DomainError(f"arm must be 'L' or 'R', got {arm!r}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > model.tau * (1.0 + 1e-12)):
        raise DomainError(f"t outside [0, tau={model.tau}]")
    ctilde = model.ctilde_r if arm == "R" else model.ctilde_l
    x = ctilde / (mass * model.omega0**2) * (np.cos(model.omega0 * t) - 1.0)
    return float(x) if x.ndim == 0 else x


def superposition_vs_mass(params: ExperimentParams, masses) -> np.ndarray:
    """Table of (mass, dx_max) rows over a mass grid.

    omega0 is mass-independent, so dx_max*m = 4*hbar*gamma_e*eta0/omega0^2 is
    constant along the table.  Returns an (n, 2) array; empty grid gives an
    empty (0, 2) array.
    """
    masses = np.asarray(masses, dtype=float)
    if masses.size == 0:
        return np.empty((0, 2))
    if np.any(masses <= 0):
        raise InvalidParameterError("masses must be positive")
    c = params.constants
    omega0 = math.sqrt(-c.chi_rho / c.mu0) * params.eta0
    dx = 4.0 * c.hbar * c.gamma_e * params.eta0 / (masses * omega0**2)
    return np.column_stack([masses, dx])
