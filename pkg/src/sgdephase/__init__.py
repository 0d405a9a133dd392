"""Dephasing, coherence and noise tolerance of a one-loop Stern-Gerlach
interferometer in a harmonic magnetic trap.

The library computes the analytic dephasing rates of the acceleration and
tilt-angle noise channels (white or tabulated spectra), inverts them into
tolerable noise bounds, locates the minimum-sensitivity operating points, and
validates everything against an independent Monte Carlo oracle that
integrates the noisy equations of motion.
"""

from .bounds import BoundResult, find_a_min, find_theta_min, psd_bound
from .dephasing import (
    ACCEL,
    TILT,
    DephasingResult,
    coherence,
    combine_rates,
    gamma_accel_near_perp,
    gamma_accel_white,
    gamma_colored,
    gamma_tilt_white,
    mean_decoherence_time,
)
from .kernel import f_aa, kernel_integral, transfer_accel, transfer_tilt, window_sq
from .model import (
    DerivedModel,
    ExperimentParams,
    PhysConstants,
    derive,
    superposition_vs_mass,
    trajectory,
)
from .montecarlo import (
    FULL_ACTION,
    LINEAR,
    McConfig,
    McEstimate,
    mc_variance,
    shot_phase_full_action,
    shot_phase_linear,
)
from .noise import (
    NoiseTrace,
    PsdSpec,
    differential_psd,
    estimate_psd,
    load_psd_csv,
    save_psd_csv,
    synth_colored,
    synth_white,
)
from .sweep import AxisSpec, SweepSpec, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ACCEL",
    "TILT",
    "LINEAR",
    "FULL_ACTION",
    "AxisSpec",
    "BoundResult",
    "DephasingResult",
    "DerivedModel",
    "ExperimentParams",
    "McConfig",
    "McEstimate",
    "NoiseTrace",
    "PhysConstants",
    "PsdSpec",
    "SweepSpec",
    "coherence",
    "combine_rates",
    "derive",
    "differential_psd",
    "estimate_psd",
    "f_aa",
    "find_a_min",
    "find_theta_min",
    "gamma_accel_near_perp",
    "gamma_accel_white",
    "gamma_colored",
    "gamma_tilt_white",
    "kernel_integral",
    "load_psd_csv",
    "mc_variance",
    "mean_decoherence_time",
    "psd_bound",
    "run_sweep",
    "save_psd_csv",
    "shot_phase_full_action",
    "shot_phase_linear",
    "superposition_vs_mass",
    "synth_colored",
    "synth_white",
    "trajectory",
    "transfer_accel",
    "transfer_tilt",
    "window_sq",
    "__version__",
]
