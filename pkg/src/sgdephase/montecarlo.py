"""Stochastic oracle: per-shot phase accumulation under synthesized noise.

Two routes to the same per-shot phase:

* LinearResponse evaluates the first-order phase functional directly
  (the windowed sum of the noise against cos(omega0*t) - 1).
* FullAction integrates the noisy equations of motion for both arms with a
  velocity-Verlet step (noise held piecewise-constant per step), accumulates
  the full arm Lagrangian difference, and subtracts a noiseless reference run
  of the same integrator at the same step size.  The subtraction happens per
  time step, not between two accumulated phases, so the large deterministic
  phase never enters a catastrophic cancellation.

For a one-loop interferometer (zero arm velocity at both ends) the two
variances agree: the trajectory and velocity fluctuations integrate to a pure
boundary term.  Shots are keyed by (seed, shot index) through a counter-based
generator, and chunk statistics are merged in fixed index order, so results
are bit-identical no matter how many workers run.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dephasing import ACCEL, CHANNELS, TILT
from .errors import DomainError, InvalidParameterError, StepSizeError
from .model import DerivedModel, ExperimentParams, axis_cosine
from .noise import WHITE, NoiseTrace, PsdSpec, philox_generator, synth_colored

LINEAR = "linear"
FULL_ACTION = "full-action"
METHODS = (LINEAR, FULL_ACTION)

# Relative energy drift allowed in the noiseless reference run.
_DRIFT_TOL = 1e-3


def worker_count() -> int:
    """Worker cap from SGDEPHASE_THREADS, defaulting to the CPU count."""
    env = os.environ.get("SGDEPHASE_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise InvalidParameterError(f"SGDEPHASE_THREADS={env!r} is not an integer") from exc
        return max(1, n)
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo run description.

    dt must divide tau to within rounding; FullAction additionally requires
    dt <= tau/1000.  arm_correlation rho in [-1, 1] mixes a shared trace into
    the two arm traces of the accel channel (each arm keeps the configured
    PSD; the cross-PSD becomes rho * S).  colored_oversample sets how many
    window lengths a synthesized colored trace spans before the [0, tau]
    window is cut out; period-tau synthesis would only sample the kernel's
    zeros.
    """

    n_shots: int
    dt: float
    seed: int
    channel: str
    psd: PsdSpec
    method: str = LINEAR
    arm_correlation: float = 0.0
    colored_oversample: int = 64


@dataclass(frozen=True)
class McEstimate:
    """Ensemble phase-variance estimate.

    stderr is the Gaussian-phase standard error variance*sqrt(2/(n-1)).
    """

    variance: float
    stderr: float
    n_shots: int
    method: str
    mean: float = 0.0
    seed: int = 0


# ---------------------------------------------------------------------------
# per-shot phase functionals
# ---------------------------------------------------------------------------


def _window_samples(model: DerivedModel, dt: float) -> tuple[int, np.ndarray]:
    """Number of steps covering [0, tau] and the left-endpoint window values."""
    n = int(round(model.tau / dt))
    if n < 4 or abs(n * dt - model.tau) > 1e-9 * model.tau:
        raise DomainError(f"dt = {dt} does not evenly divide tau = {model.tau}")
    t = np.arange(n) * dt
    return n, np.cos(model.omega0 * t) - 1.0


def _as_arm_pair(channel: str, traces):
    """Normalize the trace argument: accel wants (R, L), tilt a single trace."""
    if channel == ACCEL:
        if not (isinstance(traces, (tuple, list)) and len(traces) == 2):
            raise DomainError("accel channel needs a (right, left) pair of traces")
        tr, tl = traces
        if tr.dt != tl.dt:
            raise DomainError("arm traces must share dt")
        return (tr, tl)
    if channel == TILT:
        if isinstance(traces, (tuple, list)):
            if len(traces) != 1:
                raise DomainError("tilt channel takes a single trace")
            traces = traces[0]
        return (traces,)
    raise InvalidParameterError(f"unknown channel {channel!r}")


def _trace_matrix(model: DerivedModel, traces) -> tuple[float, int, np.ndarray]:
    """Stack trace samples to (n_traces, 1, n_window), validating coverage."""
    dt = traces[0].dt
    n, _ = _window_samples(model, dt)
    rows = []
    for tr in traces:
        if len(tr.samples) < n:
            raise DomainError(
                f"trace of {len(tr.samples)} samples at dt = {tr.dt} does not "
                f"cover [0, tau]"
            )
        rows.append(tr.samples[:n])
    return dt, n, np.asarray(rows)[:, None, :]


def shot_phase_linear(
    model: DerivedModel, params: ExperimentParams, channel: str, traces
) -> float:
    """First-order phase of one shot.

    accel: dphi = cos(theta0)/(hbar*omega0^2)
                  * sum_k [Ctilde_R da_R,k - Ctilde_L da_L,k] w_k dt
    tilt:  dphi = (a sin(theta0)/omega0^2) (2 gamma_e eta0) * sum_k dtheta_k w_k dt

    with w_k = cos(omega0 t_k) - 1 at the left endpoints.  `traces` is a
    (right, left) pair for accel, a single NoiseTrace for tilt.
    """
    traces = _as_arm_pair(channel, traces)
    dt, _, noise = _trace_matrix(model, traces)
    return float(_linear_phases(model, params, channel, noise, dt)[0])


def _linear_phases(
    model: DerivedModel,
    params: ExperimentParams,
    channel: str,
    noise: np.ndarray,
    dt: float,
) -> np.ndarray:
    """Vectorized linear-response phases for noise of shape (n_traces, shots, n)."""
    _, w = _window_samples(model, dt)
    if channel == ACCEL:
        pref = axis_cosine(params.theta0) / (params.constants.hbar * model.omega0**2)
        return pref * dt * (
            model.ctilde_r * (noise[0] @ w) - model.ctilde_l * (noise[1] @ w)
        )
    pref = (
        params.accel
        * math.sin(params.theta0)
        / model.omega0**2
        * 2.0
        * params.constants.gamma_e
        * params.eta0
    )
    return pref * dt * (noise[0] @ w)


def shot_phase_full_action(
    model: DerivedModel, params: ExperimentParams, channel: str, traces
) -> float:
    """Phase of one shot from full noisy equation-of-motion integration.

    Integrates m x''_j = -m omega0^2 x_j - C_j eta0 + (projected external
    force including its noise) per arm with velocity Verlet at the trace's
    dt, accumulates (L_R - L_L)/hbar by the trapezoid rule, and subtracts the
    same integrator's noiseless run step by step.  Zero noise returns exactly
    0; the noiseless reference must pass the energy-drift check.
    """
    traces = _as_arm_pair(channel, traces)
    dt, n, noise = _trace_matrix(model, traces)
    ref = _reference_series(model, params, channel, n, dt)
    return float(_step_full_action(model, params, channel, noise, dt, ref=ref)[0])


def _projected_accel(params: ExperimentParams, channel: str, noise_k):
    """External acceleration along the axis at one time step, per arm.

    accel channel: (a + da_j) cos(theta0), noise_k = (da_R, da_L)
    tilt channel:  a cos(theta0 + dtheta), same for both arms.
    """
    if channel == ACCEL:
        c = axis_cosine(params.theta0)
        return (params.accel + noise_k[0]) * c, (params.accel + noise_k[1]) * c
    proj = params.accel * np.cos(params.theta0 + noise_k[0])
    return proj, proj


def _step_full_action(
    model: DerivedModel,
    params: ExperimentParams,
    channel: str,
    noise: np.ndarray,
    dt: float,
    ref: np.ndarray | None,
):
    """Verlet-step both arms and accumulate the Lagrangian-difference phase.

    The dynamics run in mean/difference coordinates s = (x_R + x_L)/2,
    d = x_R - x_L rather than per arm.  The physics is identical, but the
    Lagrangian difference then never forms products of two large common-mode
    factors: per-arm stepping lets the two arms' floating-point rounding of
    the (mathematically identical) common-mode noise response decorrelate at
    the 1e-19 m level, and multiplied by the common force that artifact can
    rival the physical phase signal.

        (L_R - L_L)/hbar = [m vs vd - m omega0^2 s d - eta0 (C_R - C_L) s
                            - eta0 (C_R + C_L) d/2 + m g_diff s + m g_mean d]
                           / hbar

    noise has shape (n_traces, shots, n).  With `ref` given, returns the
    (shots,) reference-subtracted trapezoid phases.  With ref=None (the
    recording pass; shots must be 1), returns (series, state) where series is
    the (n+1,) per-node integrand and state the final (s, vs, d, vd).  The
    same arithmetic runs in both modes, so a zero-noise shot reproduces the
    reference series bit for bit.
    """
    shots = noise.shape[1]
    n = noise.shape[-1]
    w0sq = model.omega0**2
    m = params.mass
    hbar = params.constants.hbar
    eta0 = params.eta0
    spring_mean = 0.5 * (model.c_r + model.c_l) * eta0 / m
    spring_diff = (model.c_r - model.c_l) * eta0 / m
    c_diff = eta0 * (model.c_r - model.c_l)
    c_mean = 0.5 * eta0 * (model.c_r + model.c_l)

    recording = ref is None
    if recording:
        series = np.empty(n + 1)
    else:
        phase = np.zeros(shots)

    s = np.zeros(shots)
    vs = np.zeros(shots)
    d = np.zeros(shots)
    vd = np.zeros(shots)

    def integrand(g_mean, g_diff):
        # time-constant Lagrangian pieces cancel identically against the
        # reference and are omitted
        return (
            m * vs * vd
            - m * w0sq * s * d
            - c_diff * s
            - c_mean * d
            + m * (g_diff * s + g_mean * d)
        ) / hbar

    def forces(noise_k):
        g_r, g_l = _projected_accel(params, channel, noise_k)
        if channel == ACCEL:
            return 0.5 * (g_r + g_l), g_r - g_l
        return g_r, 0.0 * g_r  # tilt: common projection, no differential force

    g_mean, g_diff = forces(noise[:, :, 0])
    node = integrand(g_mean, g_diff)
    if recording:
        series[0] = node[0]
    else:
        phase = phase + 0.5 * dt * (node - ref[0])

    for k in range(n):
        g_mean, g_diff = forces(noise[:, :, k])
        a_s0 = -w0sq * s - spring_mean + g_mean
        a_d0 = -w0sq * d - spring_diff + g_diff
        s = s + vs * dt + 0.5 * a_s0 * dt**2
        d = d + vd * dt + 0.5 * a_d0 * dt**2
        vs = vs + 0.5 * dt * (a_s0 + (-w0sq * s - spring_mean + g_mean))
        vd = vd + 0.5 * dt * (a_d0 + (-w0sq * d - spring_diff + g_diff))

        # node k+1, evaluated with the noise of the interval just applied
        node = integrand(g_mean, g_diff)
        if recording:
            series[k + 1] = node[0]
        else:
            weight = 0.5 if k == n - 1 else 1.0
            phase = phase + weight * dt * (node - ref[k + 1])

    if recording:
        return series, (s, vs, d, vd)
    return phase


def _reference_series(
    model: DerivedModel,
    params: ExperimentParams,
    channel: str,
    n: int,
    dt: float,
) -> np.ndarray:
    """Noiseless per-node integrand series (n+1,), with stability checks.

    Raises StepSizeError if the final energy of either arm drifts by more
    than _DRIFT_TOL relative to its oscillation energy.
    """
    n_traces = 2 if channel == ACCEL else 1
    zeros = np.zeros((n_traces, 1, n))
    series, state = _step_full_action(model, params, channel, zeros, dt, ref=None)

    w0sq = model.omega0**2
    eta0 = params.eta0
    m = params.mass
    g = params.accel * axis_cosine(params.theta0)
    for x, v, c_arm in _per_arm_state(model, state):
        spring = c_arm * eta0 / m
        x_eq = (g - spring) / w0sq
        # energy per unit mass in the constant force field; starts at 0
        drift = abs(0.5 * v**2 + 0.5 * w0sq * x**2 + (spring - g) * x)
        scale = max(0.5 * w0sq * x_eq**2, 1e-300)
        if drift > _DRIFT_TOL * scale:
            raise StepSizeError(
                f"noiseless energy drift {drift:.3e} exceeds {_DRIFT_TOL} of "
                f"the oscillation energy {scale:.3e}; decrease dt"
            )
    return series


def _per_arm_state(model: DerivedModel, state):
    """Final (x, v, C_arm) per arm from the mean/difference state."""
    s, vs, d, vd = state
    return (
        (float(s[0] + 0.5 * d[0]), float(vs[0] + 0.5 * vd[0]), model.c_r),
        (float(s[0] - 0.5 * d[0]), float(vs[0] - 0.5 * vd[0]), model.c_l),
    )


def noiseless_closure(model: DerivedModel, params: ExperimentParams, dt: float) -> float:
    """Max |x_j(tau)| of the noiseless integrator (loop-closure residual)."""
    n, _ = _window_samples(model, dt)
    zeros = np.zeros((2, 1, n))
    _, state = _step_full_action(model, params, ACCEL, zeros, dt, ref=None)
    arms = _per_arm_state(model, state)
    return max(abs(arms[0][0]), abs(arms[1][0]))


# ---------------------------------------------------------------------------
# ensemble runs
# ---------------------------------------------------------------------------


def _validate_config(config: McConfig, model: DerivedModel) -> int:
    if config.channel not in CHANNELS:
        raise InvalidParameterError(f"unknown channel {config.channel!r}")
    if config.method not in METHODS:
        raise InvalidParameterError(f"unknown method {config.method!r}")
    if config.n_shots < 100:
        raise InvalidParameterError(f"n_shots must be >= 100, got {config.n_shots}")
    if not (-1.0 <= config.arm_correlation <= 1.0):
        raise InvalidParameterError("arm_correlation must lie in [-1, 1]")
    if config.channel == TILT and config.arm_correlation != 0.0:
        raise InvalidParameterError("arm_correlation applies to the accel channel only")
    n, _ = _window_samples(model, config.dt)
    if config.method == FULL_ACTION and config.dt > model.tau / 1000.0:
        raise InvalidParameterError("full-action integration needs dt <= tau/1000")
    return n


def _chunk_noise(config: McConfig, n: int, lo: int, hi: int) -> np.ndarray:
    """Noise for shots [lo, hi): shape (n_traces, hi-lo, n).

    Stream keying per shot i: tilt uses stream i; accel uses 3i (right arm),
    3i+1 (left arm) and 3i+2 (shared component for correlated arms).  The
    keying is identical for both methods, so linear and full-action runs with
    equal seeds see equal noise.
    """
    dt = config.dt
    shots = hi - lo

    def draw(stream: int) -> np.ndarray:
        if config.psd.kind == WHITE:
            sigma = math.sqrt(2.0 * math.pi * config.psd.level / dt)
            return sigma * philox_generator(config.seed, stream).standard_normal(n)
        n_synth = 1 << max(int(math.ceil(math.log2(config.colored_oversample * n))), 2)
        trace = synth_colored(config.psd, dt, n_synth, config.seed, stream=stream)
        return trace.samples[:n]

    if config.channel == TILT:
        out = np.empty((1, shots, n))
        for j, i in enumerate(range(lo, hi)):
            out[0, j] = draw(i)
        return out

    rho = config.arm_correlation
    out = np.empty((2, shots, n))
    mix_own = math.sqrt(1.0 - abs(rho))
    mix_shared = math.sqrt(abs(rho))
    for j, i in enumerate(range(lo, hi)):
        own_r = draw(3 * i)
        own_l = draw(3 * i + 1)
        if rho == 0.0:
            out[0, j] = own_r
            out[1, j] = own_l
        else:
            shared = draw(3 * i + 2)
            out[0, j] = mix_own * own_r + mix_shared * shared
            out[1, j] = mix_own * own_l + math.copysign(mix_shared, rho) * shared
    return out


def _chunk_stats(phases: np.ndarray) -> tuple[int, float, float]:
    count = len(phases)
    mean = float(phases.mean())
    m2 = float(((phases - mean) ** 2).sum())
    return count, mean, m2


def _merge_stats(a, b):
    # Chan's parallel variance combination; associative enough for a
    # deterministic left fold in chunk order.
    n_a, mean_a, m2_a = a
    n_b, mean_b, m2_b = b
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * n_b / n
    m2 = m2_a + m2_b + delta**2 * n_a * n_b / n
    return n, mean, m2


def mc_variance(config: McConfig, model: DerivedModel, params: ExperimentParams) -> McEstimate:
    """Ensemble phase variance with standard error.

    Shots are processed in fixed chunks, each worker producing (count, mean,
    M2) Welford statistics that are merged in chunk order, so the estimate is
    deterministic for a given seed regardless of the worker count
    (SGDEPHASE_THREADS).
    """
    n = _validate_config(config, model)
    ref = None
    if config.method == FULL_ACTION:
        ref = _reference_series(model, params, config.channel, n, config.dt)

    n_traces = 2 if config.channel == ACCEL else 1
    # keep per-chunk noise around 100 MB
    chunk = max(64, min(1024, int(1.6e8 / (8 * n_traces * max(n, 1)))))
    spans = [
        (lo, min(lo + chunk, config.n_shots)) for lo in range(0, config.n_shots, chunk)
    ]

    def run_span(span):
        lo, hi = span
        noise = _chunk_noise(config, n, lo, hi)
        if config.method == LINEAR:
            phases = _linear_phases(model, params, config.channel, noise, config.dt)
        else:
            phases = _step_full_action(model, params, config.channel, noise, config.dt, ref)
        return _chunk_stats(phases)

    workers = min(worker_count(), len(spans))
    if workers <= 1:
        results = [run_span(s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_span, spans))

    stats = results[0]
    for other in results[1:]:
        stats = _merge_stats(stats, other)
    count, mean, m2 = stats
    variance = m2 / (count - 1)
    stderr = variance * math.sqrt(2.0 / (count - 1))
    return McEstimate(
        variance=variance,
        stderr=stderr,
        n_shots=count,
        method=config.method,
        mean=mean,
        seed=config.seed,
    )


def make_arm_traces(config: McConfig, model: DerivedModel, shot_index: int):
    """The exact NoiseTrace inputs mc_variance uses for one shot.

    Returns a (right, left) tuple for the accel channel and a single
    NoiseTrace for tilt, so shots can be replayed through the public
    shot_phase_* functions.
    """
    n = _window_samples(model, config.dt)[0]
    noise = _chunk_noise(config, n, shot_index, shot_index + 1)
    traces = tuple(
        NoiseTrace(dt=config.dt, samples=noise[j, 0], seed=config.seed)
        for j in range(noise.shape[0])
    )
    return traces if config.channel == ACCEL else traces[0]
