"""Noise models: PSDs, differential-arm algebra, synthesis and estimation.

Convention used everywhere: two-sided power spectral density per angular
frequency (rad/s), normalised so that the variance of the process is
integral of S(omega) d omega over the band.  For discrete samples at spacing
dt the band is [-pi/dt, pi/dt], so white noise of level S has per-sample
variance 2*pi*S/dt.  Amplitude spectral density means sqrt(S) in these raw
units.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import welch

from .errors import (
    CorrelationError,
    CoverageError,
    InsufficientDataError,
    InvalidParameterError,
)

WHITE = "white"
TABULATED = "tabulated"


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream).

    Distinct keys give statistically independent streams, so per-shot
    synthesis is reproducible no matter how shots are scheduled.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream)])
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PsdSpec:
    """A noise power spectral density: white constant or tabulated.

    Tabulated grids are strictly increasing in omega >= 0 with linear
    interpolation and zero extrapolation beyond the last node; evaluation at
    negative omega uses S(-omega) = S(omega) (real stationary process).
    `units` is carried metadata (e.g. acceleration^2 or rad^2 per rad/s).
    """

    kind: str
    level: float = 0.0
    omega: np.ndarray | None = None
    values: np.ndarray | None = None
    units: str = ""

    @classmethod
    def white(cls, level: float, units: str = "") -> "PsdSpec":
        if level < 0:
            raise InvalidParameterError(f"PSD level must be >= 0, got {level}")
        return cls(kind=WHITE, level=float(level), units=units)

    @classmethod
    def tabulated(cls, omega, values, units: str = "") -> "PsdSpec":
        omega = np.asarray(omega, dtype=float)
        values = np.asarray(values, dtype=float)
        if omega.ndim != 1 or omega.shape != values.shape or omega.size < 2:
            raise InvalidParameterError("tabulated PSD needs matching 1-D grids, n >= 2")
        if np.any(np.diff(omega) <= 0):
            raise InvalidParameterError("tabulated omega grid must be strictly increasing")
        if omega[0] < 0:
            raise InvalidParameterError("tabulated grid must start at omega >= 0")
        if np.any(values < 0):
            raise InvalidParameterError("PSD values must be >= 0")
        return cls(kind=TABULATED, omega=omega, values=values, units=units)

    def __call__(self, omega):
        """Evaluate S(omega); scalar or array in, matching shape out."""
        omega = np.asarray(omega, dtype=float)
        if self.kind == WHITE:
            out = np.full_like(omega, self.level, dtype=float)
        else:
            out = np.interp(np.abs(omega), self.omega, self.values, left=0.0, right=0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def omega_max(self) -> float:
        """Highest tabulated frequency; inf for white."""
        return float("inf") if self.kind == WHITE else float(self.omega[-1])


@dataclass(frozen=True)
class NoiseTrace:
    """A sampled noise realization: values every dt seconds, from `seed`."""

    dt: float
    samples: np.ndarray = field(repr=False)
    seed: int = 0

    @property
    def duration(self) -> float:
        return self.dt * len(self.samples)


def differential_psd(s_xx: float, s_yy: float, re_s_xy: float) -> float:
    """PSD of the difference of two jointly stationary processes.

    S_ZZ = S_XX + S_YY - 2*Re S_XY for Z = X - Y.  Uncorrelated arms add;
    positive correlation reduces the differential PSD, anti-correlation
    increases it.  Re S_XY must satisfy Cauchy-Schwarz.
    """
    if s_xx < 0 or s_yy < 0:
        raise InvalidParameterError("auto-PSDs must be >= 0")
    limit = np.sqrt(s_xx * s_yy)
    if abs(re_s_xy) > limit * (1.0 + 1e-12):
        raise CorrelationError(
            f"|Re S_XY| = {abs(re_s_xy):.6g} exceeds sqrt(S_XX*S_YY) = {limit:.6g}"
        )
    return max(0.0, s_xx + s_yy - 2.0 * re_s_xy)


def synth_white(level: float, dt: float, n: int, seed: int, stream: int = 0) -> NoiseTrace:
    """i.i.d. zero-mean Gaussian trace with PSD `level`.

    Per-sample variance is 2*pi*level/dt (the level integrated over the
    Nyquist band).  Identical (seed, stream, dt, n) give bit-identical traces.
    """
    if level < 0:
        raise InvalidParameterError(f"level must be >= 0, got {level}")
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    sigma = np.sqrt(2.0 * np.pi * level / dt)
    if sigma == 0.0:
        samples = np.zeros(n)
    else:
        samples = sigma * philox_generator(seed, stream).standard_normal(n)
    return NoiseTrace(dt=dt, samples=samples, seed=seed)


def synth_colored(psd: PsdSpec, dt: float, n: int, seed: int, stream: int = 0) -> NoiseTrace:
    """Stationary Gaussian trace with the given PSD, by spectral synthesis.

    Draws independent complex Gaussian rFFT coefficients with
    E|X_m|^2 = 2*pi*n/dt * S(omega_m) and inverse-transforms.  n must be a
    power of two.  A tabulated PSD must cover [0, pi/dt]; outside its band the
    spectrum is zero, so band-limited inputs produce band-limited traces.
    The result is periodic with period n*dt (relevant when windowing).
    """
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    if n < 2 or (n & (n - 1)) != 0:
        raise InvalidParameterError(f"n must be a power of two >= 2, got {n}")
    nyquist = np.pi / dt
    if psd.kind == TABULATED and psd.omega_max < nyquist * (1.0 - 1e-12):
        raise CoverageError(
            f"tabulated PSD ends at {psd.omega_max:.6g} rad/s but synthesis "
            f"needs coverage up to pi/dt = {nyquist:.6g} rad/s"
        )

    omega_m = 2.0 * np.pi * np.fft.rfftfreq(n, d=dt)
    s_m = np.asarray(psd(omega_m), dtype=float)
    if not np.any(s_m > 0):
        return NoiseTrace(dt=dt, samples=np.zeros(n), seed=seed)

    rng = philox_generator(seed, stream)
    g = rng.standard_normal(2 * (n // 2 + 1))
    re = g[: n // 2 + 1]
    im = g[n // 2 + 1 :]

    # Interior bins are complex with half the power in each quadrature; the
    # DC and Nyquist bins are real and carry it all.
    amp = np.sqrt(np.pi * n / dt * s_m)
    coeff = amp * (re + 1j * im)
    coeff[0] = np.sqrt(2.0) * amp[0] * re[0]
    coeff[-1] = np.sqrt(2.0) * amp[-1] * re[-1]

    samples = np.fft.irfft(coeff, n=n)
    return NoiseTrace(dt=dt, samples=samples, seed=seed)


def estimate_psd(trace: NoiseTrace, nperseg: int | None = None) -> PsdSpec:
    """Welch estimate of the two-sided per-rad/s PSD of a trace.

    Hann window, 50% overlap, no detrending (a DC offset shows up at
    omega = 0, as it should).  nperseg defaults to len/128 clamped to
    [256, 1024] so that long traces average >= 100 segments.  Needs at least
    2^10 samples.
    """
    n = len(trace.samples)
    if n < 2**10:
        raise InsufficientDataError(f"need >= 1024 samples for a PSD estimate, got {n}")
    if nperseg is None:
        nperseg = int(min(1024, max(256, n // 128)))
    nperseg = min(nperseg, n)

    fs = 1.0 / trace.dt
    freqs, pxx = welch(
        trace.samples,
        fs=fs,
        window="hann",
        nperseg=nperseg,
        noverlap=nperseg // 2,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    # welch returns two-sided per-Hz on an fftfreq-ordered grid; fold to
    # omega >= 0 and convert per-Hz -> per-(rad/s).
    order = np.argsort(freqs)
    freqs = freqs[order]
    pxx = pxx[order]
    keep = freqs >= 0.0
    omega = 2.0 * np.pi * freqs[keep]
    values = pxx[keep] / (2.0 * np.pi)
    return PsdSpec.tabulated(omega, np.maximum(values, 0.0))


def load_psd_csv(path, units: str = "") -> PsdSpec:
    """Read a tabulated PSD from CSV with header `omega_rad_s,psd_value`."""
    path = Path(path)
    omegas: list[float] = []
    values: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["omega_rad_s", "psd_value"]:
            raise InvalidParameterError(
                f"{path}: expected header 'omega_rad_s,psd_value', got {header}"
            )
        for row in reader:
            if not row or row[0].lstrip().startswith("#"):
                continue
            omegas.append(float(row[0]))
            values.append(float(row[1]))
    return PsdSpec.tabulated(omegas, values, units=units)


def save_psd_csv(spec: PsdSpec, path) -> None:
    """Write a tabulated PSD as CSV (header `omega_rad_s,psd_value`)."""
    if spec.kind != TABULATED:
        raise InvalidParameterError("only tabulated PSDs can be written to CSV")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega_rad_s", "psd_value"])
        for w, v in zip(spec.omega, spec.values):
            writer.writerow([repr(float(w)), repr(float(v))])
