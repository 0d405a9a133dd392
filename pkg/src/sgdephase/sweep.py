"""Parameter-grid evaluation and contour extraction.

A sweep evaluates one quantity (dephasing Gamma*tau, PSD bound, superposition
size, or the response kernel) on a 1-D or 2-D parameter grid, cell by cell
through the same single-point code path the rest of the package uses, so grid
values are bit-identical to direct evaluations.  Requested iso-levels (e.g.
the Gamma*tau = 1 operating boundary) are extracted with marching squares,
interpolating in each axis's own coordinate (log axes interpolate in log10).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field, replace

import numpy as np

from . import bounds as bounds_mod
from .dephasing import ACCEL, TILT, gamma_accel_white, gamma_tilt_white
from .errors import ConfigError
from .kernel import f_aa
from .model import ExperimentParams, derive
from .montecarlo import worker_count

QUANTITIES = ("gamma_accel", "gamma_tilt", "bound_accel", "bound_tilt", "dx_max", "kernel")

# axis name -> (ExperimentParams field, converter to internal units)
_PARAM_AXES = {
    "mass_kg": ("mass", lambda v: v),
    "eta0_t_per_m": ("eta0", lambda v: v),
    "b0_t": ("b0", lambda v: v),
    "a_m_s2": ("accel", lambda v: v),
    "theta0_deg": ("theta0", math.radians),
}
_LEVEL_AXES = ("sqrt_s_aa", "sqrt_s_tt")
_AXIS_NAMES = tuple(_PARAM_AXES) + _LEVEL_AXES + ("xi",)

_VALUE_COLUMN = {
    "gamma_accel": "gamma_tau",
    "gamma_tilt": "gamma_tau",
    "bound_accel": "sqrt_s_aa_raw",
    "bound_tilt": "sqrt_s_tt_raw",
    "dx_max": "dx_max_m",
    "kernel": "f_aa",
}

_AXIS_COLUMN = {name: name for name in _AXIS_NAMES}
_AXIS_COLUMN["sqrt_s_aa"] = "sqrt_s_aa_raw"
_AXIS_COLUMN["sqrt_s_tt"] = "sqrt_s_tt_raw"


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: n points from lo to hi, spaced linearly or in log10."""

    name: str
    lo: float
    hi: float
    n: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in _AXIS_NAMES:
            raise ConfigError(f"unknown sweep parameter {self.name!r}; "
                              f"choose from {_AXIS_NAMES}")
        if self.n < 2:
            raise ConfigError(f"axis {self.name}: n must be >= 2, got {self.n}")
        if not (self.lo < self.hi):
            raise ConfigError(f"axis {self.name}: need lo < hi")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis {self.name}: scale must be linear or log")
        if self.scale == "log" and self.lo <= 0:
            raise ConfigError(f"axis {self.name}: log scale requires lo > 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.logspace(math.log10(self.lo), math.log10(self.hi), self.n)
        return np.linspace(self.lo, self.hi, self.n)

    def coords(self) -> np.ndarray:
        """Values in interpolation coordinates (log10 for log axes)."""
        vals = self.values()
        return np.log10(vals) if self.scale == "log" else vals

    def from_coord(self, c: float) -> float:
        return 10.0**c if self.scale == "log" else c


@dataclass(frozen=True)
class SweepSpec:
    """Grid description: x axis, optional y axis, quantity, fixed overrides."""

    x_axis: AxisSpec
    quantity: str
    y_axis: AxisSpec | None = None
    fixed: dict = field(default_factory=dict)
    contour_levels: tuple = ()

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ConfigError(f"unknown quantity {self.quantity!r}; "
                              f"choose from {QUANTITIES}")
        for key in self.fixed:
            if key not in _AXIS_NAMES:
                raise ConfigError(f"unknown fixed parameter {key!r}")
        axes = {self.x_axis.name} | ({self.y_axis.name} if self.y_axis else set())
        if self.quantity == "kernel" and "xi" not in axes:
            raise ConfigError("kernel sweeps need an xi axis")
        if self.quantity != "kernel" and "xi" in axes:
            raise ConfigError("xi is only a kernel-sweep axis")


@dataclass(frozen=True)
class Contour:
    """Iso-level polylines in data coordinates."""

    level: float
    polylines: tuple  # tuple of (k, 2) arrays


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    x_values: np.ndarray
    y_values: np.ndarray | None
    grid: np.ndarray          # (nx,) or (nx, ny)
    contours: tuple = ()


def evaluate_point(quantity: str, params: ExperimentParams, overrides: dict) -> float:
    """Single-cell evaluation; the sweep calls this for every grid point.

    overrides maps axis names (external units) onto the parameter set; PSD
    amplitude axes (sqrt_s_*) are squared into levels.  Returns math.inf as
    the unbounded-bound sentinel.
    """
    kwargs = {}
    levels = {}
    for key, value in overrides.items():
        if key in _PARAM_AXES:
            fld, conv = _PARAM_AXES[key]
            kwargs[fld] = conv(value)
        elif key in _LEVEL_AXES:
            levels[key] = float(value) ** 2
        elif key == "xi":
            levels[key] = value
        else:
            raise ConfigError(f"unknown parameter {key!r}")

    if quantity == "kernel":
        if "xi" not in levels:
            raise ConfigError("kernel evaluation needs xi")
        return float(f_aa(levels["xi"]))

    p = replace(params, **kwargs) if kwargs else params
    model = derive(p)
    if quantity == "dx_max":
        return model.dx_max
    if quantity == "gamma_accel":
        if "sqrt_s_aa" not in levels:
            raise ConfigError("gamma_accel sweeps need sqrt_s_aa (axis or fixed)")
        return gamma_accel_white(model, p, levels["sqrt_s_aa"]).gamma_tau
    if quantity == "gamma_tilt":
        if "sqrt_s_tt" not in levels:
            raise ConfigError("gamma_tilt sweeps need sqrt_s_tt (axis or fixed)")
        return gamma_tilt_white(model, p, levels["sqrt_s_tt"]).gamma_tau
    if quantity == "bound_accel":
        return bounds_mod.psd_bound(model, p, ACCEL).sqrt_psd_bound
    if quantity == "bound_tilt":
        return bounds_mod.psd_bound(model, p, TILT).sqrt_psd_bound
    raise ConfigError(f"unknown quantity {quantity!r}")


def run_sweep(spec: SweepSpec, params: ExperimentParams) -> SweepResult:
    """Evaluate the grid and extract requested contours.

    Rows are distributed over a thread pool (capped by SGDEPHASE_THREADS) and
    written back by index, so the output ordering is independent of
    scheduling.
    """
    xs = spec.x_axis.values()
    ys = spec.y_axis.values() if spec.y_axis else None

    if ys is None:
        grid = np.array([
            evaluate_point(spec.quantity, params, {**spec.fixed, spec.x_axis.name: x})
            for x in xs
        ])
        return SweepResult(spec, xs, None, grid)

    grid = np.empty((len(xs), len(ys)))

    def fill_row(i: int) -> None:
        x = xs[i]
        for j, y in enumerate(ys):
            grid[i, j] = evaluate_point(
                spec.quantity,
                params,
                {**spec.fixed, spec.x_axis.name: x, spec.y_axis.name: y},
            )

    workers = min(worker_count(), len(xs))
    if workers <= 1:
        for i in range(len(xs)):
            fill_row(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_row, range(len(xs))))

    contours = tuple(
        Contour(level, tuple(_marching_squares(spec, xs, ys, grid, level)))
        for level in spec.contour_levels
    )
    return SweepResult(spec, xs, ys, grid, contours)


# ---------------------------------------------------------------------------
# marching squares
# ---------------------------------------------------------------------------


def _marching_squares(spec, xs, ys, grid, level):
    """Extract iso-level polylines from a rectilinear grid.

    Works in each axis's interpolation coordinate (log10 for log axes) and
    converts vertices back to data units.  Cells with non-finite corners
    (e.g. unbounded-bound sentinels) are skipped.
    """
    cx = spec.x_axis.coords()
    cy = spec.y_axis.coords()
    segments = []

    def interp(c_a, v_a, c_b, v_b):
        # linear inverse interpolation of the crossing point
        t = (level - v_a) / (v_b - v_a)
        return c_a + t * (c_b - c_a)

    nx, ny = grid.shape
    for i in range(nx - 1):
        for j in range(ny - 1):
            v = (grid[i, j], grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1])
            if not all(math.isfinite(t) for t in v):
                continue
            idx = sum(1 << k for k, t in enumerate(v) if t >= level)
            if idx in (0, 15):
                continue
            x0, x1 = cx[i], cx[i + 1]
            y0, y1 = cy[j], cy[j + 1]
            # edge crossings: bottom (0-1), right (1-2), top (3-2), left (0-3)
            pts = {}
            if (v[0] >= level) != (v[1] >= level):
                pts["b"] = (interp(x0, v[0], x1, v[1]), y0)
            if (v[1] >= level) != (v[2] >= level):
                pts["r"] = (x1, interp(y0, v[1], y1, v[2]))
            if (v[3] >= level) != (v[2] >= level):
                pts["t"] = (interp(x0, v[3], x1, v[2]), y1)
            if (v[0] >= level) != (v[3] >= level):
                pts["l"] = (x0, interp(y0, v[0], y1, v[3]))
            edges = _CASE_EDGES[idx]
            for e_a, e_b in edges:
                if e_a in pts and e_b in pts:
                    segments.append((pts[e_a], pts[e_b]))

    qx = max(abs(cx[-1] - cx[0]), 1e-300) * 1e-9
    qy = max(abs(cy[-1] - cy[0]), 1e-300) * 1e-9
    polylines = _chain_segments(segments, qx, qy)
    out = []
    for line in polylines:
        arr = np.array(
            [
                (spec.x_axis.from_coord(px), spec.y_axis.from_coord(py))
                for px, py in line
            ]
        )
        out.append(arr)
    return out


# corner bits: 0 = (i,j), 1 = (i+1,j), 2 = (i+1,j+1), 3 = (i,j+1)
_CASE_EDGES = {
    1: [("b", "l")],
    2: [("b", "r")],
    3: [("r", "l")],
    4: [("r", "t")],
    5: [("b", "r"), ("t", "l")],   # saddle
    6: [("b", "t")],
    7: [("t", "l")],
    8: [("t", "l")],
    9: [("b", "t")],
    10: [("b", "l"), ("r", "t")],  # saddle
    11: [("r", "t")],
    12: [("r", "l")],
    13: [("b", "r")],
    14: [("b", "l")],
}


def _chain_segments(segments, qx: float, qy: float):
    """Join shared-endpoint segments into polylines (deterministic order).

    Vertices on a shared cell edge are computed from identical inputs in both
    neighbouring cells, so exact-bit matches are expected; qx/qy only quantize
    away representation noise.
    """

    def key(pt):
        return (round(pt[0] / qx), round(pt[1] / qy))

    unused = list(range(len(segments)))
    by_end: dict = {}
    for idx, (a, b) in enumerate(segments):
        by_end.setdefault(key(a), []).append(idx)
        by_end.setdefault(key(b), []).append(idx)

    used = [False] * len(segments)
    polylines = []
    for start in unused:
        if used[start]:
            continue
        used[start] = True
        a, b = segments[start]
        line = [a, b]
        # extend forward from b, then backward from a
        for tip_pos, append in ((1, True), (0, False)):
            while True:
                tip = line[-1] if append else line[0]
                candidates = [
                    i for i in by_end.get(key(tip), []) if not used[i]
                ]
                if not candidates:
                    break
                i = candidates[0]
                used[i] = True
                p, q = segments[i]
                nxt = q if key(p) == key(tip) else p
                if append:
                    line.append(nxt)
                else:
                    line.insert(0, nxt)
        polylines.append(line)
    return polylines


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _open_target(path_or_file):
    if hasattr(path_or_file, "write"):
        return nullcontext(path_or_file)
    return open(path_or_file, "w", newline="")


def write_sweep_csv(result: SweepResult, target, header_comments=()) -> None:
    """Row-major CSV of the grid: axis columns then the quantity column.

    `target` is a path or an open text stream.  Non-finite values (the
    unbounded-bound sentinel) are written as empty fields to keep the file
    numeric.
    """
    spec = result.spec
    x_col = _AXIS_COLUMN[spec.x_axis.name]
    val_col = _VALUE_COLUMN[spec.quantity]

    def fmt(v: float) -> str:
        return repr(float(v)) if math.isfinite(v) else ""

    with _open_target(target) as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        if result.y_values is None:
            writer.writerow([x_col, val_col])
            for x, v in zip(result.x_values, result.grid):
                writer.writerow([repr(float(x)), fmt(v)])
        else:
            y_col = _AXIS_COLUMN[spec.y_axis.name]
            writer.writerow([x_col, y_col, val_col])
            for i, x in enumerate(result.x_values):
                for j, y in enumerate(result.y_values):
                    writer.writerow([repr(float(x)), repr(float(y)), fmt(result.grid[i, j])])


def write_contours_csv(result: SweepResult, target, header_comments=()) -> None:
    """Contour polylines as `level,segment_id,x,y` rows."""
    with _open_target(target) as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["level", "segment_id", "x", "y"])
        for contour in result.contours:
            for seg_id, line_pts in enumerate(contour.polylines):
                for x, y in line_pts:
                    writer.writerow(
                        [repr(float(contour.level)), seg_id, repr(float(x)), repr(float(y))]
                    )
