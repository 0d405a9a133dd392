"""Command-line interface.

Subcommands: derive, gamma, bound, sweep, mc, table1, kernel.  Results go to
--out (or stdout) as CSV or JSON, always carrying a reproducibility block
(parameter echo, seed, version); identical config and seed give byte-identical
files.  --plot renders a matplotlib figure next to the delimited output for
the report-style commands (sweep, table1, kernel).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, bounds, dephasing, sweep as sweep_mod
from .config import RunConfig, apply_setting, params_echo, parse_config
from .errors import ConfigError, SgDephaseError
from .kernel import f_aa, kernel_integral
from .model import derive
from .montecarlo import McConfig, mc_variance
from .noise import PsdSpec, load_psd_csv

_REFERENCE_ORDERS = {
    ("accel", "a_m"): 1e-8,
    ("accel", "zero"): 1e-11,
    ("accel", "three"): 1e-13,
    ("accel", "deg89"): 1e-10,
    ("accel", "theta_m"): 1e-6,
    ("tilt", "perp"): 1e-10,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        return args.handler(args, config)
    except SgDephaseError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgdephase",
        description="Dephasing rates, coherence and noise-PSD tolerance bounds "
        "for a one-loop Stern-Gerlach interferometer.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value configuration file")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--gamma-tau-target", type=float, help="coherence target")
    common.add_argument("--channel", choices=("accel", "tilt"))
    common.add_argument("--method", choices=("linear", "full-action"))

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", parents=[common], help="derived model constants")
    p.set_defaults(handler=cmd_derive)

    p = sub.add_parser("gamma", parents=[common], help="dephasing rate and coherence")
    p.add_argument("--psd-file", type=Path, help="tabulated PSD CSV (omega_rad_s,psd_value)")
    p.set_defaults(handler=cmd_gamma)

    p = sub.add_parser("bound", parents=[common], help="tolerable PSD bound")
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("sweep", parents=[common], help="parameter-grid dataset")
    p.add_argument("--quantity", required=True, choices=sweep_mod.QUANTITIES)
    p.add_argument("--x", required=True, metavar="NAME:LO:HI:N[:SCALE]")
    p.add_argument("--y", metavar="NAME:LO:HI:N[:SCALE]")
    p.add_argument("--fixed", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--level", action="append", default=[], type=float,
                   help="contour level(s) to extract")
    p.add_argument("--plot", action="store_true", help="render a PNG next to --out")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo phase-variance oracle")
    p.add_argument("--n-shots", type=int)
    p.add_argument("--steps", type=int, help="time steps per loop (power of two)")
    p.add_argument("--rho", type=float, help="arm noise correlation in [-1, 1]")
    p.set_defaults(handler=cmd_mc)

    p = sub.add_parser("table1", parents=[common], help="benchmark bound table")
    p.add_argument("--plot", action="store_true", help="render a PNG next to --out")
    p.set_defaults(handler=cmd_table1)

    p = sub.add_parser("kernel", parents=[common], help="response-kernel data")
    p.add_argument("--integral", action="store_true", help="emit the kernel integral")
    p.add_argument("--grid", metavar="LO:HI:N", help="sample f_aa on a xi grid")
    p.add_argument("--plot", action="store_true", help="render a PNG next to --out")
    p.set_defaults(handler=cmd_kernel)

    return parser


def _load_config(args) -> RunConfig:
    config = RunConfig()
    if args.config is not None:
        config = parse_config(Path(args.config).read_text())
    # flags override file values
    for flag, key in (
        ("seed", "seed"),
        ("gamma_tau_target", "gamma_tau_target"),
        ("channel", "channel"),
        ("method", "method"),
        ("format", "format"),
        ("n_shots", "n_shots"),
        ("steps", "mc_steps"),
        ("rho", "rho"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            config = apply_setting(config, key, str(value))
    if getattr(args, "out", None) is not None:
        config = replace(config, out=str(args.out))
    return config


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def _emit(config: RunConfig, command: str, result: dict, rows=None, columns=None) -> None:
    """Write a scalar-result dict (and optional row table) as CSV or JSON."""
    echo = params_echo(config)
    if config.fmt == "json":
        payload = {
            "version": __version__,
            "command": command,
            "params": echo,
            "result": result,
        }
        if rows is not None:
            payload["rows"] = [dict(zip(columns, row)) for row in rows]
        text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# version={__version__}\n# command={command}\n")
        for key in sorted(echo):
            buf.write(f"# {key}={echo[key]!r}\n")
        writer = csv.writer(buf)
        if rows is not None:
            for key in sorted(result):
                buf.write(f"# {key}={_csv_scalar(result[key])}\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_csv_scalar(v) for v in row])
        else:
            writer.writerow(sorted(result))
            writer.writerow([_csv_scalar(result[k]) for k in sorted(result)])
        text = buf.getvalue()

    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_scalar(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if not math.isfinite(value) else repr(value)
    return str(value)


def _jsonable(value):
    """Strict-JSON view: non-finite floats become null (the sentinel)."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _plot_target(config: RunConfig) -> Path:
    if not config.out:
        raise ConfigError("--plot needs --out to know where the figure goes")
    return Path(config.out).with_suffix(".png")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_derive(args, config: RunConfig) -> int:
    model = derive(config.params)
    _emit(config, "derive", {
        "omega0_rad_s": model.omega0,
        "tau_s": model.tau,
        "c_r_j_per_t": model.c_r,
        "c_l_j_per_t": model.c_l,
        "ctilde_r_n": model.ctilde_r,
        "ctilde_l_n": model.ctilde_l,
        "dx_max_m": model.dx_max,
    })
    return 0


def _channel_level(config: RunConfig) -> float:
    key = "sqrt_s_aa" if config.channel == "accel" else "sqrt_s_tt"
    amplitude = getattr(config, key)
    if amplitude is None:
        raise ConfigError(f"set {key} (amplitude spectral density) for channel "
                          f"{config.channel!r}")
    return amplitude**2


def cmd_gamma(args, config: RunConfig) -> int:
    model = derive(config.params)
    if getattr(args, "psd_file", None):
        psd = load_psd_csv(args.psd_file)
        result = dephasing.gamma_colored(model, config.params, config.channel, psd)
    else:
        level = _channel_level(config)
        if config.channel == "accel":
            result = dephasing.gamma_accel_white(model, config.params, level)
        else:
            result = dephasing.gamma_tilt_white(model, config.params, level)
    _emit(config, "gamma", {
        "channel": result.channel,
        "phase_variance_rad2": result.phase_variance,
        "gamma": result.gamma,
        "gamma_tau": result.gamma_tau,
        "coherence": result.coherence,
    })
    return 0


def cmd_bound(args, config: RunConfig) -> int:
    model = derive(config.params)
    res = bounds.psd_bound(model, config.params, config.channel, config.gamma_tau_target)
    _emit(config, "bound", {
        "channel": res.channel,
        "sqrt_psd_bound_raw": res.sqrt_psd_bound,
        "gamma_tau_target": res.gamma_tau_target,
        "unbounded": not math.isfinite(res.sqrt_psd_bound),
    })
    return 0


def _parse_axis(text: str) -> sweep_mod.AxisSpec:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError(f"axis must be NAME:LO:HI:N[:SCALE], got {text!r}")
    name, lo, hi, n = parts[0], float(parts[1]), float(parts[2]), int(parts[3])
    scale = parts[4] if len(parts) == 5 else "linear"
    return sweep_mod.AxisSpec(name=name, lo=lo, hi=hi, n=n, scale=scale)


def cmd_sweep(args, config: RunConfig) -> int:
    fixed = {}
    for item in args.fixed:
        if "=" not in item:
            raise ConfigError(f"--fixed expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        fixed[key.strip()] = float(raw)
    spec = sweep_mod.SweepSpec(
        x_axis=_parse_axis(args.x),
        y_axis=_parse_axis(args.y) if args.y else None,
        quantity=args.quantity,
        fixed=fixed,
        contour_levels=tuple(args.level),
    )
    result = sweep_mod.run_sweep(spec, config.params)

    comments = [f"version={__version__}", "command=sweep", f"quantity={spec.quantity}"]
    comments += [f"{k}={v!r}" for k, v in sorted(params_echo(config).items())]
    if config.out:
        sweep_mod.write_sweep_csv(result, config.out, header_comments=comments)
        if spec.contour_levels:
            contour_path = Path(config.out).with_name(Path(config.out).stem + "_contours.csv")
            sweep_mod.write_contours_csv(result, contour_path, header_comments=comments)
        if args.plot:
            from .plots import plot_sweep

            plot_sweep(result, _plot_target(config))
    else:
        sweep_mod.write_sweep_csv(result, sys.stdout, header_comments=comments)
    return 0


def _mc_benchmark_config(config: RunConfig) -> RunConfig:
    """Per-channel benchmark geometry for the mc command.

    The accel channel has zero transfer at the default theta0 = 90 deg, so
    unless the user pinned theta0/a explicitly the benchmark row (theta0 = 0,
    a = 0) is used instead.  Explicit settings always win.
    """
    if config.channel != "accel":
        return config
    params = config.params
    if not config.was_set("theta0_deg"):
        params = replace(params, theta0=0.0)
    if not config.was_set("a_m_s2"):
        params = replace(params, accel=0.0)
    return replace(config, params=params)


def cmd_mc(args, config: RunConfig) -> int:
    config = _mc_benchmark_config(config)
    model = derive(config.params)
    params = config.params

    key = "sqrt_s_aa" if config.channel == "accel" else "sqrt_s_tt"
    amplitude = getattr(config, key)
    if amplitude is None:
        bound = bounds.psd_bound(model, params, config.channel).sqrt_psd_bound
        if not math.isfinite(bound):
            raise ConfigError(
                f"channel {config.channel!r} has zero transfer at this geometry; "
                f"set {key} explicitly or change theta0_deg/a_m_s2"
            )
        amplitude = bound / 100.0
    level = amplitude**2

    mc_config = McConfig(
        n_shots=config.n_shots,
        dt=model.tau / config.mc_steps,
        seed=config.seed,
        channel=config.channel,
        psd=PsdSpec.white(level),
        method=config.method,
        arm_correlation=config.rho,
    )
    estimate = mc_variance(mc_config, model, params)
    if config.channel == "accel":
        analytic = dephasing.gamma_accel_white(model, params, level)
    else:
        analytic = dephasing.gamma_tilt_white(model, params, level)
    z = (estimate.variance - analytic.gamma) / estimate.stderr if estimate.stderr else 0.0
    _emit(config, "mc", {
        "channel": config.channel,
        "method": estimate.method,
        "n_shots": estimate.n_shots,
        "sqrt_psd_raw": amplitude,
        "variance_rad2": estimate.variance,
        "stderr_rad2": estimate.stderr,
        "analytic_gamma": analytic.gamma,
        "z_score": z,
        "gamma_tau_mc": estimate.variance * model.tau,
        "theta0_deg_used": math.degrees(params.theta0),
        "a_m_s2_used": params.accel,
    })
    return 0


def table1_rows(config: RunConfig):
    """Benchmark bound table rows from first principles.

    Accel rows: (theta0, a) in {(0, a_m), (0, 0), (0, 3), (89 deg, 9.81),
    (theta_m, 9.81)}, with a_m and theta_m computed, plus the tilt row at
    (90 deg, 9.81).  Each row carries the reference order of magnitude and
    the computed/reference ratio.
    """
    base = config.params
    target = config.gamma_tau_target

    def accel_bound(theta0: float, accel: float) -> float:
        p = replace(base, theta0=theta0, accel=accel)
        return bounds.psd_bound(derive(p), p, "accel", target).sqrt_psd_bound

    a_m = bounds.find_a_min(replace(base, theta0=0.0))
    theta_m = bounds.find_theta_min(replace(base, accel=9.81))

    rows = []
    for tag, theta0, accel in (
        ("a_m", 0.0, a_m),
        ("zero", 0.0, 0.0),
        ("three", 0.0, 3.0),
        ("deg89", math.radians(89.0), 9.81),
        ("theta_m", theta_m, 9.81),
    ):
        value = accel_bound(theta0, accel)
        order = _REFERENCE_ORDERS[("accel", tag)]
        rows.append(
            ("accel", math.degrees(theta0), accel, value, order, value / order)
        )

    p_tilt = replace(base, theta0=math.pi / 2, accel=9.81)
    tilt = bounds.psd_bound(derive(p_tilt), p_tilt, "tilt", target).sqrt_psd_bound
    order = _REFERENCE_ORDERS[("tilt", "perp")]
    rows.append(("tilt", 90.0, 9.81, tilt, order, tilt / order))
    return rows


def cmd_table1(args, config: RunConfig) -> int:
    rows = table1_rows(config)
    columns = ("channel", "theta0_deg", "a_m_s2", "sqrt_psd_bound_raw",
               "reference_order", "ratio")
    _emit(config, "table1", {"gamma_tau_target": config.gamma_tau_target},
          rows=rows, columns=columns)
    if args.plot:
        from .plots import plot_table1

        plot_table1(rows, _plot_target(config))
    return 0


def cmd_kernel(args, config: RunConfig) -> int:
    result = {}
    rows = None
    columns = None
    if args.integral or not args.grid:
        result["kernel_integral"] = kernel_integral()
    if args.grid:
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--grid expects LO:HI:N, got {args.grid!r}")
        xi = sweep_mod.AxisSpec("xi", float(parts[0]), float(parts[1]), int(parts[2])).values()
        rows = [(float(x), float(f_aa(x))) for x in xi]
        columns = ("xi", "f_aa")
    _emit(config, "kernel", result, rows=rows, columns=columns)
    if args.plot:
        from .plots import plot_kernel

        if rows is None:
            raise ConfigError("kernel --plot needs --grid")
        plot_kernel(rows, _plot_target(config))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
