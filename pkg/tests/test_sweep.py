import math

import numpy as np
import pytest

from sgdephase import ExperimentParams, derive, f_aa, psd_bound
from sgdephase.errors import ConfigError
from sgdephase.sweep import (
    AxisSpec,
    SweepSpec,
    evaluate_point,
    run_sweep,
    write_contours_csv,
    write_sweep_csv,
)


def fig3_spec(nx=121, ny=161):
    return SweepSpec(
        x_axis=AxisSpec("sqrt_s_aa", 1e-14, 1e-8, nx, "log"),
        y_axis=AxisSpec("a_m_s2", 0.0, 0.06, ny),
        quantity="gamma_accel",
        fixed={"theta0_deg": 0.0},
        contour_levels=(1.0,),
    )


def fig5_spec(nx=121, ny=161):
    return SweepSpec(
        x_axis=AxisSpec("sqrt_s_aa", 1e-12, 1e-5, nx, "log"),
        y_axis=AxisSpec("theta0_deg", 89.6, 90.0, ny),
        quantity="gamma_accel",
        fixed={"a_m_s2": 9.81},
        contour_levels=(1.0,),
    )


def test_axis_validation():
    with pytest.raises(ConfigError):
        AxisSpec("not_a_param", 0.0, 1.0, 10)
    with pytest.raises(ConfigError):
        AxisSpec("a_m_s2", 0.0, 1.0, 1)
    with pytest.raises(ConfigError):
        AxisSpec("a_m_s2", 1.0, 0.0, 10)
    with pytest.raises(ConfigError):
        AxisSpec("sqrt_s_aa", 0.0, 1.0, 10, "log")
    with pytest.raises(ConfigError):
        AxisSpec("a_m_s2", 0.0, 1.0, 10, "cubic")


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec(x_axis=AxisSpec("xi", -5.0, 5.0, 11), quantity="gamma_accel")
    with pytest.raises(ConfigError):
        SweepSpec(x_axis=AxisSpec("a_m_s2", 0.0, 1.0, 11), quantity="kernel")
    with pytest.raises(ConfigError):
        SweepSpec(x_axis=AxisSpec("a_m_s2", 0.0, 1.0, 11), quantity="entropy")
    with pytest.raises(ConfigError):
        SweepSpec(
            x_axis=AxisSpec("a_m_s2", 0.0, 1.0, 11),
            quantity="gamma_accel",
            fixed={"volume": 1.0},
        )


def test_kernel_sweep_reproduces_response_curve(params_default):
    spec = SweepSpec(x_axis=AxisSpec("xi", -5.0, 5.0, 401), quantity="kernel")
    res = run_sweep(spec, params_default)
    assert res.grid.max() == pytest.approx(math.pi**2, rel=1e-12)
    assert abs(res.x_values[np.argmax(res.grid)]) < 1e-12
    assert np.allclose(res.grid, f_aa(res.x_values), rtol=1e-12)


def test_mass_sweep_constant_product(params_default):
    spec = SweepSpec(
        x_axis=AxisSpec("mass_kg", 1e-16, 1e-13, 61, "log"), quantity="dx_max"
    )
    res = run_sweep(spec, params_default)
    products = res.x_values * res.grid
    assert products.max() / products.min() - 1.0 < 1e-12


def test_grid_cells_match_direct_evaluation(params_default):
    spec = fig3_spec(41, 31)
    res = run_sweep(spec, params_default)
    rng = np.random.default_rng(2)
    for _ in range(100):
        i = int(rng.integers(0, 41))
        j = int(rng.integers(0, 31))
        direct = evaluate_point(
            "gamma_accel",
            params_default,
            {"theta0_deg": 0.0, "sqrt_s_aa": res.x_values[i], "a_m_s2": res.y_values[j]},
        )
        assert direct == res.grid[i, j]


def test_contour_matches_bound_inversion(params_default):
    spec = fig3_spec(161, 121)
    res = run_sweep(spec, params_default)
    verts = np.vstack(res.contours[0].polylines)
    cell_a = res.y_values[1] - res.y_values[0]
    log_step = math.log10(res.x_values[1] / res.x_values[0])
    rng = np.random.default_rng(14)
    for a in rng.uniform(0.002, 0.058, 20):
        p = ExperimentParams(theta0=0.0, accel=float(a))
        bound = psd_bound(derive(p), p, "accel").sqrt_psd_bound
        # nearest contour vertex in a; its sqrt_s must invert the bound
        nearest = verts[np.abs(verts[:, 1] - a) <= cell_a]
        assert nearest.size > 0
        best = nearest[np.argmin(np.abs(np.log10(nearest[:, 0] / bound)))]
        assert abs(math.log10(best[0] / bound)) <= log_step


def test_fig3_contour_peak_at_a_min(params_default):
    res = run_sweep(fig3_spec(161, 241), params_default)
    verts = np.vstack(res.contours[0].polylines)
    a_at_max = verts[np.argmax(verts[:, 0]), 1]
    assert a_at_max == pytest.approx(0.0300, abs=5e-4)


def test_fig5_contour_peak_at_theta_min(params_default):
    res = run_sweep(fig5_spec(161, 161), params_default)
    verts = np.vstack(res.contours[0].polylines)
    keep = verts[:, 1] < 89.999  # exclude the exact-90 divergence
    theta_at_max = verts[keep][np.argmax(verts[keep][:, 0]), 1]
    assert theta_at_max == pytest.approx(89.825, abs=5e-3)


def test_sweep_csv_schema(tmp_path, params_default):
    spec = SweepSpec(
        x_axis=AxisSpec("sqrt_s_aa", 1e-12, 1e-9, 4, "log"),
        y_axis=AxisSpec("theta0_deg", 0.0, 90.0, 4),
        quantity="gamma_accel",
    )
    res = run_sweep(spec, params_default)
    path = tmp_path / "grid.csv"
    write_sweep_csv(res, path, header_comments=["quantity=gamma_accel"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# quantity=gamma_accel"
    assert lines[1] == "sqrt_s_aa_raw,theta0_deg,gamma_tau"
    assert len(lines) == 2 + 16


def test_unbounded_sentinel_written_as_empty_field(tmp_path, params_default):
    spec = SweepSpec(
        x_axis=AxisSpec("theta0_deg", 89.0, 90.0, 3),
        quantity="bound_accel",
        fixed={"a_m_s2": 9.81},
    )
    res = run_sweep(spec, params_default)
    assert res.grid[-1] == math.inf  # exactly 90 deg
    path = tmp_path / "bounds.csv"
    write_sweep_csv(res, path)
    last = path.read_text().splitlines()[-1]
    assert last.endswith(",")  # empty value field


def test_contour_csv_schema(tmp_path, params_default):
    res = run_sweep(fig3_spec(41, 41), params_default)
    path = tmp_path / "contours.csv"
    write_contours_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "level,segment_id,x,y"
    assert len(lines) > 2
    level, seg, x, y = lines[1].split(",")
    assert float(level) == 1.0
    assert int(seg) == 0
    assert float(x) > 0 and 0.0 <= float(y) <= 0.06
