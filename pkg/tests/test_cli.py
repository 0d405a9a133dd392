import io
import json
import math
from contextlib import redirect_stderr, redirect_stdout

import pytest

from sgdephase.cli import main
from sgdephase.config import parse_config
from sgdephase.errors import ConfigError, InvalidParameterError


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------


def test_empty_config_is_defaults():
    cfg = parse_config("")
    assert cfg.params.mass == 1e-15
    assert cfg.params.eta0 == 6e3
    assert cfg.params.b0 == 1e-3
    assert cfg.params.accel == 9.81
    assert cfg.params.theta0 == pytest.approx(math.pi / 2, rel=1e-15)
    assert cfg.seed == 0 and cfg.fmt == "csv"


def test_config_degree_conversion_and_comments():
    cfg = parse_config("# a comment\ntheta0_deg=89  # trailing\n\nseed=7\n")
    assert cfg.params.theta0 == pytest.approx(math.radians(89.0), rel=1e-15)
    assert cfg.seed == 7
    assert cfg.was_set("theta0_deg") and not cfg.was_set("a_m_s2")


def test_config_validates_physical_invariants():
    with pytest.raises(InvalidParameterError):
        parse_config("mass_kg=-1\n")


def test_config_unknown_key_named():
    with pytest.raises(ConfigError, match="frequency_hz"):
        parse_config("frequency_hz=10\n")


def test_config_unit_suffix_mismatch():
    with pytest.raises(ConfigError, match="mass_kg"):
        parse_config("mass=1e-15\n")
    with pytest.raises(ConfigError, match="theta0_deg"):
        parse_config("theta0_rad=1.0\n")


def test_config_choice_and_number_validation():
    with pytest.raises(ConfigError):
        parse_config("format=yaml\n")
    with pytest.raises(ConfigError):
        parse_config("gamma_tau_target=-1\n")
    with pytest.raises(ConfigError):
        parse_config("n_shots=0\n")
    with pytest.raises(ConfigError):
        parse_config("rho=2\n")
    with pytest.raises(ConfigError):
        parse_config("just a line\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def test_derive_json(tmp_path):
    out = tmp_path / "derive.json"
    code, _, _ = run_cli("derive", "--format", "json", "--out", str(out))
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["result"]["omega0_rad_s"] == pytest.approx(424.36, rel=1e-4)
    assert payload["result"]["tau_s"] == pytest.approx(0.014806, rel=1e-4)
    assert payload["params"]["mass_kg"] == 1e-15
    assert payload["version"]


def test_gamma_requires_level():
    code, _, err = run_cli("gamma", "--channel", "accel")
    assert code == 2
    assert err.startswith("error: ConfigError:")
    assert "sqrt_s_aa" in err


def test_gamma_with_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("theta0_deg=0\na_m_s2=0\nsqrt_s_aa=1e-12\n")
    out = tmp_path / "gamma.json"
    code, _, _ = run_cli("gamma", "--config", str(cfg), "--channel", "accel",
                         "--format", "json", "--out", str(out))
    assert code == 0
    result = json.loads(out.read_text())["result"]
    assert result["gamma"] == pytest.approx(7.0319e23 * 1e-24, rel=1e-4)
    assert result["coherence"] == pytest.approx(
        math.exp(-result["gamma_tau"]), rel=1e-12
    )


def test_gamma_psd_file(tmp_path):
    psd = tmp_path / "flat.csv"
    w_hi = 60.0 * 424.359
    psd.write_text(f"omega_rad_s,psd_value\n0.0,1e-24\n{w_hi},1e-24\n")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("theta0_deg=0\na_m_s2=0\n")
    out = tmp_path / "gamma.json"
    code, _, _ = run_cli("gamma", "--config", str(cfg), "--channel", "accel",
                         "--psd-file", str(psd), "--format", "json", "--out", str(out))
    assert code == 0
    result = json.loads(out.read_text())["result"]
    assert result["gamma"] == pytest.approx(7.0319e23 * 1e-24, rel=1e-4)


def test_bound_unbounded_sentinel_json(tmp_path):
    out = tmp_path / "bound.json"
    code, _, _ = run_cli("bound", "--channel", "accel", "--format", "json",
                         "--out", str(out))  # defaults: theta0 = 90 deg
    assert code == 0
    result = json.loads(out.read_text())["result"]
    assert result["sqrt_psd_bound_raw"] is None
    assert result["unbounded"] is True


def test_bound_with_target(tmp_path):
    out = tmp_path / "bound.json"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("theta0_deg=0\na_m_s2=0\n")
    code, _, _ = run_cli("bound", "--config", str(cfg), "--channel", "accel",
                         "--gamma-tau-target", "0.1", "--format", "json",
                         "--out", str(out))
    assert code == 0
    result = json.loads(out.read_text())["result"]
    assert result["sqrt_psd_bound_raw"] == pytest.approx(
        9.8003e-12 * math.sqrt(0.1), rel=1e-4
    )


def test_table1_values(tmp_path):
    out = tmp_path / "table1.json"
    code, _, _ = run_cli("table1", "--format", "json", "--out", str(out))
    assert code == 0
    rows = json.loads(out.read_text())["rows"]
    by_key = {(r["channel"], round(r["theta0_deg"], 3), round(r["a_m_s2"], 3)): r
              for r in rows}
    row_am = by_key[("accel", 0.0, 0.03)]
    assert row_am["sqrt_psd_bound_raw"] == pytest.approx(2.65e-9, rel=5e-3)
    assert row_am["ratio"] == pytest.approx(0.265, abs=0.01)
    assert by_key[("accel", 0.0, 0.0)]["sqrt_psd_bound_raw"] == pytest.approx(9.80e-12, rel=5e-3)
    assert by_key[("accel", 0.0, 3.0)]["sqrt_psd_bound_raw"] == pytest.approx(9.90e-14, rel=5e-3)
    assert by_key[("accel", 89.0, 9.81)]["sqrt_psd_bound_raw"] == pytest.approx(1.19e-10, rel=5e-3)
    assert by_key[("accel", 89.825, 9.81)]["sqrt_psd_bound_raw"] == pytest.approx(8.67e-7, rel=5e-3)
    assert by_key[("tilt", 90.0, 9.81)]["sqrt_psd_bound_raw"] == pytest.approx(1.91e-10, rel=5e-3)
    for row in rows:
        assert 0.1 <= row["ratio"] <= 10.0


def test_kernel_integral_stdout():
    code, out, _ = run_cli("kernel", "--integral")
    assert code == 0
    assert "kernel_integral" in out
    value = float(out.strip().splitlines()[-1])
    assert value == pytest.approx(14.8044, rel=1e-5)


def test_kernel_grid(tmp_path):
    out = tmp_path / "kernel.csv"
    code, _, _ = run_cli("kernel", "--grid=-5:5:101", "--out", str(out))
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "xi,f_aa"
    assert len(lines) == 102


def test_mc_linear_accel_benchmark(tmp_path):
    out = tmp_path / "mc.json"
    code, _, _ = run_cli("mc", "--channel", "accel", "--n-shots", "400",
                         "--seed", "3", "--format", "json", "--out", str(out))
    assert code == 0
    result = json.loads(out.read_text())["result"]
    # benchmark geometry: accel channel falls back to theta0 = 0, a = 0
    assert result["theta0_deg_used"] == 0.0
    assert result["a_m_s2_used"] == 0.0
    assert abs(result["z_score"]) < 3.0
    assert result["n_shots"] == 400


def test_mc_full_action_smoke(tmp_path):
    out = tmp_path / "mc_fa.json"
    code, _, _ = run_cli("mc", "--channel", "tilt", "--method", "full-action",
                         "--n-shots", "150", "--steps", "2048", "--seed", "4",
                         "--format", "json", "--out", str(out))
    assert code == 0
    result = json.loads(out.read_text())["result"]
    assert result["method"] == "full-action"
    assert abs(result["z_score"]) < 3.0


def test_mc_explicit_geometry_respected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("theta0_deg=45\na_m_s2=2.0\nsqrt_s_aa=1e-13\n")
    out = tmp_path / "mc.json"
    code, _, _ = run_cli("mc", "--config", str(cfg), "--channel", "accel",
                         "--n-shots", "200", "--format", "json", "--out", str(out))
    assert code == 0
    result = json.loads(out.read_text())["result"]
    assert result["theta0_deg_used"] == pytest.approx(45.0, rel=1e-12)
    assert result["a_m_s2_used"] == 2.0


def test_sweep_writes_grid_contours_and_plot(tmp_path):
    out = tmp_path / "fig3.csv"
    code, _, _ = run_cli(
        "sweep", "--quantity", "gamma_accel",
        "--x", "sqrt_s_aa:1e-14:1e-8:25:log", "--y", "a_m_s2:0:0.06:20",
        "--fixed", "theta0_deg=0", "--level", "1.0",
        "--out", str(out), "--plot",
    )
    assert code == 0
    assert out.exists()
    assert (tmp_path / "fig3_contours.csv").exists()
    png = tmp_path / "fig3.png"
    assert png.exists() and png.stat().st_size > 1000


def test_table1_plot(tmp_path):
    out = tmp_path / "t1.csv"
    code, _, _ = run_cli("table1", "--out", str(out), "--plot")
    assert code == 0
    assert (tmp_path / "t1.png").exists()


def test_byte_identical_reruns(tmp_path):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    for out in (out_a, out_b):
        code, _, _ = run_cli("table1", "--out", str(out))
        assert code == 0
    assert out_a.read_bytes() == out_b.read_bytes()

    mc_a = tmp_path / "mc_a.json"
    mc_b = tmp_path / "mc_b.json"
    for out in (mc_a, mc_b):
        code, _, _ = run_cli("mc", "--channel", "tilt", "--n-shots", "200",
                             "--seed", "9", "--format", "json", "--out", str(out))
        assert code == 0
    assert mc_a.read_bytes() == mc_b.read_bytes()


def test_error_line_format_and_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mass_kg=-1\n")
    code, out, err = run_cli("derive", "--config", str(cfg))
    assert code == 2
    assert err.startswith("error: InvalidParameterError:")
    assert out == ""


def test_json_round_trip(tmp_path):
    out = tmp_path / "derive.json"
    run_cli("derive", "--format", "json", "--out", str(out))
    payload = json.loads(out.read_text())
    assert json.loads(json.dumps(payload)) == payload
