import math
from dataclasses import replace

import numpy as np
import pytest

from sgdephase import (
    ExperimentParams,
    PsdSpec,
    coherence,
    combine_rates,
    derive,
    gamma_accel_near_perp,
    gamma_accel_white,
    gamma_colored,
    gamma_tilt_white,
    mean_decoherence_time,
)
from sgdephase.errors import ApproximationDomainError, InvalidParameterError

# Frozen by direct evaluation of the closed forms at B0 = 1 mT (independent
# scratch computation, not a regression snapshot of the implementation).
GAMMA_PER_S_ACCEL_A0 = 7.03189407059166e23       # (theta0=0, a=0)
GAMMA_PER_S_ACCEL_A3 = 6.885632322407878e27      # (theta0=0, a=3)
GAMMA_PER_S_TILT = 1.849280034952569e21          # (theta0=90deg, a=9.81)


def test_accel_rate_coefficient_zero_mean_acceleration(params_axis, model_axis):
    res = gamma_accel_white(model_axis, params_axis, 1.0)
    assert res.gamma == pytest.approx(GAMMA_PER_S_ACCEL_A0, rel=1e-9)
    assert res.phase_variance == res.gamma
    assert res.gamma_tau == pytest.approx(res.gamma * model_axis.tau, rel=1e-15)


def test_accel_rate_coefficient_three_ms2():
    p = ExperimentParams(theta0=0.0, accel=3.0)
    res = gamma_accel_white(derive(p), p, 1.0)
    assert res.gamma == pytest.approx(GAMMA_PER_S_ACCEL_A3, rel=1e-9)


def test_tilt_rate_coefficient(params_default, model_default):
    res = gamma_tilt_white(model_default, params_default, 1.0)
    assert res.gamma == pytest.approx(GAMMA_PER_S_TILT, rel=1e-9)


def test_accel_zero_at_perpendicular(params_default, model_default):
    assert gamma_accel_white(model_default, params_default, 1e-20).gamma == 0.0


def test_tilt_zero_without_acceleration():
    p = ExperimentParams(accel=0.0)
    assert gamma_tilt_white(derive(p), p, 1e-20).gamma == 0.0


def test_tilt_zero_at_aligned_axis():
    p = ExperimentParams(theta0=0.0)
    assert gamma_tilt_white(derive(p), p, 1e-20).gamma == 0.0


def test_negative_levels_raise(params_default, model_default):
    with pytest.raises(InvalidParameterError):
        gamma_accel_white(model_default, params_default, -1.0)
    with pytest.raises(InvalidParameterError):
        gamma_tilt_white(model_default, params_default, -1.0)


# ---------------------------------------------------------------------------
# colored path
# ---------------------------------------------------------------------------


def _random_params(rng):
    return ExperimentParams(
        mass=float(rng.uniform(3e-16, 3e-15)),
        eta0=float(rng.uniform(2e3, 1.2e4)),
        b0=float(rng.uniform(3e-4, 3e-3)),
        accel=float(rng.uniform(0.0, 12.0)),
        theta0=float(rng.uniform(0.0, math.pi / 2 - 0.05)),
    )


def test_colored_flat_matches_closed_form_across_draws():
    rng = np.random.default_rng(101)
    level = 1e-22
    for _ in range(50):
        p = _random_params(rng)
        m = derive(p)
        flat = PsdSpec.tabulated([0.0, 60.0 * m.omega0], [level, level])
        for channel, white in (
            ("accel", gamma_accel_white(m, p, level)),
            ("tilt", gamma_tilt_white(m, p, level)),
        ):
            colored = gamma_colored(m, p, channel, flat)
            if white.gamma == 0.0:
                assert colored.gamma == 0.0
            else:
                assert colored.gamma == pytest.approx(white.gamma, rel=1e-6)


def test_colored_tail_support_is_suppressed(params_axis, model_axis):
    w0 = model_axis.omega0
    level = 1e-22
    tail = PsdSpec.tabulated(
        [0.0, 9.99 * w0, 10.0 * w0, 12.0 * w0, 12.01 * w0, 60.0 * w0],
        [0.0, 0.0, level, level, 0.0, 0.0],
    )
    flat = PsdSpec.tabulated([0.0, 60.0 * w0], [level, level])
    g_tail = gamma_colored(model_axis, params_axis, "accel", tail)
    g_flat = gamma_colored(model_axis, params_axis, "accel", flat)
    assert g_tail.gamma < 1e-4 * g_flat.gamma


def test_colored_zero_psd(params_axis, model_axis):
    zero = PsdSpec.tabulated([0.0, 1e5], [0.0, 0.0])
    assert gamma_colored(model_axis, params_axis, "accel", zero).gamma == 0.0
    assert gamma_colored(model_axis, params_axis, "accel", PsdSpec.white(0.0)).gamma == 0.0


def test_scaling_linearity(params_axis, model_axis, params_default, model_default):
    base = 1e-22
    for k in (1e-3, 1.0, 1e3):
        accel = gamma_accel_white(model_axis, params_axis, k * base)
        assert accel.gamma == pytest.approx(k * GAMMA_PER_S_ACCEL_A0 * base, rel=1e-9)
        tilt = gamma_tilt_white(model_default, params_default, k * base)
        assert tilt.gamma == pytest.approx(k * GAMMA_PER_S_TILT * base, rel=1e-9)
        flat = PsdSpec.tabulated([0.0, 60.0 * model_axis.omega0], [k * base, k * base])
        colored = gamma_colored(model_axis, params_axis, "accel", flat)
        assert colored.gamma == pytest.approx(k * GAMMA_PER_S_ACCEL_A0 * base, rel=1e-6)


def test_monotonic_in_force_magnitude(params_axis):
    # growing |Ctilde| (a moves away from the cancellation) raises the rate
    level = 1e-22
    gammas = []
    for a in (0.03, 0.1, 1.0, 10.0):
        p = replace(params_axis, accel=a)
        gammas.append(gamma_accel_white(derive(p), p, level).gamma)
    assert all(g2 > g1 for g1, g2 in zip(gammas, gammas[1:]))


def test_tilt_rate_exact_in_a_and_theta():
    level = 1e-20
    p1 = ExperimentParams(theta0=math.pi / 3, accel=2.0)
    p2 = ExperimentParams(theta0=math.pi / 3, accel=4.0)
    g1 = gamma_tilt_white(derive(p1), p1, level).gamma
    g2 = gamma_tilt_white(derive(p2), p2, level).gamma
    assert g2 / g1 == pytest.approx(4.0, rel=1e-12)
    p3 = ExperimentParams(theta0=math.pi / 6, accel=2.0)
    g3 = gamma_tilt_white(derive(p3), p3, level).gamma
    ratio = (math.sin(math.pi / 3) / math.sin(math.pi / 6)) ** 2
    assert g1 / g3 == pytest.approx(ratio, rel=1e-12)


def test_interior_local_minimum_between_89_and_90_degrees():
    # Gamma(theta) dips at theta_m, rises again, then decays to 0 at exactly
    # 90 deg; the operating point is the strict interior local minimum.
    level = 1e-12
    thetas = np.linspace(math.radians(89.0), math.radians(90.0), 2001)
    gammas = []
    for theta in thetas:
        p = ExperimentParams(theta0=float(theta), accel=9.81)
        gammas.append(gamma_accel_white(derive(p), p, level).gamma)
    gammas = np.array(gammas)
    local_minima = [
        i for i in range(1, len(gammas) - 1)
        if gammas[i] < gammas[i - 1] and gammas[i] < gammas[i + 1]
    ]
    assert len(local_minima) == 1
    assert math.degrees(thetas[local_minima[0]]) == pytest.approx(89.825, abs=0.005)


# ---------------------------------------------------------------------------
# near-perpendicular Taylor form
# ---------------------------------------------------------------------------


def test_near_perp_zero_deviation(params_default, model_default):
    assert gamma_accel_near_perp(model_default, params_default, 1e-20, 0.0).gamma == 0.0


def test_near_perp_matches_full_formula_without_acceleration():
    dev = 1e-3
    p = ExperimentParams(theta0=math.pi / 2 - dev, accel=0.0)
    m = derive(p)
    level = 1e-18
    full = gamma_accel_white(m, p, level)
    approx = gamma_accel_near_perp(m, p, level, dev)
    assert approx.gamma == pytest.approx(full.gamma, rel=1e-4)


def test_near_perp_breaks_down_near_cancellation():
    dev = 3e-3
    p = ExperimentParams(theta0=math.pi / 2 - dev, accel=9.81)
    m = derive(p)
    level = 1e-18
    with pytest.raises(ApproximationDomainError):
        gamma_accel_near_perp(m, p, level, dev)
    # with the domain check off, the deviation from the full formula is O(1)
    approx = gamma_accel_near_perp(m, p, level, dev, enforce_domain=False)
    full = gamma_accel_white(m, p, level)
    assert abs(approx.gamma / full.gamma - 1.0) > 0.2


def test_near_perp_domain_limits(params_default, model_default):
    with pytest.raises(ApproximationDomainError):
        gamma_accel_near_perp(model_default, params_default, 1e-20, 0.02)
    with pytest.raises(ApproximationDomainError):
        gamma_accel_near_perp(model_default, params_default, 1e-20, -1e-3)


# ---------------------------------------------------------------------------
# coherence and combination
# ---------------------------------------------------------------------------


def test_coherence_values():
    assert coherence(0.0) == 1.0
    assert coherence(1.0) == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert coherence(1.0) == pytest.approx(0.3679, rel=1e-4)
    with pytest.raises(InvalidParameterError):
        coherence(-0.1)


def test_mean_decoherence_time():
    assert mean_decoherence_time(100.0) == pytest.approx(0.01, rel=1e-12)
    assert mean_decoherence_time(0.0) == math.inf
    with pytest.raises(InvalidParameterError):
        mean_decoherence_time(-1.0)


def test_combine_rates():
    assert combine_rates([]) == 0.0
    assert combine_rates([2.5]) == 2.5
    assert combine_rates([3.0, 4.0]) == pytest.approx(5.0, rel=1e-15)
    assert combine_rates([7.0, 0.0, 0.0]) == 7.0
    rng = np.random.default_rng(17)
    rates = rng.uniform(0.0, 10.0, 6)
    total = combine_rates(rates)
    assert total >= rates.max()
    assert total <= rates.sum()
    with pytest.raises(InvalidParameterError):
        combine_rates([1.0, -2.0])


def test_result_coherence_consistency(params_default, model_default):
    res = gamma_tilt_white(model_default, params_default, 1e-22)
    assert res.coherence == pytest.approx(math.exp(-res.gamma_tau), rel=1e-15)
    assert 0.0 < res.coherence <= 1.0
