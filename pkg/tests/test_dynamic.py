"""Time-dynamic schemes, their scheduler, and policy evaluation."""

import numpy as np
import pytest

from ropeflow.dynamic import (
    PePolicy,
    ScaleSchedule,
    WAVELENGTH_COLUMNS,
    dy_ntk_frequencies,
    dy_pi_map,
    dy_yarn_frequencies,
    dy_yarn_ramp,
    kappa,
    lumina_time_aware_frequencies,
    policy_axis_eval,
    policy_tau,
    wavelength_report,
)
from ropeflow.extrapolation import (
    RampParams,
    attention_scale,
    ntk_frequencies,
    yarn_frequencies,
    yarn_ramp,
)
from ropeflow.rope2d import build_frequency_table

TABLE = build_frequency_table(34, 1e-4)
RAMP = RampParams(alpha=1, beta=32)


def sched(ls=2.0, lt=2.0, placement="exponent", target="by_parts_thresholds"):
    return ScaleSchedule(lambda_s=ls, lambda_t=lt, placement=placement, target=target)


# -- scheduler ----------------------------------------------------------------


def test_kappa_values():
    assert kappa(0.0, sched()) == 0.0
    assert kappa(1.0, sched(2, 2)) == 2.0
    assert kappa(0.5, sched(2, 2)) == 0.5


def test_kappa_endpoints_any_params():
    for ls in (0.5, 1.0, 3.0):
        for lt in (0.5, 1.0, 2.0):
            assert kappa(0.0, sched(ls, lt)) == 0.0
            assert kappa(1.0, sched(ls, lt)) == ls


def test_kappa_monotone():
    ts = np.linspace(0, 1, 101)
    vals = [kappa(t, sched(2, 0.7)) for t in ts]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_kappa_time_domain():
    with pytest.raises(ValueError):
        kappa(-0.1, sched())
    with pytest.raises(ValueError):
        kappa(1.1, sched())


def test_schedule_validation():
    with pytest.raises(ValueError):
        ScaleSchedule(lambda_s=0.0)
    with pytest.raises(ValueError):
        ScaleSchedule(lambda_t=-1.0)
    with pytest.raises(ValueError):
        ScaleSchedule(placement="sideways")
    with pytest.raises(ValueError):
        ScaleSchedule(target="everything")


# -- dynamic position interpolation ---------------------------------------------


def test_dy_pi_values():
    assert dy_pi_map(64.0, 2.0, 0.0, sched()) == 64.0
    assert dy_pi_map(64.0, 2.0, 1.0, sched(1, 1)) == 32.0
    assert dy_pi_map(64.0, 2.0, 1.0, sched(2, 1)) == 16.0


# -- dynamic frequency compression ----------------------------------------------


def test_dy_ntk_exponent_placement():
    assert np.array_equal(dy_ntk_frequencies(TABLE, 2.0, 0.0, sched()).theta, TABLE.theta)
    static = ntk_frequencies(TABLE, 2.0)
    dyn = dy_ntk_frequencies(TABLE, 2.0, 1.0, sched(1, 1))
    np.testing.assert_array_equal(dyn.theta, static.theta)
    out = dy_ntk_frequencies(TABLE, 2.0, 1.0, sched(2, 1))
    assert out.theta[16] == TABLE.theta[16] / 4.0  # exponent kappa*1 = 2


def test_dy_ntk_multiplicative_placement():
    mult = sched(2, 1, placement="multiplicative")
    # t=0: kappa clamps to 1/s, base collapses to 1, table untouched
    assert np.array_equal(dy_ntk_frequencies(TABLE, 2.0, 0.0, mult).theta, TABLE.theta)
    # any t where kappa(t) < 1/s stays clamped
    assert np.array_equal(dy_ntk_frequencies(TABLE, 2.0, 0.2, mult).theta, TABLE.theta)
    # full strength: base s*kappa(1) = s*lambda_s
    out = dy_ntk_frequencies(TABLE, 2.0, 1.0, mult)
    exps = 2.0 * np.arange(34) / 32
    np.testing.assert_allclose(out.theta, TABLE.theta / (4.0**exps), rtol=1e-15)


def test_dy_ntk_time_monotone_unlocking():
    # effective frequency is nonincreasing in t for the exponent placement
    prev = None
    for t in np.linspace(0, 1, 9):
        cur = dy_ntk_frequencies(TABLE, 2.0, float(t), sched(2, 2)).theta
        if prev is not None:
            assert np.all(cur <= prev + 1e-18)
        prev = cur


# -- dynamic by-parts -------------------------------------------------------------


def test_dy_yarn_ramp_matches_static_at_unit_time():
    for r in (0.0, 0.5, 1.0, 7.3, 16.5, 32.0, 100.0):
        assert dy_yarn_ramp(r, RAMP, 1.0, 2.0) == yarn_ramp(r, RAMP)


def test_dy_yarn_ramp_collapse_at_zero_time():
    assert dy_yarn_ramp(0.5, RAMP, 0.0, 2.0) == 1.0
    assert dy_yarn_ramp(100.0, RAMP, 0.0, 2.0) == 1.0
    out = dy_yarn_ramp(np.array([0.0, 0.1, 5.0]), RAMP, 0.0, 2.0)
    np.testing.assert_array_equal(out, [0.0, 1.0, 1.0])


def test_dy_yarn_ramp_midpoint_value():
    # kappa = 0.5 shifts thresholds to (0.5, 16): gamma(1) = 0.5/15.5
    val = dy_yarn_ramp(1.0, RAMP, 0.5, 1.0)
    np.testing.assert_allclose(val, 1.0 / 31.0, rtol=1e-15)


def test_dy_yarn_threshold_ordering():
    for t in (1e-3, 0.2, 0.7, 1.0):
        k = t**2.0
        assert RAMP.alpha * k < RAMP.beta * k


def test_dy_yarn_frequencies_static_recovery():
    static = yarn_frequencies(TABLE, 2.0, 1024, RAMP)
    dyn = dy_yarn_frequencies(TABLE, 2.0, 1024, RAMP, 1.0, sched())
    np.testing.assert_array_equal(dyn.theta, static.theta)


def test_dy_yarn_frequencies_vanilla_at_completion():
    for target in ("by_parts_thresholds", "ntk_term", "both"):
        out = dy_yarn_frequencies(TABLE, 2.0, 1024, RAMP, 0.0, sched(target=target))
        np.testing.assert_array_equal(out.theta, TABLE.theta)


def test_dy_yarn_frequencies_shutdown_at_unit_scale():
    for t in (0.0, 0.3, 1.0):
        out = dy_yarn_frequencies(TABLE, 1.0, 1024, RAMP, t, sched())
        np.testing.assert_array_equal(out.theta, TABLE.theta)


def test_dy_yarn_ntk_term_target():
    # the compressed leg is exponentiated by kappa; at t=1, lambda_s=2 the
    # fully-compressed dimensions sit at theta/s^2
    L = 10  # all rotations far below alpha=1 except dimension 0
    out = dy_yarn_frequencies(TABLE, 2.0, L, RAMP, 1.0, sched(2, 1, target="ntk_term"))
    np.testing.assert_allclose(out.theta[5:], TABLE.theta[5:] / 4.0, rtol=1e-15)


# -- time-aware baseline -----------------------------------------------------------


def test_lumina_endpoints():
    pf0, t0 = lumina_time_aware_frequencies(TABLE, 2.0, 1024, 0.0)
    assert pf0 == 1.0
    np.testing.assert_array_equal(t0.theta, ntk_frequencies(TABLE, 2.0).theta)
    pf1, t1 = lumina_time_aware_frequencies(TABLE, 2.0, 1024, 1.0)
    assert pf1 == 1.0 / 2.0
    np.testing.assert_array_equal(t1.theta, TABLE.theta)


def test_lumina_shutdown():
    for t in (0.0, 0.4, 1.0):
        pf, table = lumina_time_aware_frequencies(TABLE, 1.0, 1024, t)
        assert pf == 1.0
        np.testing.assert_array_equal(table.theta, TABLE.theta)


# -- policy dispatch ------------------------------------------------------------------


def test_policy_requires_time_for_dynamic_kinds():
    pol = PePolicy(kind="dy_ntk")
    with pytest.raises(ValueError):
        policy_axis_eval(pol, TABLE, 1024, 2048)


def test_policy_rejects_unknown_kind():
    with pytest.raises(ValueError):
        PePolicy(kind="yarnn")


def test_policy_axis_eval_dispatch():
    s = 2.0
    evals = {
        kind: policy_axis_eval(PePolicy(kind=kind), TABLE, 1024, 2048, t=0.5)
        for kind in ("vanilla", "pi", "ntk", "yarn", "dy_pi", "dy_ntk", "dy_yarn",
                     "lumina_time_aware")
    }
    assert evals["vanilla"].position_factor == 1.0
    assert evals["pi"].position_factor == 1.0 / s
    np.testing.assert_array_equal(evals["ntk"].table.theta, ntk_frequencies(TABLE, s).theta)
    assert evals["dy_pi"].position_factor == 1.0 / s ** kappa(0.5, ScaleSchedule())
    assert evals["lumina_time_aware"].position_factor == 1.0 / s**0.5


def test_policy_eval_rejects_shrinking():
    with pytest.raises(ValueError):
        policy_axis_eval(PePolicy(kind="pi"), TABLE, 1024, 512)


def test_policy_tau():
    assert policy_tau(PePolicy(kind="vanilla"), 2.0, 2.0) == 1.0
    assert policy_tau(PePolicy(kind="pi"), 2.0, 2.0) == 1.0
    assert policy_tau(PePolicy(kind="yarn"), 2.0, 2.0) == attention_scale(2.0)
    # geometric mean across unequal axes
    np.testing.assert_allclose(
        policy_tau(PePolicy(kind="dy_yarn"), 2.0, 8.0), attention_scale(4.0), rtol=1e-15
    )
    assert policy_tau(PePolicy(kind="yarn", attention_scale_enabled=False), 2.0, 2.0) == 1.0
    assert policy_tau(PePolicy(kind="pi", attention_scale_enabled=True), 4.0, 4.0) == attention_scale(4.0)


def test_policy_serialization_roundtrip():
    pol = PePolicy(
        kind="dy_yarn",
        ramp=RampParams(alpha=0.25, beta=2.0),
        schedule=ScaleSchedule(lambda_s=1.5, lambda_t=0.5, placement="multiplicative", target="both"),
        attention_scale_enabled=True,
    )
    assert PePolicy.from_dict(pol.to_dict()) == pol


# -- wavelength report ---------------------------------------------------------------


def test_wavelength_report_vanilla_rows():
    rows = wavelength_report(PePolicy(kind="vanilla"), TABLE, 1024, 2048, times=[0.2, 0.8])
    assert len(rows) == 2 * 2 * TABLE.D  # times x axes x dims
    for kind, t, axis, d, theta_eff, wl in rows:
        assert kind == "vanilla"
        assert theta_eff == TABLE.theta[d]
        np.testing.assert_allclose(wl, TABLE.wavelength[d], rtol=1e-15)


def test_wavelength_report_dynamic_rows():
    pol = PePolicy(kind="dy_ntk", schedule=ScaleSchedule(lambda_s=1.0, lambda_t=1.0))
    ntk_rows = wavelength_report(PePolicy(kind="ntk"), TABLE, 1024, 2048, times=[1.0])
    dy_rows = wavelength_report(pol, TABLE, 1024, 2048, times=[1.0])
    assert [r[3:] for r in ntk_rows] == [r[3:] for r in dy_rows]
    dy0 = wavelength_report(pol, TABLE, 1024, 2048, times=[0.0])
    van = wavelength_report(PePolicy(kind="vanilla"), TABLE, 1024, 2048, times=[0.0])
    assert [r[3:] for r in dy0] == [r[3:] for r in van]


def test_wavelength_report_column_contract():
    assert WAVELENGTH_COLUMNS == ("kind", "t", "axis", "d", "theta_eff", "wavelength_eff")
    rows = wavelength_report(PePolicy(kind="pi"), TABLE, (8, 16), (16, 16), times=[0.0])
    axes = {r[2] for r in rows}
    assert axes == {"x", "y"}
    # per-axis contexts: y axis is scaled by 2, x axis untouched
    y_rows = [r for r in rows if r[2] == "y" and r[3] == 0]
    x_rows = [r for r in rows if r[2] == "x" and r[3] == 0]
    assert y_rows[0][4] == TABLE.theta[0] / 2.0
    assert x_rows[0][4] == TABLE.theta[0]
