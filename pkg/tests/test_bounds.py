import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from platoon_dss.bounds import (AUGMENTED, KINDS, MONTEIL, ORIGINAL, PROP1, BoundInputs, DssBound,
                                bound_curve, bound_envelope, eval_bound, scenario_bound_inputs,
                                sup_time_varying, sup_total)
from platoon_dss.conditions import CertificateError, check_conditions
from platoon_dss.controller import REFERENCE_GAINS
from platoon_dss.model import AugmentedState, DisturbanceSpec, PlatoonConfig, VehicleParams, VehicleSpec

INPUTS = BoundInputs(cbar_sq=0.5, gain_k=2.0, init_err=1.0, init_integral_err=0.5,
                     sup_w=0.2, sup_w_total=1.2, init_err_z=1.3)


def test_closed_form_examples():
    t = 2.0
    e, g = math.exp(-1.0), (1 - math.exp(-1.0)) / 0.5
    assert eval_bound(DssBound("eq5", INPUTS), t) == pytest.approx(e * 1.0 + g * 1.2)
    assert eval_bound(DssBound("eq14", INPUTS), t) == pytest.approx(2.0 * (e * 1.3 + g * 0.2))
    assert eval_bound(DssBound("eq16", INPUTS), t) == pytest.approx(2.0 * (e * 1.5 + g * 0.2))
    assert eval_bound(DssBound("eq17", INPUTS), t) == pytest.approx(2.0 * (e * 1.0 + g * 1.2))


def test_values_at_time_zero_and_envelope():
    assert eval_bound(DssBound(ORIGINAL, INPUTS), 0.0) == pytest.approx(3.0)
    assert bound_envelope(DssBound(ORIGINAL, INPUTS)) == pytest.approx(3.0)
    assert bound_envelope(DssBound(MONTEIL, INPUTS)) == pytest.approx(2.0 * 1.2 / 0.5)
    assert eval_bound(DssBound(MONTEIL, INPUTS), 1e4) == pytest.approx(4.8)


def test_augmented_bound_with_unit_gain_reduces_to_prop1_form():
    p = BoundInputs(cbar_sq=0.3, gain_k=1.0, init_err=0.7, init_err_z=0.7, sup_w=0.4, sup_w_total=0.4)
    t = np.linspace(0, 20, 50)
    np.testing.assert_allclose(eval_bound(DssBound(AUGMENTED, p), t), eval_bound(DssBound(PROP1, p), t))


def test_small_time_precision():
    p = BoundInputs(cbar_sq=1e-3, sup_w_total=1.0)
    # growth term is t to first order
    assert eval_bound(DssBound(PROP1, p), 1e-9) == pytest.approx(1e-9, rel=1e-9)


def test_errors():
    with pytest.raises(CertificateError):
        eval_bound(DssBound(PROP1, BoundInputs(cbar_sq=0.0)), 1.0)
    with pytest.raises(ValueError):
        eval_bound(DssBound(PROP1, INPUTS), -1.0)
    with pytest.raises(ValueError):
        DssBound("eq99", INPUTS)
    with pytest.raises(ValueError):
        bound_curve(DssBound(PROP1, INPUTS), [0.0, 2.0, 1.0])


def test_bound_curve_pairs():
    curve = bound_curve(DssBound(ORIGINAL, INPUTS), [0.0, 1.0])
    assert [t for t, _ in curve] == [0.0, 1.0]
    assert curve[0][1] == pytest.approx(3.0)


positive = st.floats(0.0, 10.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 2.0), positive, positive, positive, positive, positive, st.floats(0, 50))
def test_bounds_nonnegative_and_monotone_between_limits(c, k, x0, xi0, w, wt, t):
    p = BoundInputs(cbar_sq=c, gain_k=1.0 + k, init_err=x0, init_integral_err=xi0,
                    sup_w=w, sup_w_total=wt, init_err_z=math.hypot(x0, xi0))
    for kind in KINDS:
        b = DssBound(kind, p)
        val = eval_bound(b, t)
        assert val >= 0.0
        assert val <= bound_envelope(b) * (1 + 1e-12) + 1e-300


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3).filter(lambda a: abs(a) > 1e-3), st.floats(0.01, 1.0), st.floats(0.2, 3.0))
def test_sup_of_damped_sinusoid_matches_closed_form(amp, decay, freq):
    spec = DisturbanceSpec(amp=amp, decay=decay, freq=freq)
    t_star = math.atan(freq / decay) / freq
    ref = abs(amp) * math.sin(freq * t_star) * math.exp(-decay * t_star)
    assert sup_time_varying(spec) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(-3, 3), st.floats(0.01, 1.0), st.floats(0.2, 3.0))
def test_sup_total_against_dense_grid(w_bar, amp, decay, freq):
    spec = DisturbanceSpec(w_bar=w_bar, amp=amp, decay=decay, freq=freq)
    t = np.linspace(0.0, 4 * math.pi / freq, 200001)
    brute = np.abs(w_bar + amp * np.sin(freq * t) * np.exp(-decay * t)).max()
    got = sup_total(spec)
    assert got >= brute - 1e-12
    assert got == pytest.approx(brute, rel=1e-6, abs=1e-9)


def test_sup_special_cases():
    assert sup_time_varying(DisturbanceSpec(amp=0.0)) == 0.0
    assert sup_time_varying(DisturbanceSpec(amp=-2.0, decay=0.0)) == 2.0
    assert sup_total(DisturbanceSpec(w_bar=-1.5, amp=0.0)) == 1.5
    assert sup_total(DisturbanceSpec(w_bar=1.0, amp=0.5, decay=0.0)) == 1.5


def test_scenario_inputs_by_hand():
    veh = VehicleSpec(params=VehicleParams(500.0, 1000.0),
                      disturbance=DisturbanceSpec(w_bar=0.5, amp=0.0),
                      initial=AugmentedState(-7.0, 24.0, 0.1))
    cfg = PlatoonConfig(1, (10.0,), leader_speed=20.0, per_vehicle=(veh,))
    report = check_conditions(REFERENCE_GAINS)
    p = scenario_bound_inputs(cfg, REFERENCE_GAINS, report)
    assert p.init_err == pytest.approx(5.0)
    xi0 = 0.1 + 0.5 / REFERENCE_GAINS.k_int
    assert p.init_integral_err == pytest.approx(xi0)
    assert p.init_err_z == pytest.approx(math.sqrt(25.0 + xi0 ** 2))
    assert p.sup_w == 0.0 and p.sup_w_total == pytest.approx(0.5)
    assert p.cbar_sq == report.cbar_sq and p.gain_k == report.gain_k
    f = scenario_bound_inputs(cfg, REFERENCE_GAINS, report, channel="force")
    assert f.sup_w_total == pytest.approx(0.5 / 500.0)
    assert f.init_integral_err == pytest.approx(0.1 + 0.5 / 500.0 / REFERENCE_GAINS.k_int)
