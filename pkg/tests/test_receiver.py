import numpy as np
import pytest
from hypothesis import given, strategies as st

from bhdsim import ReceiverParams, dbm_to_watts
from bhdsim.receiver import (
    cmrr_spectrum,
    mismatch_for_cmrr,
    noise_current_for_capacitance,
    per_arm_photocurrent,
    tia_response,
    tia_response_mag2,
)


class TestReceiverParams:
    def test_defaults_valid(self, params):
        assert params.responsivity == 1.0
        assert params.coupling_efficiency == 0.84
        assert params.saturation_lo_power == pytest.approx(dbm_to_watts(9.4))

    @pytest.mark.parametrize("kwargs", [
        {"responsivity": 0.0},
        {"coupling_efficiency": 0.0},
        {"coupling_efficiency": 1.2},
        {"c_pd": -1e-15},
        {"tia_bandwidth": 0.0},
        {"saturation_lo_power": 0.0},
        {"arm_split": (0.6, 0.5)},
        {"arm_skew": -1e-12},
    ])
    def test_invariants_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ReceiverParams(**kwargs)


class TestTiaResponse:
    def test_unity_at_dc_and_3db_at_corner(self, params):
        f = np.array([1.0, params.tia_bandwidth])
        mag2 = tia_response_mag2(f, params)
        assert mag2[0] == pytest.approx(1.0, rel=1e-12)
        assert 10 * np.log10(mag2[1]) == pytest.approx(-3.0103, abs=1e-3)

    def test_complex_and_squared_agree(self, params):
        f = np.logspace(6, 10, 64)
        assert np.abs(tia_response(f, params)) ** 2 == pytest.approx(
            tia_response_mag2(f, params), rel=1e-12)


class TestPhotocurrent:
    def test_anchor_minus_17dbm(self, calibrated_params):
        i1, i2 = per_arm_photocurrent(dbm_to_watts(-17.0), calibrated_params)
        for i in (i1, i2):
            assert abs(i - 8.4e-6) / 8.4e-6 < 0.02

    def test_zero_input(self, params):
        assert per_arm_photocurrent(0.0, params) == (0.0, 0.0)

    def test_derived_point(self):
        p = ReceiverParams(coupling_efficiency=0.80)
        i1, _ = per_arm_photocurrent(1e-3, p)
        assert i1 == pytest.approx(0.40e-3, rel=1e-12)

    def test_linear_in_power(self, params):
        a = per_arm_photocurrent(2e-6, params)[0]
        b = per_arm_photocurrent(6e-6, params)[0]
        assert b == pytest.approx(3 * a, rel=1e-12)

    def test_negative_rejected(self, params):
        with pytest.raises(ValueError):
            per_arm_photocurrent(-1e-6, params)


class TestCmrr:
    def test_perfect_balance_clamps(self, params):
        f = np.logspace(7, 9, 16)
        assert np.all(cmrr_spectrum(params, f) == 120.0)

    def test_one_percent_mismatch_flat_40db(self):
        p = ReceiverParams(arm_responsivity_mismatch=0.01)
        cmrr = cmrr_spectrum(p, np.logspace(7, 9, 16))
        assert cmrr == pytest.approx(40.0, abs=1e-9)

    def test_skew_closed_form(self):
        p = ReceiverParams(arm_skew=10e-12)
        got = cmrr_spectrum(p, np.array([1e9]))[0]
        want = -20 * np.log10(2 * np.sin(np.pi * 1e9 * 10e-12))
        assert got == pytest.approx(want, abs=1e-12)
        assert got == pytest.approx(24.04, abs=0.01)

    def test_empty_grid_rejected(self, params):
        with pytest.raises(ValueError):
            cmrr_spectrum(params, np.array([]))

    def test_monotone_in_mismatch_at_zero_skew(self):
        f = np.array([5e8])
        values = [
            cmrr_spectrum(ReceiverParams(arm_responsivity_mismatch=m), f)[0]
            for m in (0.001, 0.003, 0.01, 0.03, 0.1)
        ]
        assert all(a >= b for a, b in zip(values, values[1:]))

    @given(st.floats(min_value=1e-12, max_value=1e-10),
           st.floats(min_value=1e8, max_value=1e9))
    def test_scaling_property_zero_mismatch(self, skew, freq):
        # CMRR depends on f only through f * skew when arms match
        a = cmrr_spectrum(ReceiverParams(arm_skew=skew), np.array([freq]))[0]
        b = cmrr_spectrum(ReceiverParams(arm_skew=2 * skew), np.array([freq / 2]))[0]
        assert a == pytest.approx(b, abs=1e-9)

    def test_mismatch_for_cmrr_inverts(self):
        eps = mismatch_for_cmrr(40.0, 1e9)
        assert eps == pytest.approx(0.01, rel=1e-9)
        p = ReceiverParams(arm_responsivity_mismatch=eps)
        assert cmrr_spectrum(p, np.array([1e9]))[0] == pytest.approx(40.0, abs=1e-9)

    def test_mismatch_for_cmrr_with_skew(self):
        eps = mismatch_for_cmrr(24.0, 1e9, skew=5e-12)
        p = ReceiverParams(arm_responsivity_mismatch=eps, arm_skew=5e-12)
        assert cmrr_spectrum(p, np.array([1e9]))[0] == pytest.approx(24.0, abs=1e-6)

    def test_mismatch_for_cmrr_infeasible_skew(self):
        # 10 ps skew alone caps CMRR near 24 dB at 1 GHz
        with pytest.raises(ValueError):
            mismatch_for_cmrr(40.0, 1e9, skew=10e-12)


class TestCapacitanceScaling:
    def test_identity(self):
        assert noise_current_for_capacitance(60e-9, 200e-15, 200e-15) == 60e-9

    def test_packaged_photodiode(self):
        got = noise_current_for_capacitance(60e-9, 200e-15, 1e-12)
        assert got == pytest.approx(60e-9 * np.sqrt(5.0), rel=1e-12)
        assert got == pytest.approx(134.2e-9, abs=0.05e-9)

    def test_smaller_die(self):
        assert noise_current_for_capacitance(60e-9, 200e-15, 50e-15) == pytest.approx(30e-9)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            noise_current_for_capacitance(60e-9, 0.0, 1e-12)
        with pytest.raises(ValueError):
            noise_current_for_capacitance(60e-9, 200e-15, -1e-15)
