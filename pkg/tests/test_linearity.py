import numpy as np
import pytest

from bhdsim import dbm_to_watts
from bhdsim.linearity import (
    ToneBeatSpec,
    beat_current_rms,
    dynamic_range,
    limiter_fundamental_gain,
    max_signal_power,
    single_tone_sweep,
)
from bhdsim.receiver import tia_response_mag2


class TestBeatCurrent:
    def test_zero_signal(self, params):
        assert beat_current_rms(ToneBeatSpec(100e-6, 0.0), params) == 0.0

    def test_sqrt_product_law(self, params):
        base = beat_current_rms(ToneBeatSpec(100e-6, 1e-9), params)
        quad = beat_current_rms(ToneBeatSpec(400e-6, 1e-9), params)
        assert quad == pytest.approx(2 * base, rel=1e-12)

    def test_value_at_compression_anchor(self, params):
        # sqrt(2) * 0.84 * sqrt(100 uW * (-38 dBm)) * |H(120 MHz)|
        spec = ToneBeatSpec(100e-6, dbm_to_watts(-38.0))
        h = np.sqrt(tia_response_mag2(np.array([120e6]), params))[0]
        want = np.sqrt(2) * 0.84 * np.sqrt(100e-6 * dbm_to_watts(-38.0)) * h
        assert beat_current_rms(spec, params) == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(4.728e-6, rel=1e-3)

    def test_symmetry_in_powers(self, params):
        a = beat_current_rms(ToneBeatSpec(2e-4, 3e-8), params)
        b = beat_current_rms(ToneBeatSpec(3e-8, 2e-4), params)
        assert a == pytest.approx(b, rel=1e-12)

    def test_offset_outside_bandwidth_rejected(self, params):
        with pytest.raises(ValueError):
            beat_current_rms(ToneBeatSpec(1e-4, 1e-9, offset_freq=1e10), params)


class TestLimiter:
    def test_small_signal_gain_unity(self):
        assert limiter_fundamental_gain(1e-4) == pytest.approx(1.0, abs=1e-6)

    def test_monotone_compression(self):
        u = np.linspace(0.05, 5.0, 30)
        g = np.array([limiter_fundamental_gain(x) for x in u])
        assert np.all(np.diff(g) < 0)


class TestSweep:
    def test_linear_region_slope(self, params):
        grid = np.arange(-60.0, -49.9, 1.0)
        pts = single_tone_sweep(100e-6, grid, params)
        slopes = np.diff([p.output_db for p in pts])
        assert slopes == pytest.approx(np.ones_like(slopes), abs=0.05)

    def test_compression_monotone_and_concave(self, params):
        grid = np.arange(-60.0, -24.9, 1.0)
        pts = single_tone_sweep(100e-6, grid, params)
        out = np.array([p.output_db for p in pts])
        assert np.all(np.diff(out) > -1e-9)
        assert np.all(np.diff(out, 2) < 1e-6)

    def test_detectability_flags_straddle_floor(self, params):
        pts = single_tone_sweep(100e-6, np.array([-75.0, -67.0]), params)
        assert not pts[0].detectable
        assert pts[1].detectable

    def test_zero_signal_not_detectable(self, params):
        pts = single_tone_sweep(100e-6, np.array([-200.0]), params)
        assert not pts[0].detectable

    def test_sweep_matches_compression_anchor(self, params):
        # output deviates from the linear extrapolation by 1 dB at the ceiling
        grid = np.arange(-70.0, -30.0, 0.25)
        pts = single_tone_sweep(100e-6, grid, params)
        out = np.array([p.output_db for p in pts])
        linear = out[0] + (grid - grid[0])
        dev = linear - out
        crossing = grid[np.argmax(dev >= 1.0)]
        assert crossing == pytest.approx(-38.0, abs=0.5)

    def test_unsorted_grid_rejected(self, params):
        with pytest.raises(ValueError):
            single_tone_sweep(1e-4, np.array([-30.0, -40.0]), params)


class TestDynamicRange:
    def test_anchor_at_100uw(self, params):
        rep = dynamic_range(100e-6, params)
        assert rep.floor_dbm == pytest.approx(-71.0, abs=1.0)
        assert rep.ceiling_dbm == pytest.approx(-38.0, abs=1.0)
        assert rep.range_db == pytest.approx(33.0, abs=1.0)

    def test_range_independent_of_lo(self, params):
        r1 = dynamic_range(100e-6, params)
        r2 = dynamic_range(1e-3, params)
        assert r1.range_db == pytest.approx(r2.range_db, abs=1e-9)
        # both edges shift by the same -10 log10(p/p_ref)
        assert r2.ceiling_dbm - r1.ceiling_dbm == pytest.approx(-10.0, abs=1e-9)
        assert r2.floor_dbm - r1.floor_dbm == pytest.approx(-10.0, abs=1e-9)


class TestMaxSignalPower:
    def test_anchor(self):
        assert max_signal_power(100e-6) == pytest.approx(-38.0, abs=1e-12)

    def test_scaling(self):
        assert max_signal_power(1e-3) == pytest.approx(-48.0, abs=1e-12)
        assert max_signal_power(10e-6) == pytest.approx(-28.0, abs=1e-12)

    def test_zero_lo_rejected(self):
        with pytest.raises(ValueError):
            max_signal_power(0.0)
