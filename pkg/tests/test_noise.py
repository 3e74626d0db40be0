import numpy as np
import pytest
from scipy.constants import elementary_charge

from bhdsim import ReceiverParams, dbm_to_watts
from bhdsim.noise import (
    NegativeClearanceError,
    NoiseSpectrum,
    NoiseTrace,
    apply_saturation,
    band_variance,
    clearance_spectrum,
    default_frequency_grid,
    electronic_noise_psd,
    qcnr_frequency_domain,
    qcnr_report_frequency_domain,
    qcnr_report_time_domain,
    qcnr_time_domain,
    shot_noise_psd,
    synthesize_trace,
    total_noise_psd,
)

LO_109_W = dbm_to_watts(10.9)


class TestElectronicPsd:
    def test_flat_plateau_carries_rated_current(self, params):
        # the flat component integrates to (60 nA)^2 over the reference band
        i0_sq = electronic_noise_psd(params, np.array([1.0, 2.0]), noise_corner_hz=1e18).psd[0]
        assert i0_sq * params.reference_bandwidth == pytest.approx(
            params.input_noise_current_rms ** 2, rel=1e-9)
        assert i0_sq == pytest.approx(3.6e-24, rel=1e-9)

    def test_zero_noise_current(self):
        p = ReceiverParams(input_noise_current_rms=0.0)
        spec = electronic_noise_psd(p, np.logspace(6, 9, 16))
        assert np.all(spec.psd == 0.0)

    def test_rises_with_frequency(self, params):
        spec = electronic_noise_psd(params, np.array([1e6, 4e8]))
        # below the corner the response rolloff has not kicked in yet
        assert spec.psd[1] > spec.psd[0]


class TestShotPsd:
    def test_zero_lo(self, params):
        spec = shot_noise_psd(0.0, params, np.logspace(6, 9, 8))
        assert np.all(spec.psd == 0.0)

    def test_low_frequency_level_at_123mw(self, params):
        spec = shot_noise_psd(12.3e-3, params, np.array([1.0, 2.0]))
        i_dc = 0.84 * 12.3e-3
        assert i_dc == pytest.approx(10.33e-3, abs=0.005e-3)
        assert spec.psd[0] == pytest.approx(2 * elementary_charge * i_dc, rel=1e-12)

    def test_linear_in_lo(self, params):
        f = np.logspace(6, 9, 32)
        a = shot_noise_psd(1e-3, params, f).psd
        b = shot_noise_psd(2e-3, params, f).psd
        assert b == pytest.approx(2 * a, rel=1e-12)


class TestSaturation:
    def test_unity_at_onset(self, params):
        assert apply_saturation(params.saturation_lo_power, params) == 1.0
        assert apply_saturation(1e-3, params) == 1.0

    def test_calibrated_gain_above_onset_is_small(self, params):
        # QCNR gain from 9.4 dBm to 10.9 dBm stays below the 1.5 dB LO step
        r1 = qcnr_report_frequency_domain(dbm_to_watts(9.4), params)
        r2 = qcnr_report_frequency_domain(LO_109_W, params)
        assert 0.0 <= r2.qcnr_db - r1.qcnr_db < 1.5

    def test_exponent_one_degenerates(self, params):
        assert apply_saturation(20e-3, params, exponent=1.0) == 1.0

    def test_rejects_negative(self, params):
        with pytest.raises(ValueError):
            apply_saturation(-1.0, params)


class TestSynthesizeTrace:
    def test_zero_psd_all_zero(self, params):
        spec = NoiseSpectrum(np.array([1.0, 1e9]), np.zeros(2), "electronic")
        tr = synthesize_trace(spec, 2e9, 2 ** 16, seed=3)
        assert np.all(tr.samples == 0.0)

    def test_flat_psd_parseval(self):
        s0 = 4e-24
        spec = NoiseSpectrum(np.array([0.0, 1e9]), np.array([s0, s0]), "total")
        fs = 2e9
        tr = synthesize_trace(spec, fs, 2 ** 20, seed=11)
        assert tr.variance() == pytest.approx(s0 * fs / 2, rel=0.03)

    def test_deterministic(self):
        spec = NoiseSpectrum(np.array([0.0, 1e9]), np.array([1e-24, 2e-24]), "total")
        a = synthesize_trace(spec, 2e9, 2 ** 16, seed=5)
        b = synthesize_trace(spec, 2e9, 2 ** 16, seed=5)
        assert np.array_equal(a.samples, b.samples)

    def test_rejects_bad_sizes(self):
        spec = NoiseSpectrum(np.array([0.0, 1e9]), np.array([1e-24, 1e-24]), "total")
        with pytest.raises(ValueError):
            synthesize_trace(spec, 2e9, 1000, seed=0)
        with pytest.raises(ValueError):
            synthesize_trace(spec, -1.0, 1024, seed=0)


class TestQcnrTimeDomain:
    def _trace(self, var, seed, n=2 ** 16, fs=2e9):
        rng = np.random.default_rng(seed)
        return NoiseTrace(fs, np.sqrt(var) * rng.standard_normal(n), seed)

    def test_equal_quantum_and_electronic_parts(self):
        # total variance twice the electronic variance -> 0 dB
        el = self._trace(1.0, 1)
        tot = NoiseTrace(2e9, el.samples * np.sqrt(2.0), 1)
        rep = qcnr_time_domain(tot, el)
        assert rep.qcnr_db == pytest.approx(0.0, abs=1e-9)
        assert rep.quantum_variance == pytest.approx(rep.electronic_variance, rel=1e-9)

    def test_same_trace_hits_floor(self):
        el = self._trace(1.0, 2)
        rep = qcnr_time_domain(el, el)
        assert rep.quantum_variance == 0.0
        assert rep.qcnr_db == -99.0

    def test_negative_clearance_raises(self):
        el = self._trace(1.0, 3)
        tot = NoiseTrace(2e9, el.samples * 0.5, 3)
        with pytest.raises(NegativeClearanceError):
            qcnr_time_domain(tot, el)

    def test_short_traces_rejected(self):
        el = self._trace(1.0, 4, n=2 ** 12)
        with pytest.raises(ValueError):
            qcnr_time_domain(el, el)

    def test_calibrated_anchor_109dbm(self, params):
        rep = qcnr_report_time_domain(LO_109_W, params, seed=7)
        assert rep.qcnr_db == pytest.approx(24.74, abs=1.5)
        assert rep.method == "time_domain"


class TestQcnrFrequencyDomain:
    def test_half_psd_gives_zero_db(self):
        f = np.linspace(1e6, 1e9, 512)
        tot = NoiseSpectrum(f, np.full_like(f, 2e-24), "total")
        el = NoiseSpectrum(f, np.full_like(f, 1e-24), "electronic")
        rep = qcnr_frequency_domain(tot, el)
        assert rep.qcnr_db == pytest.approx(0.0, abs=1e-9)

    def test_flat_psd_band_independence(self):
        f = np.linspace(1e6, 2e9, 512)
        tot = NoiseSpectrum(f, np.full_like(f, 5e-24), "total")
        el = NoiseSpectrum(f, np.full_like(f, 1e-24), "electronic")
        a = qcnr_frequency_domain(tot, el, 1e6, 1e9)
        b = qcnr_frequency_domain(tot, el, 1e6, 5e8)
        assert a.qcnr_db == pytest.approx(b.qcnr_db, abs=1e-9)

    def test_band_not_covered(self):
        f = np.linspace(1e6, 5e8, 64)
        tot = NoiseSpectrum(f, np.full_like(f, 2e-24), "total")
        el = NoiseSpectrum(f, np.full_like(f, 1e-24), "electronic")
        with pytest.raises(ValueError):
            qcnr_frequency_domain(tot, el, 1e6, 1e9)

    def test_calibrated_anchor_123mw(self, params):
        rep = qcnr_report_frequency_domain(12.3e-3, params)
        assert rep.qcnr_db == pytest.approx(26.8, abs=1.0)
        assert rep.band == (1e6, 1e9)

    def test_common_rescaling_invariance(self, params):
        f = default_frequency_grid()
        el = electronic_noise_psd(params, f)
        tot = total_noise_psd(LO_109_W, params, f)
        a = qcnr_frequency_domain(tot, el)
        scaled_tot = NoiseSpectrum(f, tot.psd * 7.3, "total")
        scaled_el = NoiseSpectrum(f, el.psd * 7.3, "electronic")
        b = qcnr_frequency_domain(scaled_tot, scaled_el)
        assert a.qcnr_db == pytest.approx(b.qcnr_db, abs=1e-10)

    def test_doubling_lo_below_saturation(self, params):
        a = qcnr_report_frequency_domain(1e-3, params)
        b = qcnr_report_frequency_domain(2e-3, params)
        assert b.qcnr_db - a.qcnr_db == pytest.approx(3.0103, abs=0.05)


class TestClearance:
    def test_anchor_at_1ghz(self, params):
        got = clearance_spectrum(LO_109_W, params, np.array([5e8, 1e9]))[1]
        assert got == pytest.approx(21.5, abs=1.5)

    def test_dark_input_zero(self, params):
        f = default_frequency_grid(64)
        assert clearance_spectrum(0.0, params, f) == pytest.approx(0.0, abs=1e-12)

    def test_monotone_in_lo_below_saturation(self, params):
        f = np.logspace(6, 9, 16)
        prev = clearance_spectrum(1e-4, params, f)
        for p_lo in (3e-4, 1e-3, 3e-3):
            cur = clearance_spectrum(p_lo, params, f)
            assert np.all(cur >= prev)
            prev = cur


class TestVarianceConsistency:
    def test_variance_additivity(self, params):
        f = np.linspace(0.0, 1e9, 2048)
        el = electronic_noise_psd(params, f)
        shot = shot_noise_psd(LO_109_W, params, f)
        fs = 2e9
        tr_el = synthesize_trace(el, fs, 2 ** 20, seed=21)
        tr_sh = synthesize_trace(shot, fs, 2 ** 20, seed=22)
        total_var = np.var(tr_el.samples + tr_sh.samples)
        assert total_var == pytest.approx(tr_el.variance() + tr_sh.variance(), rel=0.03)

    def test_trace_vs_spectrum_qcnr_agreement(self, params):
        # trace band equals the integration band: estimates agree to 0.3 dB
        f = np.linspace(0.0, 1e9, 4096)
        el = electronic_noise_psd(params, f)
        tot = total_noise_psd(LO_109_W, params, f)
        fd = qcnr_frequency_domain(tot, el, 0.0, 1e9)
        fs = 2e9
        td = qcnr_time_domain(
            synthesize_trace(tot, fs, 2 ** 20, seed=31),
            synthesize_trace(el, fs, 2 ** 20, seed=32),
        )
        assert td.qcnr_db == pytest.approx(fd.qcnr_db, abs=0.3)


class TestBandVariance:
    def test_flat_band(self):
        f = np.linspace(0.0, 1e9, 1001)
        spec = NoiseSpectrum(f, np.full_like(f, 2.0), "total")
        assert band_variance(spec, 1e8, 6e8) == pytest.approx(1e9, rel=1e-9)

    def test_defaults_grid_shape(self):
        f = default_frequency_grid()
        assert f.size == 2048
        assert f[0] == pytest.approx(1e6) and f[-1] == pytest.approx(2e9)
