"""Shot- and electronic-noise engine.

Builds one-sided power spectral densities referred to the TIA input (A^2/Hz),
synthesizes seeded Gaussian time traces consistent with a PSD, and implements
the two quantum-to-classical noise ratio (QCNR) estimators: trace-variance
subtraction in the time domain and PSD integration in the frequency domain.

Model summary
-------------
Electronic noise has a flat plateau carrying the rated input noise current
(i0^2 = i_rms^2 / B_ref) plus the capacitance-driven rise (f / f_c)^2 of a
TIA loaded by a photodiode; the rise is assembly excess on top of the rated
figure, with the corner f_c fitted to the clearance targets.  Shot noise is
2 q I_dc with I_dc the summed DC photocurrent of both arms.  Both densities
roll off with the squared receiver response.  Above the LO saturation onset
the incremental shot-noise variance is compressed by a fitted exponent.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import elementary_charge

from . import defaults
from .receiver import ReceiverParams, tia_response_mag2

__all__ = [
    "NoiseSpectrum",
    "NoiseTrace",
    "QcnrReport",
    "NegativeClearanceError",
    "default_frequency_grid",
    "electronic_noise_psd",
    "shot_noise_psd",
    "apply_saturation",
    "total_noise_psd",
    "clearance_spectrum",
    "band_variance",
    "synthesize_trace",
    "qcnr_time_domain",
    "qcnr_frequency_domain",
    "qcnr_report_frequency_domain",
    "qcnr_report_time_domain",
]

QCNR_FLOOR_DB = -99.0


class NegativeClearanceError(ValueError):
    """Total noise variance fell below the electronic variance."""


@dataclass(frozen=True)
class NoiseSpectrum:
    """One-sided PSD over a frequency grid, referred to the TIA input."""

    freqs: np.ndarray        # Hz, strictly ascending
    psd: np.ndarray          # A^2/Hz, same length
    label: str = "total"     # electronic | shot | total

    def __post_init__(self) -> None:
        freqs = np.asarray(self.freqs, dtype=float)
        psd = np.asarray(self.psd, dtype=float)
        if freqs.ndim != 1 or freqs.size < 2:
            raise ValueError("frequency grid needs at least two points")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequency grid must be strictly ascending")
        if psd.shape != freqs.shape:
            raise ValueError("psd and freqs must have the same length")
        if np.any(psd < 0):
            raise ValueError("psd must be non-negative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "psd", psd)


@dataclass(frozen=True)
class NoiseTrace:
    """Seeded time-domain sample sequence in amperes (input-referred)."""

    sample_rate: float
    samples: np.ndarray
    seed: int
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def variance(self) -> float:
        return float(np.var(self.samples))


@dataclass(frozen=True)
class QcnrReport:
    """Electronic, total and quantum variances plus the QCNR in dB."""

    electronic_variance: float   # A^2
    total_variance: float        # A^2
    quantum_variance: float      # A^2
    qcnr_db: float
    method: str                  # time_domain | frequency_domain
    band: tuple[float, float] | None = None


def default_frequency_grid(
    n: int = 2048, f_min: float = 1e6, f_max: float = 2e9
) -> np.ndarray:
    """Logarithmic grid resolving both the 1 MHz edge and the rolloff region."""
    return np.logspace(np.log10(f_min), np.log10(f_max), n)


def electronic_noise_psd(
    params: ReceiverParams,
    freqs: np.ndarray,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
) -> NoiseSpectrum:
    """Dark (TIA-only) noise PSD at the input, shaped by the receiver response.

    S_e(f) = i0^2 (1 + (f/f_c)^2) |H(f)|^2 with the plateau i0^2 set by the
    rated rms noise current over the reference bandwidth.
    """
    f = np.asarray(freqs, dtype=float)
    i0_sq = params.input_noise_current_rms ** 2 / params.reference_bandwidth
    psd = i0_sq * (1.0 + (f / noise_corner_hz) ** 2) * tia_response_mag2(f, params)
    return NoiseSpectrum(f, psd, label="electronic")


def shot_noise_psd(
    p_lo_w: float,
    params: ReceiverParams,
    freqs: np.ndarray,
) -> NoiseSpectrum:
    """Quantum-noise PSD for a given LO power, before any compression.

    S_q(f) = 2 q I_dc |H(f)|^2 where I_dc is the summed DC photocurrent of
    both arms; both photodiodes contribute shot noise to the differential
    output.
    """
    if p_lo_w < 0:
        raise ValueError(f"LO power must be >= 0, got {p_lo_w}")
    f = np.asarray(freqs, dtype=float)
    i_dc = params.effective_responsivity * p_lo_w
    psd = 2.0 * elementary_charge * i_dc * tia_response_mag2(f, params)
    return NoiseSpectrum(f, psd, label="shot")


def apply_saturation(
    p_lo_w: float,
    params: ReceiverParams,
    exponent: float = defaults.COMPRESSION_EXPONENT,
) -> float:
    """Multiplicative gain factor on the quantum-noise variance, in (0, 1].

    Unity up to the saturation onset; above it the incremental shot-noise
    variance grows as (p / p_sat)^exponent, i.e. the factor is
    (p / p_sat)^(exponent - 1).  ``exponent = 1`` disables compression.
    """
    if p_lo_w < 0:
        raise ValueError(f"LO power must be >= 0, got {p_lo_w}")
    if p_lo_w <= params.saturation_lo_power:
        return 1.0
    return float((p_lo_w / params.saturation_lo_power) ** (exponent - 1.0))


def total_noise_psd(
    p_lo_w: float,
    params: ReceiverParams,
    freqs: np.ndarray,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
    compression_exponent: float = defaults.COMPRESSION_EXPONENT,
) -> NoiseSpectrum:
    """Lit-receiver PSD: electronic noise plus compressed shot noise."""
    elec = electronic_noise_psd(params, freqs, noise_corner_hz)
    shot = shot_noise_psd(p_lo_w, params, freqs)
    gain = apply_saturation(p_lo_w, params, compression_exponent)
    return NoiseSpectrum(elec.freqs, elec.psd + gain * shot.psd, label="total")


def clearance_spectrum(
    p_lo_w: float,
    params: ReceiverParams,
    freqs: np.ndarray,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
    compression_exponent: float = defaults.COMPRESSION_EXPONENT,
) -> np.ndarray:
    """Pointwise lit-to-dark PSD ratio in dB."""
    elec = electronic_noise_psd(params, freqs, noise_corner_hz)
    total = total_noise_psd(
        p_lo_w, params, freqs, noise_corner_hz, compression_exponent
    )
    return 10.0 * np.log10(total.psd / elec.psd)


def band_variance(spectrum: NoiseSpectrum, f_lo: float, f_hi: float) -> float:
    """Trapezoidal integral of the PSD over [f_lo, f_hi], in A^2."""
    if f_lo >= f_hi:
        raise ValueError(f"need f_lo < f_hi, got [{f_lo}, {f_hi}]")
    f, s = spectrum.freqs, spectrum.psd
    if f_lo < f[0] or f_hi > f[-1]:
        raise ValueError(
            f"band [{f_lo}, {f_hi}] Hz not covered by grid [{f[0]}, {f[-1]}] Hz"
        )
    inner = (f > f_lo) & (f < f_hi)
    fg = np.concatenate(([f_lo], f[inner], [f_hi]))
    sg = np.concatenate(([np.interp(f_lo, f, s)], s[inner], [np.interp(f_hi, f, s)]))
    return float(np.trapezoid(sg, fg))


def synthesize_trace(
    spectrum: NoiseSpectrum,
    sample_rate: float,
    n_samples: int,
    seed: int,
) -> NoiseTrace:
    """Zero-mean Gaussian sequence whose periodogram matches the target PSD.

    Deterministic for a fixed seed.  The PSD is interpolated onto the rFFT
    grid (edge-extended below/above the provided grid, truncated at the
    Nyquist frequency) and realized by spectral shaping of complex white
    Gaussian bins.
    """
    if sample_rate <= 0:
        raise ValueError(f"sample_rate must be > 0, got {sample_rate}")
    if n_samples < 2 or (n_samples & (n_samples - 1)) != 0:
        raise ValueError(f"n_samples must be a power of two >= 2, got {n_samples}")
    samples = _colored_noise(
        spectrum.freqs, spectrum.psd, sample_rate, n_samples,
        np.random.default_rng(seed),
    )
    return NoiseTrace(sample_rate=sample_rate, samples=samples, seed=seed)


def _colored_noise(
    freqs: np.ndarray,
    psd: np.ndarray,
    sample_rate: float,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Length-n real Gaussian sequence with the given one-sided PSD."""
    f_bins = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate)
    s_bins = np.interp(f_bins, freqs, psd, left=psd[0], right=psd[-1])
    # outside the provided grid above its top edge, fall to zero rather than
    # extrapolating the last value across a wide Nyquist gap
    s_bins[f_bins > freqs[-1]] = 0.0
    if not np.any(s_bins > 0):
        return np.zeros(n_samples)
    amp = np.sqrt(s_bins * sample_rate * n_samples / 4.0)
    spec = amp * (rng.standard_normal(len(f_bins)) + 1j * rng.standard_normal(len(f_bins)))
    spec[0] = 0.0  # zero-mean trace
    spec[-1] = np.sqrt(2.0) * spec[-1].real  # Nyquist bin is real
    return np.fft.irfft(spec, n=n_samples)


def qcnr_time_domain(total: NoiseTrace, electronic: NoiseTrace) -> QcnrReport:
    """QCNR from trace variances: quantum = total - electronic.

    Raises :class:`NegativeClearanceError` when the subtraction goes
    negative (miscalibrated inputs); a zero quantum variance is reported at
    the -99 dB floor.
    """
    if total.sample_rate != electronic.sample_rate:
        raise ValueError("traces must share a sample rate")
    n = min(len(total.samples), len(electronic.samples))
    if n < 2 ** 16:
        raise ValueError(f"traces must hold at least 2^16 samples, got {n}")
    v_tot = total.variance()
    v_el = electronic.variance()
    v_q = v_tot - v_el
    if v_q < 0:
        raise NegativeClearanceError(
            f"total variance {v_tot:.3e} below electronic variance {v_el:.3e}"
        )
    qcnr = QCNR_FLOOR_DB if v_q == 0 or v_el == 0 else max(
        10.0 * np.log10(v_q / v_el), QCNR_FLOOR_DB
    )
    return QcnrReport(
        electronic_variance=v_el,
        total_variance=v_tot,
        quantum_variance=v_q,
        qcnr_db=float(qcnr),
        method="time_domain",
    )


def qcnr_frequency_domain(
    total: NoiseSpectrum,
    electronic: NoiseSpectrum,
    f_lo: float = 1e6,
    f_hi: float = 1e9,
) -> QcnrReport:
    """QCNR from band-integrated PSDs over [f_lo, f_hi]."""
    v_tot = band_variance(total, f_lo, f_hi)
    v_el = band_variance(electronic, f_lo, f_hi)
    v_q = v_tot - v_el
    if v_q < 0:
        raise NegativeClearanceError(
            f"total band variance {v_tot:.3e} below electronic {v_el:.3e}"
        )
    qcnr = QCNR_FLOOR_DB if v_q == 0 or v_el == 0 else max(
        10.0 * np.log10(v_q / v_el), QCNR_FLOOR_DB
    )
    return QcnrReport(
        electronic_variance=v_el,
        total_variance=v_tot,
        quantum_variance=v_q,
        qcnr_db=float(qcnr),
        method="frequency_domain",
        band=(f_lo, f_hi),
    )


def qcnr_report_frequency_domain(
    p_lo_w: float,
    params: ReceiverParams,
    f_lo: float = 1e6,
    f_hi: float = 1e9,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
    compression_exponent: float = defaults.COMPRESSION_EXPONENT,
) -> QcnrReport:
    """Model-level frequency-domain QCNR at one LO power."""
    freqs = default_frequency_grid()
    total = total_noise_psd(p_lo_w, params, freqs, noise_corner_hz, compression_exponent)
    elec = electronic_noise_psd(params, freqs, noise_corner_hz)
    return qcnr_frequency_domain(total, elec, f_lo, f_hi)


def qcnr_report_time_domain(
    p_lo_w: float,
    params: ReceiverParams,
    seed: int,
    n_samples: int = 2 ** 20,
    band_hz: float = defaults.TIMEDOMAIN_BAND_HZ,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
    compression_exponent: float = defaults.COMPRESSION_EXPONENT,
) -> QcnrReport:
    """Model-level time-domain QCNR: synthesize both captures, then subtract.

    The capture band is wider than the spectral integration band, which is
    why this estimate comes out below the frequency-domain one.
    """
    fs = 2.0 * band_hz
    freqs = np.linspace(1.0, band_hz, 4096)
    elec = electronic_noise_psd(params, freqs, noise_corner_hz)
    total = total_noise_psd(p_lo_w, params, freqs, noise_corner_hz, compression_exponent)
    # independent captures, as in the dark/lit measurement sequence
    tr_el = synthesize_trace(elec, fs, n_samples, seed)
    tr_tot = synthesize_trace(total, fs, n_samples, seed + 1)
    return qcnr_time_domain(tr_tot, tr_el)
