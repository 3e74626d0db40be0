"""Heterodyne QPSK link simulation end to end.

Gray-mapped QPSK with root-raised-cosine shaping is upconverted to an
intermediate frequency, mixed on the balanced receiver against a strong LO,
and demodulated by a digital 90-degree hybrid: complex downconversion,
matched filtering, known-timing decimation, fourth-power carrier phase
estimation, and differential decoding of the pi/2 ambiguity.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import elementary_charge
from scipy.signal import fftconvolve

from . import defaults
from .linearity import max_signal_power
from .noise import NoiseTrace, _colored_noise, apply_saturation, electronic_noise_psd
from .receiver import ReceiverParams, tia_response, tia_response_mag2
from .units import dbm_to_watts, watts_to_dbm

__all__ = [
    "ModemConfig",
    "BerPoint",
    "SensitivityResult",
    "DemodulationError",
    "SearchFailureError",
    "generate_qpsk",
    "front_end",
    "demodulate",
    "demodulate_soft",
    "measure_ber",
    "measure_ber_awgn",
    "sensitivity_search",
    "optical_budget",
]

# phase index p encodes the constellation point exp(j(pi/4 + p*pi/2))
ALPHABET = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)
# Gray labels per phase index: adjacent points differ in one bit
GRAY_BITS = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.int8)
# inverse map: bit pair (b0, b1) -> phase step
GRAY_INDEX = np.zeros((2, 2), dtype=np.int64)
for _p, (_b0, _b1) in enumerate(GRAY_BITS):
    GRAY_INDEX[_b0, _b1] = _p


class DemodulationError(RuntimeError):
    """Carrier phase estimation failed (degenerate input trace)."""


class SearchFailureError(RuntimeError):
    """The BER never crossed the target inside the scan range."""


@dataclass(frozen=True)
class ModemConfig:
    """Waveform and DSP parameters of the heterodyne QPSK modem."""

    baud: float = 250e6
    if_freq: float = 500e6
    rolloff: float = 0.2
    sample_rate: float = 4e9
    n_symbols: int = 2 ** 16
    lo_power_w: float = dbm_to_watts(13.0)
    filter_span: int = 32           # RRC truncation, symbols each side of center
    differential: bool = True
    noise_enabled: bool = True
    penalty_db: float = defaults.QPSK_PENALTY_DB
    timing_offset_samples: int = 1  # receiver response group delay, rounded
    bit_cap: int = 10_000_000
    min_errors: int = 100

    def __post_init__(self) -> None:
        if self.baud <= 0 or self.if_freq <= 0:
            raise ValueError("baud and if_freq must be > 0")
        if not 0 < self.rolloff <= 1:
            raise ValueError(f"rolloff must be in (0, 1], got {self.rolloff}")
        occupied = self.if_freq + self.baud * (1 + self.rolloff) / 2
        if self.sample_rate < 2 * occupied:
            raise ValueError(
                f"sample_rate {self.sample_rate} below Nyquist for the "
                f"passband edge {occupied} Hz"
            )
        if abs(self.sample_rate / self.baud - round(self.sample_rate / self.baud)) > 1e-9:
            raise ValueError("sample_rate must be an integer multiple of baud")
        if self.n_symbols < 16:
            raise ValueError("n_symbols must be at least 16")
        if self.lo_power_w < 0:
            raise ValueError("lo_power_w must be >= 0")

    @property
    def sps(self) -> int:
        return round(self.sample_rate / self.baud)

    @property
    def total_symbols(self) -> int:
        """Per-trial symbols including the guard band excluded from counting."""
        return self.n_symbols + 2 * self.filter_span


@dataclass(frozen=True)
class BerPoint:
    p_sig_dbm: float
    ber: float
    errors_counted: int
    bits_tested: int


@dataclass(frozen=True)
class SensitivityResult:
    sensitivity_dbm: float
    target_ber: float
    budget_db: float | None = None
    points: tuple[BerPoint, ...] = ()


def rrc_taps(rolloff: float, sps: int, span: int) -> np.ndarray:
    """Unit-energy root-raised-cosine filter, odd length span*sps*2 + 1."""
    n = span * sps
    t = np.arange(-n, n + 1) / sps
    taps = np.empty_like(t)
    b = rolloff
    mid = t == 0
    taps[mid] = 1.0 - b + 4.0 * b / np.pi
    special = np.abs(np.abs(4.0 * b * t) - 1.0) < 1e-9
    if np.any(special):
        taps[special] = (b / np.sqrt(2.0)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * b))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
        )
    rest = ~(mid | special)
    tr = t[rest]
    taps[rest] = (
        np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))
    ) / (np.pi * tr * (1 - (4 * b * tr) ** 2))
    return taps / np.sqrt(np.sum(taps ** 2))


def _bits_to_phase_indices(bits: np.ndarray, differential: bool) -> np.ndarray:
    pairs = bits.reshape(-1, 2)
    steps = GRAY_INDEX[pairs[:, 0], pairs[:, 1]]
    if not differential:
        return steps
    return np.concatenate(([0], np.cumsum(steps) % 4))


def _phase_indices_to_bits(indices: np.ndarray, differential: bool) -> np.ndarray:
    if differential:
        steps = np.mod(np.diff(indices), 4)
    else:
        steps = indices
    return GRAY_BITS[steps].reshape(-1)


def generate_qpsk(config: ModemConfig, seed) -> tuple[np.ndarray, np.ndarray]:
    """Random QPSK symbols and the real passband waveform carrying them.

    The waveform is normalized to a unit-power complex envelope so the
    optical signal power scales it externally.  Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    total = config.total_symbols
    n_bits = 2 * (total - 1) if config.differential else 2 * total
    bits = rng.integers(0, 2, size=n_bits)
    indices = _bits_to_phase_indices(bits, config.differential)
    symbols = ALPHABET[indices]
    sps = config.sps
    up = np.zeros(total * sps, dtype=complex)
    up[::sps] = symbols
    taps = rrc_taps(config.rolloff, sps, config.filter_span)
    envelope = fftconvolve(up, taps, mode="same")
    envelope /= np.sqrt(np.mean(np.abs(envelope) ** 2))
    t = np.arange(envelope.size) / config.sample_rate
    waveform = np.real(envelope * np.exp(2j * np.pi * config.if_freq * t))
    return symbols, waveform


def front_end(
    waveform: np.ndarray,
    p_sig_w: float,
    config: ModemConfig,
    params: ReceiverParams,
    seed,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
    compression_exponent: float = defaults.COMPRESSION_EXPONENT,
) -> NoiseTrace:
    """Balanced photocurrent for the waveform at a given signal power.

    The beat current is 2 R_eff sqrt(P_LO P_sig) times the waveform, derated
    by the calibrated implementation penalty, filtered by the receiver
    response, with shot noise at the LO photocurrent and electronic noise
    added.  Above the saturation onset the compression factor derates both
    the signal's electrical power and the shot-noise variance (gain
    compression); a signal beyond the linear ceiling gets a warning attached.
    """
    if p_sig_w < 0:
        raise ValueError(f"signal power must be >= 0, got {p_sig_w}")
    waveform = np.asarray(waveform, dtype=float)
    n = waveform.size
    fs = config.sample_rate
    gain = apply_saturation(config.lo_power_w, params, compression_exponent)
    gamma = 10.0 ** (-config.penalty_db / 20.0)
    amp = (
        2.0 * params.effective_responsivity
        * np.sqrt(gain) * gamma * np.sqrt(config.lo_power_w * p_sig_w)
    )
    f_bins = np.fft.rfftfreq(n, d=1.0 / fs)
    signal = np.fft.irfft(np.fft.rfft(waveform) * tia_response(f_bins, params), n=n)
    samples = amp * signal
    if config.noise_enabled:
        elec = electronic_noise_psd(params, f_bins, noise_corner_hz).psd
        i_dc = params.effective_responsivity * config.lo_power_w
        shot = 2.0 * elementary_charge * i_dc * tia_response_mag2(f_bins, params)
        psd = elec + gain * shot
        samples = samples + _colored_noise(
            f_bins[1:], psd[1:], fs, n, np.random.default_rng(seed)
        )
    warnings = ()
    if p_sig_w > 0 and config.lo_power_w > 0:
        if watts_to_dbm(p_sig_w) > max_signal_power(config.lo_power_w):
            warnings = ("signal above the linear ceiling; receiver in compression",)
    seed_tag = int(seed) if isinstance(seed, (int, np.integer)) else 0
    return NoiseTrace(sample_rate=fs, samples=samples, seed=seed_tag, warnings=warnings)


def demodulate_soft(trace: NoiseTrace, config: ModemConfig) -> np.ndarray:
    """Matched-filtered, phase-derotated symbol samples (one per symbol)."""
    x = np.asarray(trace.samples, dtype=float)
    n = x.size
    t = np.arange(n) / config.sample_rate
    baseband = x * np.exp(-2j * np.pi * config.if_freq * t)
    taps = rrc_taps(config.rolloff, config.sps, config.filter_span)
    matched = fftconvolve(baseband, taps, mode="same")
    total = n // config.sps
    idx = np.arange(total) * config.sps + config.timing_offset_samples
    z = matched[idx[idx < n]]
    s4 = np.sum(z ** 4)
    if not np.isfinite(s4) or s4 == 0:
        raise DemodulationError("carrier phase estimation failed on degenerate trace")
    raw = np.angle(s4)
    theta = ((raw - np.pi) / 4.0 + np.pi / 4.0) % (np.pi / 2.0) - np.pi / 4.0
    return z * np.exp(-1j * theta)


def decide_phase_indices(z: np.ndarray) -> np.ndarray:
    """Nearest constellation phase index for each soft sample."""
    return np.mod(np.round((np.angle(z) - np.pi / 4.0) / (np.pi / 2.0)).astype(int), 4)


def demodulate(trace: NoiseTrace, config: ModemConfig) -> np.ndarray:
    """Hard-decision symbols recovered from a photocurrent trace."""
    z = demodulate_soft(trace, config)
    return ALPHABET[decide_phase_indices(z)]


def _core_slice(config: ModemConfig) -> slice:
    g = config.filter_span
    return slice(g, g + config.n_symbols)


def _count_bit_errors(
    tx_indices: np.ndarray, rx_indices: np.ndarray, config: ModemConfig
) -> tuple[int, int]:
    core = _core_slice(config)
    tx_bits = _phase_indices_to_bits(tx_indices[core], config.differential)
    rx_bits = _phase_indices_to_bits(rx_indices[core], config.differential)
    return int(np.sum(tx_bits != rx_bits)), tx_bits.size


def _seed_for(*parts: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])


def measure_ber(
    config: ModemConfig,
    p_sig_dbm: float,
    params: ReceiverParams,
    seed: int = 0,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
    compression_exponent: float = defaults.COMPRESSION_EXPONENT,
) -> BerPoint:
    """Monte-Carlo BER at one signal power.

    Accumulates trials until at least ``min_errors`` bit errors are counted
    or the bit cap is reached; each trial is deterministic in (seed, trial).
    """
    p_sig_w = dbm_to_watts(p_sig_dbm)
    errors = 0
    bits = 0
    trial = 0
    while True:
        ss = _seed_for(seed, trial)
        sym_seed, noise_seed = ss.spawn(2)
        symbols, waveform = generate_qpsk(config, sym_seed)
        trace = front_end(
            waveform, p_sig_w, config, params, noise_seed,
            noise_corner_hz, compression_exponent,
        )
        z = demodulate_soft(trace, config)
        tx_idx = decide_phase_indices(symbols)
        rx_idx = decide_phase_indices(z)
        e, b = _count_bit_errors(tx_idx, rx_idx, config)
        errors += e
        bits += b
        trial += 1
        if errors >= config.min_errors or bits >= config.bit_cap:
            break
    return BerPoint(p_sig_dbm, errors / bits, errors, bits)


def measure_ber_awgn(
    config: ModemConfig,
    ebn0_db: float,
    seed: int = 0,
    max_bits: int | None = None,
    min_errors: int | None = None,
) -> BerPoint:
    """BER over a plain AWGN channel at a known Eb/N0 (no receiver model).

    Oracle leg for the modem: with absolute (non-differential) mapping and
    exact timing the result must match 0.5 erfc(sqrt(Eb/N0)).
    """
    cfg = replace(config, differential=False, timing_offset_samples=0,
                  noise_enabled=False)
    cap = max_bits if max_bits is not None else cfg.bit_cap
    need = min_errors if min_errors is not None else cfg.min_errors
    n0_scale = 10.0 ** (-ebn0_db / 10.0)
    errors = 0
    bits = 0
    trial = 0
    while True:
        ss = _seed_for(seed, trial)
        sym_seed, noise_seed = ss.spawn(2)
        symbols, waveform = generate_qpsk(cfg, sym_seed)
        # unit-power envelope -> passband power 1/2, so Eb = T_sym / 4
        eb = 0.5 / cfg.baud / 2.0
        n0 = eb * n0_scale
        sigma = np.sqrt(n0 * cfg.sample_rate / 2.0)
        rng = np.random.default_rng(noise_seed)
        rx = waveform + sigma * rng.standard_normal(waveform.size)
        z = demodulate_soft(NoiseTrace(cfg.sample_rate, rx, 0), cfg)
        tx_idx = decide_phase_indices(symbols)
        rx_idx = decide_phase_indices(z)
        e, b = _count_bit_errors(tx_idx, rx_idx, cfg)
        errors += e
        bits += b
        trial += 1
        if errors >= need or bits >= cap:
            break
    return BerPoint(float("nan"), errors / bits, errors, bits)


def sensitivity_search(
    config: ModemConfig,
    params: ReceiverParams,
    target_ber: float = 1e-3,
    seed: int = 0,
    launch_dbm: float | None = None,
    scan_range_dbm: tuple[float, float] = (-75.0, -30.0),
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
    compression_exponent: float = defaults.COMPRESSION_EXPONENT,
) -> SensitivityResult:
    """Signal power where the BER crosses the target.

    A coarse 2 dB scan brackets the crossing, bisection narrows it to
    0.2 dB, and the crossing is read off by log-BER interpolation inside the
    final bracket.
    """
    if not 1e-6 < target_ber < 1e-1:
        raise ValueError(f"target_ber must be in (1e-6, 1e-1), got {target_ber}")
    points: list[BerPoint] = []
    point_idx = 0

    def ber_at(p_dbm: float) -> BerPoint:
        nonlocal point_idx
        bp = measure_ber(
            config, p_dbm, params,
            seed=int(_seed_for(seed, 7919, point_idx).generate_state(1)[0]),
            noise_corner_hz=noise_corner_hz,
            compression_exponent=compression_exponent,
        )
        point_idx += 1
        points.append(bp)
        return bp

    lo_dbm, hi_dbm = scan_range_dbm
    bracket = None
    prev = None
    for p in np.arange(lo_dbm, hi_dbm + 1e-9, 2.0):
        bp = ber_at(float(p))
        if bp.ber < target_ber:
            if prev is None:
                raise SearchFailureError(
                    f"BER already below {target_ber} at the scan floor {lo_dbm} dBm"
                )
            bracket = (prev, (float(p), bp.ber))
            break
        prev = (float(p), bp.ber)
    if bracket is None:
        raise SearchFailureError(
            f"BER never dropped below {target_ber} up to {hi_dbm} dBm"
        )
    (p_lo, ber_lo), (p_hi, ber_hi) = bracket
    while p_hi - p_lo > 0.2:
        mid = 0.5 * (p_lo + p_hi)
        bp = ber_at(mid)
        if bp.ber < target_ber:
            p_hi, ber_hi = mid, bp.ber
        else:
            p_lo, ber_lo = mid, bp.ber
    # log-linear interpolation to the crossing; guard the error-free edge
    floor = 0.1 / config.bit_cap
    l_lo = np.log10(max(ber_lo, floor))
    l_hi = np.log10(max(ber_hi, floor))
    l_t = np.log10(target_ber)
    frac = (l_lo - l_t) / (l_lo - l_hi) if l_lo != l_hi else 0.5
    sensitivity = p_lo + frac * (p_hi - p_lo)
    budget = None if launch_dbm is None else launch_dbm - sensitivity
    return SensitivityResult(
        sensitivity_dbm=float(sensitivity),
        target_ber=target_ber,
        budget_db=budget,
        points=tuple(sorted(points, key=lambda q: q.p_sig_dbm)),
    )


def optical_budget(launch_dbm: float, sensitivity_dbm: float) -> float:
    """Loss a link can tolerate: launch power minus receiver sensitivity."""
    return launch_dbm - sensitivity_dbm
