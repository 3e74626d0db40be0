"""Single-tone linearity analysis of the TIA.

A weak signal offset from the LO produces a beat tone whose amplitude scales
with sqrt(P_LO * P_sig).  The TIA compresses once the instantaneous current
reaches the limiter ceiling; the operating window between the detectability
floor and the 1 dB compression ceiling is the dynamic range.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import defaults
from .noise import electronic_noise_psd
from .receiver import ReceiverParams, tia_response_mag2
from .units import dbm_to_watts, watts_to_dbm

__all__ = [
    "ToneBeatSpec",
    "DynamicRangeReport",
    "SweepPoint",
    "beat_current_rms",
    "limiter_fundamental_gain",
    "single_tone_sweep",
    "dynamic_range",
    "max_signal_power",
    "detection_noise_power",
]

# LO anchor of the compression scaling law: at 100 uW LO the 1 dB
# compression input sits at -38 dBm.
CEILING_REF_LO_W = 100e-6
CEILING_REF_DBM = -38.0


@dataclass(frozen=True)
class ToneBeatSpec:
    """LO/signal pair beating at a fixed frequency offset."""

    p_lo_w: float
    p_sig_w: float
    offset_freq: float = 120e6

    def validate(self, params: ReceiverParams) -> None:
        if self.p_lo_w < 0 or self.p_sig_w < 0:
            raise ValueError("powers must be >= 0")
        if not 0 < self.offset_freq <= params.tia_bandwidth:
            raise ValueError(
                f"offset_freq must be in (0, {params.tia_bandwidth}] Hz, "
                f"got {self.offset_freq}"
            )


@dataclass(frozen=True)
class DynamicRangeReport:
    floor_dbm: float      # minimum detectable signal
    ceiling_dbm: float    # 1 dB compression input
    range_db: float

    def __post_init__(self) -> None:
        if self.range_db < 0:
            raise ValueError("dynamic range must be >= 0 dB")


@dataclass(frozen=True)
class SweepPoint:
    input_dbm: float
    output_db: float      # output tone power, dB re 1 A^2
    detectable: bool


def beat_current_rms(spec: ToneBeatSpec, params: ReceiverParams) -> float:
    """RMS beat current at the offset frequency, linear regime.

    Peak beat amplitude across the balanced pair is
    2 R_eff sqrt(P_LO P_sig); rms is peak / sqrt(2), filtered by |H|.
    """
    spec.validate(params)
    h = np.sqrt(tia_response_mag2(np.array([spec.offset_freq]), params))[0]
    return float(
        np.sqrt(2.0) * params.effective_responsivity
        * np.sqrt(spec.p_lo_w * spec.p_sig_w) * h
    )


def limiter_fundamental_gain(u: float) -> float:
    """Fundamental gain of the tanh soft limiter for a sine of amplitude u.

    u is the drive normalized to the ceiling current; gain -> 1 as u -> 0.
    """
    if u <= 0:
        return 1.0
    val, _ = integrate.quad(lambda th: np.tanh(u * np.sin(th)) * np.sin(th), 0.0, np.pi)
    return (2.0 / np.pi) * val / u


def detection_noise_power(
    params: ReceiverParams,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
) -> float:
    """Electronic noise power the tone is judged against, A^2.

    Integrated over the full receiver response (converged well above the
    rolloff).  Electronic-only on purpose: the dark floor does not move with
    the LO, which keeps the dynamic range independent of LO power.
    """
    f = np.linspace(0.0, 20.0 * params.tia_bandwidth, 20001)
    return float(np.trapezoid(electronic_noise_psd(params, f, noise_corner_hz).psd, f))


def _tone_output_power(
    peak_a: float,
    offset_freq: float,
    params: ReceiverParams,
    ceiling_current_a: float,
    seed: int,
    samples_per_period: int = 64,
    n_periods: int = 64,
) -> float:
    """Fundamental tone power after the limiter and receiver response.

    Simulates the limited beat over an integer number of periods and
    extracts the fundamental by synchronous correlation.
    """
    if peak_a == 0.0:
        return 0.0
    n = samples_per_period * n_periods
    phi = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi)
    t = np.arange(n) / samples_per_period  # in periods
    tone = peak_a * np.sin(2.0 * np.pi * t + phi)
    limited = ceiling_current_a * np.tanh(tone / ceiling_current_a)
    fund = 2.0 * np.abs(np.mean(limited * np.exp(-2j * np.pi * t)))
    h2 = tia_response_mag2(np.array([offset_freq]), params)[0]
    return float(fund ** 2 * h2 / 2.0)


def single_tone_sweep(
    p_lo_w: float,
    p_sig_grid_dbm: np.ndarray,
    params: ReceiverParams,
    seed: int = 0,
    offset_freq: float = 120e6,
    ceiling_current_a: float = defaults.CEILING_CURRENT_A,
    detection_threshold: float = defaults.DETECTION_THRESHOLD,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
) -> list[SweepPoint]:
    """Output tone power and detectability across a signal power sweep."""
    grid = np.asarray(p_sig_grid_dbm, dtype=float)
    if grid.size and np.any(np.diff(grid) <= 0):
        raise ValueError("p_sig grid must be ascending")
    noise_floor = detection_threshold * detection_noise_power(params, noise_corner_hz)
    points = []
    for p_dbm in grid:
        p_sig = dbm_to_watts(p_dbm)
        peak = 2.0 * params.effective_responsivity * np.sqrt(p_lo_w * p_sig)
        out = _tone_output_power(peak, offset_freq, params, ceiling_current_a, seed)
        out_db = 10.0 * np.log10(out) if out > 0 else -np.inf
        points.append(SweepPoint(float(p_dbm), float(out_db), bool(out >= noise_floor)))
    return points


def dynamic_range(
    p_lo_w: float,
    params: ReceiverParams,
    offset_freq: float = 120e6,
    ceiling_current_a: float = defaults.CEILING_CURRENT_A,
    detection_threshold: float = defaults.DETECTION_THRESHOLD,
    noise_corner_hz: float = defaults.NOISE_CORNER_HZ,
) -> DynamicRangeReport:
    """Detectability floor, 1 dB compression ceiling, and their span."""
    if p_lo_w <= 0:
        raise ValueError(f"LO power must be > 0, got {p_lo_w}")
    r_eff = params.effective_responsivity
    h2 = tia_response_mag2(np.array([offset_freq]), params)[0]
    # floor: tone power equals the margin times the electronic noise power
    noise_floor = detection_threshold * detection_noise_power(params, noise_corner_hz)
    p_floor = noise_floor / (2.0 * r_eff ** 2 * p_lo_w * h2)
    # ceiling: drive where the limiter fundamental is 1 dB into compression
    u_c = optimize.brentq(
        lambda u: limiter_fundamental_gain(u) - 10.0 ** (-1.0 / 20.0),
        1e-4, 20.0, xtol=1e-12,
    )
    peak_c = u_c * ceiling_current_a
    p_ceil = peak_c ** 2 / (4.0 * r_eff ** 2 * p_lo_w)
    floor_dbm = watts_to_dbm(p_floor)
    ceiling_dbm = watts_to_dbm(p_ceil)
    return DynamicRangeReport(floor_dbm, ceiling_dbm, ceiling_dbm - floor_dbm)


def max_signal_power(p_lo_w: float, params: ReceiverParams | None = None) -> float:
    """Largest signal power (dBm) still inside the linear region.

    The sqrt(P_LO P_sig) mixing product holds the compression point at a
    fixed beat current, so the ceiling scales inversely with LO power:
    ceiling(p_lo) = ceiling(p_ref) + 10 log10(p_ref / p_lo), anchored at
    100 uW -> -38 dBm.
    """
    if p_lo_w <= 0:
        raise ValueError(f"LO power must be > 0, got {p_lo_w}")
    return CEILING_REF_DBM + 10.0 * np.log10(CEILING_REF_LO_W / p_lo_w)
