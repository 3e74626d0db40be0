"""Simulation toolkit for a die-level balanced homodyne receiver.

Covers the characterization procedures of the device (CMRR, clearance and
QCNR estimation, TIA linearity), a heterodyne QPSK transmission experiment
(BER, sensitivity, optical budget), and an asymptotic CV-QKD key-rate study
with an untrusted receiver.
"""
from .receiver import (
    ReceiverParams,
    cmrr_spectrum,
    mismatch_for_cmrr,
    noise_current_for_capacitance,
    per_arm_photocurrent,
    tia_response,
    tia_response_mag2,
)
from .noise import (
    NegativeClearanceError,
    NoiseSpectrum,
    NoiseTrace,
    QcnrReport,
    apply_saturation,
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
from .linearity import (
    DynamicRangeReport,
    ToneBeatSpec,
    beat_current_rms,
    dynamic_range,
    max_signal_power,
    single_tone_sweep,
)
from .qpsk import (
    BerPoint,
    DemodulationError,
    ModemConfig,
    SearchFailureError,
    SensitivityResult,
    demodulate,
    front_end,
    generate_qpsk,
    measure_ber,
    measure_ber_awgn,
    optical_budget,
    sensitivity_search,
)
from .cvqkd import (
    CovarianceError,
    InfeasibleError,
    KeyRateResult,
    LinkParams,
    effective_transmittance,
    key_rate,
    max_reach,
    optimize_modulation_variance,
    skr_vs_distance,
    total_excess_noise_at_channel_input,
)
from .units import dbm_to_watts, watts_to_dbm

__version__ = "0.1.0"
