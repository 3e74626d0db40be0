"""Opto-electronic model of the balanced receiver core.

Holds the device parameter set, the TIA frequency response, photocurrent
bookkeeping, the common-mode rejection model and the capacitance scaling law
for the input-referred noise current.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .units import dbm_to_watts

__all__ = [
    "ReceiverParams",
    "tia_response",
    "tia_response_mag2",
    "per_arm_photocurrent",
    "cmrr_spectrum",
    "mismatch_for_cmrr",
    "noise_current_for_capacitance",
]


@dataclass(frozen=True)
class ReceiverParams:
    """Opto-electronic constants of the receiver under simulation.

    Defaults describe the die-level assembly: 1.0 A/W photodiodes, 84%
    coupling between the glass mixer and the PIN array, 200 fF junction
    capacitance, 60 nA input-referred rms noise current over a 1 GHz
    reference band, 750 MHz receiver bandwidth, and LO compression setting
    in at 9.4 dBm.
    """

    responsivity: float = 1.0                 # A/W
    coupling_efficiency: float = 0.84         # dimensionless, (0, 1]
    c_pd: float = 200e-15                     # F
    input_noise_current_rms: float = 60e-9    # A over reference_bandwidth
    reference_bandwidth: float = 1e9          # Hz
    tia_bandwidth: float = 750e6              # Hz, -3 dB
    saturation_lo_power: float = dbm_to_watts(9.4)  # W
    arm_split: tuple[float, float] = (0.5, 0.5)
    arm_responsivity_mismatch: float = 0.0    # relative, arm 2 vs arm 1
    arm_skew: float = 0.0                     # s, differential delay

    def __post_init__(self) -> None:
        if self.responsivity <= 0:
            raise ValueError(f"responsivity must be > 0, got {self.responsivity}")
        if not 0 < self.coupling_efficiency <= 1:
            raise ValueError(
                f"coupling_efficiency must be in (0, 1], got {self.coupling_efficiency}"
            )
        if self.c_pd <= 0:
            raise ValueError(f"c_pd must be > 0, got {self.c_pd}")
        if self.input_noise_current_rms < 0:
            raise ValueError("input_noise_current_rms must be >= 0")
        if self.reference_bandwidth <= 0:
            raise ValueError("reference_bandwidth must be > 0")
        if self.tia_bandwidth <= 0:
            raise ValueError(f"tia_bandwidth must be > 0, got {self.tia_bandwidth}")
        if self.saturation_lo_power <= 0:
            raise ValueError("saturation_lo_power must be > 0")
        if len(self.arm_split) != 2 or min(self.arm_split) < 0:
            raise ValueError(f"arm_split must be two non-negative fractions, got {self.arm_split}")
        if abs(self.arm_split[0] + self.arm_split[1] - 1.0) > 1e-12:
            raise ValueError(f"arm_split must sum to 1, got {self.arm_split}")
        if self.arm_skew < 0:
            raise ValueError(f"arm_skew must be >= 0, got {self.arm_skew}")

    @property
    def effective_responsivity(self) -> float:
        """Responsivity times coupling efficiency (A/W at the pigtail)."""
        return self.responsivity * self.coupling_efficiency


def tia_response(freqs: np.ndarray, params: ReceiverParams) -> np.ndarray:
    """Complex receiver response, second-order Butterworth low-pass.

    Unity at DC, -3 dB at ``tia_bandwidth``: H(f) = 1 / (1 + j*sqrt(2)*u - u^2)
    with u = f / f_3dB, so |H|^2 = 1 / (1 + u^4).
    """
    u = np.asarray(freqs, dtype=float) / params.tia_bandwidth
    return 1.0 / (1.0 + 1j * np.sqrt(2.0) * u - u * u)


def tia_response_mag2(freqs: np.ndarray, params: ReceiverParams) -> np.ndarray:
    """|H(f)|^2 of the receiver response."""
    u = np.asarray(freqs, dtype=float) / params.tia_bandwidth
    return 1.0 / (1.0 + u ** 4)


def per_arm_photocurrent(p_in_w: float, params: ReceiverParams) -> tuple[float, float]:
    """DC photocurrent of each photodiode for an input power at the pigtail.

    Arm 2 carries the relative responsivity mismatch.  Linear in the input
    power; both arms equal with default parameters.
    """
    if p_in_w < 0:
        raise ValueError(f"input power must be >= 0, got {p_in_w}")
    r1 = params.responsivity
    r2 = params.responsivity * (1.0 - params.arm_responsivity_mismatch)
    eta = params.coupling_efficiency
    return (
        r1 * eta * params.arm_split[0] * p_in_w,
        r2 * eta * params.arm_split[1] * p_in_w,
    )


def cmrr_spectrum(
    params: ReceiverParams,
    freqs: np.ndarray,
    ceiling_db: float = 120.0,
) -> np.ndarray:
    """Common-mode rejection ratio versus frequency, in dB.

    Ratio of the single-illuminated (unbalanced, arm 1) response to the
    residual of the balanced difference.  Arm weights are split fraction
    times responsivity; arm 2 is delayed by the skew and derated by the
    responsivity mismatch.  Perfect cancellation is clamped at
    ``ceiling_db``.
    """
    f = np.asarray(freqs, dtype=float)
    if f.size == 0:
        raise ValueError("frequency grid is empty")
    if np.any(f <= 0) or np.any(np.diff(f) <= 0):
        raise ValueError("frequencies must be strictly positive and ascending")
    a1 = params.arm_split[0] * params.responsivity
    a2 = params.arm_split[1] * params.responsivity * (1.0 - params.arm_responsivity_mismatch)
    residual = np.abs(a1 - a2 * np.exp(-2j * np.pi * f * params.arm_skew))
    floor = a1 * 10.0 ** (-ceiling_db / 20.0)
    cmrr = 20.0 * np.log10(a1 / np.maximum(residual, floor))
    return np.minimum(cmrr, ceiling_db)


def mismatch_for_cmrr(
    target_db: float,
    freq: float,
    skew: float = 0.0,
) -> float:
    """Arm responsivity mismatch that reproduces a target CMRR at one frequency.

    Solves |1 - (1 - eps) e^{-j theta}| = 10^(-target/20) with
    theta = 2 pi f tau for the smaller non-negative root.  Raises if the skew
    alone already rejects less than the target.
    """
    if target_db <= 0:
        raise ValueError(f"target CMRR must be > 0 dB, got {target_db}")
    if freq <= 0:
        raise ValueError(f"frequency must be > 0, got {freq}")
    r = 10.0 ** (-target_db / 20.0)
    theta = 2.0 * np.pi * freq * skew
    disc = np.cos(theta) ** 2 - 1.0 + r * r
    if disc < 0:
        raise ValueError(
            f"skew of {skew} s alone limits CMRR below {target_db} dB at {freq} Hz"
        )
    eps = 1.0 - (np.cos(theta) - np.sqrt(disc))
    if not 0 <= eps < 1:
        eps = 1.0 - (np.cos(theta) + np.sqrt(disc))
    return float(eps)


def noise_current_for_capacitance(i_ref: float, c_ref: float, c_new: float) -> float:
    """Rescale an input noise current for a different photodiode capacitance.

    The TIA input noise grows with the square root of the capacitance it is
    loaded by: i = i_ref * sqrt(c_new / c_ref).
    """
    if c_ref <= 0 or c_new <= 0:
        raise ValueError(f"capacitances must be > 0, got c_ref={c_ref}, c_new={c_new}")
    if i_ref < 0:
        raise ValueError(f"reference noise current must be >= 0, got {i_ref}")
    return i_ref * np.sqrt(c_new / c_ref)
