"""Power and ratio unit conversions.

Scalar powers are carried as plain floats with the unit encoded in the
variable name (``*_dbm`` for dBm, ``*_w`` for watts).  The converters below
are the only sanctioned way to cross between the two, and they round-trip
to better than 1e-12 relative.
"""
from __future__ import annotations

import math

__all__ = ["dbm_to_watts", "watts_to_dbm", "db_to_linear", "linear_to_db"]


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watts_to_dbm(p_w: float) -> float:
    """Convert a power in watts (> 0) to dBm."""
    if p_w <= 0.0:
        raise ValueError(f"power must be > 0 W to express in dBm, got {p_w}")
    return 10.0 * math.log10(p_w / 1e-3)


def db_to_linear(x_db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """dB from a power ratio (> 0)."""
    if x <= 0.0:
        raise ValueError(f"ratio must be > 0, got {x}")
    return 10.0 * math.log10(x)
