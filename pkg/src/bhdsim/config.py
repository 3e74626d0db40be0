"""Configuration loading for the command-line harness.

Parameters come from three layers with increasing precedence: shipped
defaults, an optional line-oriented ``key = value`` file (``#`` comments),
and command-line overrides.  Keys use a flat, module-prefixed namespace,
e.g. ``receiver.coupling_efficiency``.

Quantity strings accept SI suffixes: powers ("12.3mW", "-38dBm", bare
numbers are dBm), times ("10ps"), frequencies ("750MHz").
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import defaults
from .cvqkd import LinkParams
from .qpsk import ModemConfig
from .receiver import ReceiverParams
from .units import dbm_to_watts, watts_to_dbm

__all__ = [
    "CalibrationValues",
    "RunConfig",
    "ConfigError",
    "load_key_value_file",
    "write_key_value_file",
    "build_run_config",
    "parse_power_dbm",
    "parse_time_s",
    "parse_freq_hz",
    "parse_bool",
    "ENV_CONFIG_PATH",
]

ENV_CONFIG_PATH = "BHDSIM_CONFIG"

_QUANTITY_RE = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s*([a-zA-Z]*)\s*$")

_POWER_SUFFIX_W = {"w": 1.0, "mw": 1e-3, "uw": 1e-6, "nw": 1e-9, "pw": 1e-12}
_TIME_SUFFIX_S = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15}
_FREQ_SUFFIX_HZ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


class ConfigError(ValueError):
    """A configuration entry failed to parse or validate."""


def _split_quantity(text: str) -> tuple[float, str]:
    m = _QUANTITY_RE.match(str(text))
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}")
    return float(m.group(1)), m.group(2).lower()


def parse_power_dbm(text: str) -> float:
    """Power in dBm from a quantity string; bare numbers are dBm."""
    value, suffix = _split_quantity(text)
    if suffix in ("", "dbm"):
        return value
    if suffix in _POWER_SUFFIX_W:
        return watts_to_dbm(value * _POWER_SUFFIX_W[suffix])
    raise ConfigError(f"unknown power unit {suffix!r} in {text!r}")


def parse_power_w(text: str) -> float:
    """Power in watts from a quantity string; bare numbers are watts."""
    value, suffix = _split_quantity(text)
    if suffix == "":
        return value
    if suffix == "dbm":
        return dbm_to_watts(value)
    if suffix in _POWER_SUFFIX_W:
        return value * _POWER_SUFFIX_W[suffix]
    raise ConfigError(f"unknown power unit {suffix!r} in {text!r}")


def parse_time_s(text: str) -> float:
    """Time in seconds from a quantity string; bare numbers are seconds."""
    value, suffix = _split_quantity(text)
    if suffix == "":
        return value
    if suffix in _TIME_SUFFIX_S:
        return value * _TIME_SUFFIX_S[suffix]
    raise ConfigError(f"unknown time unit {suffix!r} in {text!r}")


def parse_freq_hz(text: str) -> float:
    """Frequency in Hz from a quantity string; bare numbers are Hz."""
    value, suffix = _split_quantity(text)
    if suffix == "":
        return value
    if suffix in _FREQ_SUFFIX_HZ:
        return value * _FREQ_SUFFIX_HZ[suffix]
    raise ConfigError(f"unknown frequency unit {suffix!r} in {text!r}")


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def load_key_value_file(path: str | Path) -> dict[str, str]:
    """Parse a ``key = value`` file with ``#`` comments into a flat dict."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def write_key_value_file(path: str | Path, entries: dict[str, object], header: str = "") -> None:
    """Write a flat dict as a ``key = value`` file (atomically)."""
    lines = [f"# {h}" for h in header.splitlines() if h] if header else []
    lines += [f"{k} = {_format_value(v)}" for k, v in entries.items()]
    text = "\n".join(lines) + "\n"
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _format_value(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


@dataclass(frozen=True)
class CalibrationValues:
    """The fitted model knobs a calibration run produces."""

    noise_corner_hz: float = defaults.NOISE_CORNER_HZ
    compression_exponent: float = defaults.COMPRESSION_EXPONENT
    timedomain_band_hz: float = defaults.TIMEDOMAIN_BAND_HZ
    cmrr_mismatch: float = defaults.CMRR_MISMATCH
    ceiling_current_a: float = defaults.CEILING_CURRENT_A
    detection_threshold: float = defaults.DETECTION_THRESHOLD
    qpsk_penalty_db: float = defaults.QPSK_PENALTY_DB


@dataclass
class RunConfig:
    """Fully resolved parameter bundle for one CLI invocation."""

    params: ReceiverParams
    calibration: CalibrationValues
    modem: ModemConfig
    link: LinkParams
    seed: int = 42
    out_dir: Path = Path("out")
    plot: bool = True
    sources: dict[str, str] = field(default_factory=dict)  # key -> origin, for the run report


# key -> (parser, target section, field name)
_SCHEMA: dict[str, tuple] = {
    "receiver.responsivity": (float, "receiver", "responsivity"),
    "receiver.coupling_efficiency": (float, "receiver", "coupling_efficiency"),
    "receiver.c_pd": (float, "receiver", "c_pd"),
    "receiver.input_noise_current_rms": (float, "receiver", "input_noise_current_rms"),
    "receiver.reference_bandwidth": (parse_freq_hz, "receiver", "reference_bandwidth"),
    "receiver.tia_bandwidth": (parse_freq_hz, "receiver", "tia_bandwidth"),
    "receiver.saturation_lo_dbm": (parse_power_dbm, "receiver", "saturation_lo_power"),
    "receiver.arm_split": (None, "receiver", "arm_split"),
    "receiver.arm_responsivity_mismatch": (float, "receiver", "arm_responsivity_mismatch"),
    "receiver.arm_skew": (parse_time_s, "receiver", "arm_skew"),
    "calibration.noise_corner_hz": (parse_freq_hz, "calibration", "noise_corner_hz"),
    "calibration.compression_exponent": (float, "calibration", "compression_exponent"),
    "calibration.timedomain_band_hz": (parse_freq_hz, "calibration", "timedomain_band_hz"),
    "calibration.cmrr_mismatch": (float, "calibration", "cmrr_mismatch"),
    "calibration.ceiling_current_a": (float, "calibration", "ceiling_current_a"),
    "calibration.detection_threshold": (float, "calibration", "detection_threshold"),
    "calibration.qpsk_penalty_db": (float, "calibration", "qpsk_penalty_db"),
    "modem.baud": (parse_freq_hz, "modem", "baud"),
    "modem.if_freq": (parse_freq_hz, "modem", "if_freq"),
    "modem.rolloff": (float, "modem", "rolloff"),
    "modem.sample_rate": (parse_freq_hz, "modem", "sample_rate"),
    "modem.n_symbols": (int, "modem", "n_symbols"),
    "modem.lo_dbm": (parse_power_dbm, "modem", "lo_power_w"),
    "modem.filter_span": (int, "modem", "filter_span"),
    "modem.differential": (parse_bool, "modem", "differential"),
    "modem.bit_cap": (int, "modem", "bit_cap"),
    "modem.min_errors": (int, "modem", "min_errors"),
    "link.fiber_loss_db_per_km": (float, "link", "fiber_loss_db_per_km"),
    "link.detection_loss_db": (float, "link", "detection_loss_db"),
    "link.channel_excess_noise": (float, "link", "channel_excess_noise"),
    "link.receiver_excess_noise": (float, "link", "receiver_excess_noise"),
    "link.beta": (float, "link", "beta"),
    "link.symbol_rate": (parse_freq_hz, "link", "symbol_rate"),
    "link.noise_reference": (str, "link", "noise_reference"),
}


def _parse_arm_split(text: str) -> tuple[float, float]:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ConfigError(f"arm_split needs two comma-separated fractions, got {text!r}")
    return float(parts[0]), float(parts[1])


def build_run_config(
    file_entries: dict[str, str] | None = None,
    overrides: dict[str, str] | None = None,
    seed: int = 42,
    out_dir: str | Path = "out",
    plot: bool = True,
) -> RunConfig:
    """Assemble a validated RunConfig from the three precedence layers."""
    sections: dict[str, dict] = {"receiver": {}, "calibration": {}, "modem": {}, "link": {}}
    sources: dict[str, str] = {}
    for origin, layer in (("config-file", file_entries or {}), ("flag", overrides or {})):
        for key, raw in layer.items():
            if key not in _SCHEMA:
                raise ConfigError(f"unknown configuration key {key!r}")
            parser, section, name = _SCHEMA[key]
            try:
                if key == "receiver.arm_split":
                    value = _parse_arm_split(raw)
                elif key == "receiver.saturation_lo_dbm":
                    value = dbm_to_watts(parse_power_dbm(raw))
                elif key == "modem.lo_dbm":
                    value = dbm_to_watts(parse_power_dbm(raw))
                else:
                    value = parser(raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"invalid value for {key}: {exc}") from exc
            sections[section][name] = value
            sources[key] = origin

    # the shipped calibrated mismatch is the receiver default unless overridden
    calib_kwargs = dict(sections["calibration"])
    try:
        calibration = CalibrationValues(**calib_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid calibration section: {exc}") from exc
    recv_kwargs = dict(sections["receiver"])
    recv_kwargs.setdefault("arm_responsivity_mismatch", calibration.cmrr_mismatch)
    modem_kwargs = dict(sections["modem"])
    modem_kwargs.setdefault("penalty_db", calibration.qpsk_penalty_db)
    try:
        params = ReceiverParams(**recv_kwargs)
        modem = ModemConfig(**modem_kwargs)
        link = LinkParams(**sections["link"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        params=params,
        calibration=calibration,
        modem=modem,
        link=link,
        seed=seed,
        out_dir=Path(out_dir),
        plot=plot,
        sources=sources,
    )


def run_config_entries(run: RunConfig) -> dict[str, object]:
    """Flatten a RunConfig back into config-file entries (for run reports)."""
    out: dict[str, object] = {}
    p = run.params
    out["receiver.responsivity"] = p.responsivity
    out["receiver.coupling_efficiency"] = p.coupling_efficiency
    out["receiver.c_pd"] = p.c_pd
    out["receiver.input_noise_current_rms"] = p.input_noise_current_rms
    out["receiver.reference_bandwidth"] = p.reference_bandwidth
    out["receiver.tia_bandwidth"] = p.tia_bandwidth
    out["receiver.saturation_lo_dbm"] = watts_to_dbm(p.saturation_lo_power)
    out["receiver.arm_split"] = f"{p.arm_split[0]:.10g},{p.arm_split[1]:.10g}"
    out["receiver.arm_responsivity_mismatch"] = p.arm_responsivity_mismatch
    out["receiver.arm_skew"] = p.arm_skew
    c = run.calibration
    for f in fields(CalibrationValues):
        out[f"calibration.{f.name}"] = getattr(c, f.name)
    m = run.modem
    out["modem.baud"] = m.baud
    out["modem.if_freq"] = m.if_freq
    out["modem.rolloff"] = m.rolloff
    out["modem.sample_rate"] = m.sample_rate
    out["modem.n_symbols"] = m.n_symbols
    out["modem.lo_dbm"] = watts_to_dbm(m.lo_power_w)
    out["modem.filter_span"] = m.filter_span
    out["modem.differential"] = m.differential
    out["modem.bit_cap"] = m.bit_cap
    out["modem.min_errors"] = m.min_errors
    ln = run.link
    out["link.fiber_loss_db_per_km"] = ln.fiber_loss_db_per_km
    out["link.detection_loss_db"] = ln.detection_loss_db
    out["link.channel_excess_noise"] = ln.channel_excess_noise
    out["link.receiver_excess_noise"] = ln.receiver_excess_noise
    out["link.beta"] = ln.beta
    out["link.symbol_rate"] = ln.symbol_rate
    out["link.noise_reference"] = ln.noise_reference
    return out
