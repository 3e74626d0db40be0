"""Figure rendering for the CLI report path.

Each command that writes delimited output also renders the matching figure
next to it.  The CSV files remain the data contract; figures are a
convenience view and never feed back into any computation.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_cmrr",
    "plot_clearance",
    "plot_qcnr_vs_lo",
    "plot_linearity",
    "plot_ber",
    "plot_constellation",
    "plot_skr",
]

_RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "font.size": 9,
}


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_cmrr(freqs, cmrr_db, path: str | Path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.semilogx(np.asarray(freqs) / 1e9, cmrr_db)
        ax.set_xlabel("frequency (GHz)")
        ax.set_ylabel("CMRR (dB)")
        ax.set_title("common-mode rejection vs frequency")
        _save(fig, path)


def plot_clearance(curves: dict[float, tuple], path: str | Path) -> None:
    """curves: lo_dbm -> (freqs, clearance_db)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for lo_dbm in sorted(curves):
            f, c = curves[lo_dbm]
            ax.semilogx(np.asarray(f) / 1e9, c, label=f"{lo_dbm:g} dBm")
        ax.set_xlabel("frequency (GHz)")
        ax.set_ylabel("clearance (dB)")
        ax.set_title("shot-to-electronic noise clearance")
        ax.legend(title="LO power", fontsize=7)
        _save(fig, path)


def plot_qcnr_vs_lo(lo_dbm, fd_db, td_db, path: str | Path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(lo_dbm, fd_db, "o-", label="frequency domain")
        ax.plot(lo_dbm, td_db, "s--", label="time domain")
        ax.set_xlabel("LO power (dBm)")
        ax.set_ylabel("QCNR (dB)")
        ax.set_title("quantum-to-classical noise ratio vs LO power")
        ax.legend()
        _save(fig, path)


def plot_linearity(input_dbm, output_db, detectable, report, path: str | Path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        inp = np.asarray(input_dbm)
        out = np.asarray(output_db)
        det = np.asarray(detectable, dtype=bool)
        ax.plot(inp[det], out[det], "o", ms=3, label="detectable")
        if np.any(~det):
            ax.plot(inp[~det], out[~det], "x", ms=4, label="below noise")
        for x, name in ((report.floor_dbm, "floor"), (report.ceiling_dbm, "ceiling")):
            ax.axvline(x, color="k", lw=0.8, ls=":")
            ax.annotate(f"{name} {x:.1f} dBm", (x, ax.get_ylim()[0]),
                        rotation=90, fontsize=7, va="bottom", ha="right")
        ax.set_xlabel("input signal power (dBm)")
        ax.set_ylabel("output tone power (dB re 1 A$^2$)")
        ax.set_title(f"single-tone linearity, dynamic range {report.range_db:.1f} dB")
        ax.legend(fontsize=7)
        _save(fig, path)


def plot_ber(points, sensitivity_dbm, target_ber, path: str | Path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        p = [q.p_sig_dbm for q in points if q.ber > 0]
        ber = [q.ber for q in points if q.ber > 0]
        ax.semilogy(p, ber, "o-", ms=3)
        ax.axhline(target_ber, color="k", lw=0.8, ls=":")
        if np.isfinite(sensitivity_dbm):
            ax.axvline(sensitivity_dbm, color="r", lw=0.8, ls="--",
                       label=f"sensitivity {sensitivity_dbm:.1f} dBm")
            ax.legend(fontsize=7)
        ax.set_xlabel("received power (dBm)")
        ax.set_ylabel("BER")
        ax.set_title("QPSK bit error rate")
        _save(fig, path)


def plot_constellation(z, path: str | Path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 4.2))
        z = np.asarray(z)
        ax.plot(z.real, z.imag, ".", ms=1.5, alpha=0.4)
        ax.set_xlabel("I")
        ax.set_ylabel("Q")
        ax.set_title("recovered constellation")
        ax.set_aspect("equal")
        _save(fig, path)


def plot_skr(curves: dict[float, tuple], path: str | Path) -> None:
    """curves: zeta -> (distances_km, skr_bps)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for zeta in sorted(curves):
            d, s = curves[zeta]
            s = np.asarray(s, dtype=float)
            mask = s > 0
            ax.semilogy(np.asarray(d)[mask], s[mask] / 1e6, label=f"{zeta:g}")
        ax.set_xlabel("distance (km)")
        ax.set_ylabel("secure key rate (Mb/s)")
        ax.set_title("CV-QKD key rate, untrusted receiver")
        ax.legend(title="channel noise (SNU)", fontsize=7)
        _save(fig, path)
