"""Command-line harness.

Subcommands reproduce the characterization and system studies of the
receiver one by one: ``cmrr``, ``qcnr``, ``linearity``, ``qpsk``, ``skr``
and ``calibrate``.  Every command writes CSV files (plus rendered figures
and a run report) into the output directory; reruns with the same
configuration and seed are byte-identical on the CSV side.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .calibrate import calibrate
from .config import (
    ENV_CONFIG_PATH,
    ConfigError,
    RunConfig,
    build_run_config,
    load_key_value_file,
    parse_freq_hz,
    parse_power_dbm,
    run_config_entries,
    write_key_value_file,
)
from .cvqkd import InfeasibleError, max_reach, optimize_modulation_variance
from .linearity import dynamic_range, single_tone_sweep
from .noise import (
    default_frequency_grid,
    electronic_noise_psd,
    qcnr_report_frequency_domain,
    qcnr_report_time_domain,
    total_noise_psd,
)
from .qpsk import (
    SearchFailureError,
    demodulate_soft,
    front_end,
    generate_qpsk,
    measure_ber,
    sensitivity_search,
)
from .receiver import cmrr_spectrum
from .units import dbm_to_watts


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.10g}"


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    """Write rows atomically with a fixed header and '.' decimal separator."""
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    tmp = Path(str(path) + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _write_run_report(run: RunConfig, command: str, outputs: list[Path],
                      extra: dict | None = None) -> None:
    entries: dict[str, object] = {
        "command": command,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": "%d.%d.%d" % sys.version_info[:3],
        "seed": run.seed,
    }
    entries.update(run_config_entries(run))
    for k, v in (extra or {}).items():
        entries[k] = v
    entries["outputs"] = ";".join(p.name for p in outputs)
    write_key_value_file(run.out_dir / "run_report.txt", entries,
                         header=f"bhdsim {command} run report")


def _seed_int(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1)[0])


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file "
                                    f"(default from ${ENV_CONFIG_PATH})")
    p.add_argument("--seed", type=int, default=42, help="master random seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key (repeatable)")


def _build_run(args, extra_overrides: dict[str, str]) -> RunConfig:
    cfg_path = args.config or os.environ.get(ENV_CONFIG_PATH)
    file_entries = load_key_value_file(cfg_path) if cfg_path else None
    overrides: dict[str, str] = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    overrides.update(extra_overrides)
    run = build_run_config(
        file_entries=file_entries,
        overrides=overrides,
        seed=args.seed,
        out_dir=args.out,
        plot=not args.no_plot,
    )
    run.out_dir.mkdir(parents=True, exist_ok=True)
    return run


# ---------------------------------------------------------------- commands

def _cmd_cmrr(args) -> int:
    extra: dict[str, str] = {}
    if args.mismatch is not None:
        extra["receiver.arm_responsivity_mismatch"] = args.mismatch
    if args.skew is not None:
        extra["receiver.arm_skew"] = args.skew
    run = _build_run(args, extra)
    freqs = np.logspace(np.log10(parse_freq_hz(args.f_min)),
                        np.log10(parse_freq_hz(args.f_max)), args.n_points)
    cmrr = cmrr_spectrum(run.params, freqs, ceiling_db=args.ceiling_db)
    out = run.out_dir / "cmrr.csv"
    _write_csv(out, ["freq_hz", "cmrr_db"], list(zip(freqs, cmrr)))
    outputs = [out]
    if run.plot:
        from .plots import plot_cmrr

        fig = run.out_dir / "cmrr.png"
        plot_cmrr(freqs, cmrr, fig)
        outputs.append(fig)
    _write_run_report(run, "cmrr", outputs)
    return 0


def _default_lo_grid(lo_min: float, lo_max: float, step: float) -> np.ndarray:
    grid = list(np.arange(lo_min, lo_max + 1e-9, step))
    for anchor in (9.4, 10.9):
        if lo_min <= anchor <= lo_max:
            grid.append(anchor)
    return np.unique(np.round(grid, 6))


def _cmd_qcnr(args) -> int:
    run = _build_run(args, {})
    cal = run.calibration
    lo_grid = _default_lo_grid(args.lo_min, args.lo_max, args.lo_step)
    band_lo = parse_freq_hz(args.band_lo)
    band_hi = parse_freq_hz(args.band_hi)
    freqs = default_frequency_grid()
    elec = electronic_noise_psd(run.params, freqs,
                                noise_corner_hz=cal.noise_corner_hz)
    spectra_rows = [("electronic", float("nan"), 0.0, f, s)
                    for f, s in zip(freqs, elec.psd)]
    clearance_rows = []
    report_rows = []
    curves = {}
    fd_list, td_list = [], []
    for i, lo_dbm in enumerate(lo_grid):
        lo_w = dbm_to_watts(float(lo_dbm))
        total = total_noise_psd(lo_w, run.params, freqs,
                                noise_corner_hz=cal.noise_corner_hz,
                                compression_exponent=cal.compression_exponent)
        spectra_rows += [("total", lo_dbm, lo_w, f, s)
                         for f, s in zip(freqs, total.psd)]
        cl = 10.0 * np.log10(total.psd / elec.psd)
        curves[float(lo_dbm)] = (freqs, cl)
        clearance_rows += [(lo_dbm, lo_w, f, c) for f, c in zip(freqs, cl)]
        fd = qcnr_report_frequency_domain(
            lo_w, run.params, band_lo, band_hi,
            noise_corner_hz=cal.noise_corner_hz,
            compression_exponent=cal.compression_exponent)
        td = qcnr_report_time_domain(
            lo_w, run.params, seed=_seed_int(run.seed, i),
            n_samples=args.trace_samples,
            band_hz=cal.timedomain_band_hz,
            noise_corner_hz=cal.noise_corner_hz,
            compression_exponent=cal.compression_exponent)
        fd_list.append(fd.qcnr_db)
        td_list.append(td.qcnr_db)
        for rep in (fd, td):
            b_lo, b_hi = rep.band if rep.band else (0.0, cal.timedomain_band_hz)
            report_rows.append((
                lo_dbm, lo_w, rep.method, rep.electronic_variance,
                rep.total_variance, rep.quantum_variance, rep.qcnr_db,
                b_lo, b_hi,
            ))
    out_spec = run.out_dir / "spectra.csv"
    _write_csv(out_spec, ["label", "lo_dbm", "lo_w", "freq_hz", "psd_a2_per_hz"],
               spectra_rows)
    out_cl = run.out_dir / "clearance.csv"
    _write_csv(out_cl, ["lo_dbm", "lo_w", "freq_hz", "clearance_db"], clearance_rows)
    out_rep = run.out_dir / "qcnr.csv"
    _write_csv(out_rep, ["lo_dbm", "lo_w", "method", "electronic_variance_a2",
                         "total_variance_a2", "quantum_variance_a2", "qcnr_db",
                         "band_lo_hz", "band_hi_hz"], report_rows)
    outputs = [out_spec, out_cl, out_rep]
    if run.plot:
        from .plots import plot_clearance, plot_qcnr_vs_lo

        f1 = run.out_dir / "clearance.png"
        sub = {k: curves[k] for k in list(sorted(curves))[:: max(1, len(curves) // 6)]}
        plot_clearance(sub, f1)
        f2 = run.out_dir / "qcnr.png"
        plot_qcnr_vs_lo(lo_grid, fd_list, td_list, f2)
        outputs += [f1, f2]
    _write_run_report(run, "qcnr", outputs)
    return 0


def _cmd_linearity(args) -> int:
    run = _build_run(args, {})
    cal = run.calibration
    p_lo_w = dbm_to_watts(parse_power_dbm(args.p_lo))
    grid = np.arange(args.sig_min, args.sig_max + 1e-9, args.sig_step)
    points = single_tone_sweep(
        p_lo_w, grid, run.params, seed=run.seed,
        offset_freq=parse_freq_hz(args.offset_freq),
        ceiling_current_a=cal.ceiling_current_a,
        detection_threshold=cal.detection_threshold,
        noise_corner_hz=cal.noise_corner_hz)
    report = dynamic_range(
        p_lo_w, run.params,
        offset_freq=parse_freq_hz(args.offset_freq),
        ceiling_current_a=cal.ceiling_current_a,
        detection_threshold=cal.detection_threshold,
        noise_corner_hz=cal.noise_corner_hz)
    out_sweep = run.out_dir / "linearity.csv"
    _write_csv(out_sweep, ["input_dbm", "input_w", "output_db", "detectable"],
               [(q.input_dbm, dbm_to_watts(q.input_dbm), q.output_db, q.detectable)
                for q in points])
    out_range = run.out_dir / "dynamic_range.csv"
    _write_csv(out_range, ["floor_dbm", "ceiling_dbm", "range_db"],
               [(report.floor_dbm, report.ceiling_dbm, report.range_db)])
    outputs = [out_sweep, out_range]
    if run.plot:
        from .plots import plot_linearity

        fig = run.out_dir / "linearity.png"
        plot_linearity([q.input_dbm for q in points],
                       [q.output_db for q in points],
                       [q.detectable for q in points], report, fig)
        outputs.append(fig)
    _write_run_report(run, "linearity", outputs,
                      extra={"p_lo_dbm": parse_power_dbm(args.p_lo)})
    return 0


def _cmd_qpsk(args) -> int:
    extra: dict[str, str] = {}
    if args.lo_dbm is not None:
        extra["modem.lo_dbm"] = args.lo_dbm
    run = _build_run(args, extra)
    cal = run.calibration
    modem = run.modem
    if args.no_noise:
        modem = replace(modem, noise_enabled=False)
    outputs = []
    if modem.noise_enabled:
        result = sensitivity_search(
            modem, run.params, target_ber=args.target_ber, seed=run.seed,
            launch_dbm=args.launch_dbm,
            noise_corner_hz=cal.noise_corner_hz,
            compression_exponent=cal.compression_exponent)
        points = result.points
        sens = result.sensitivity_dbm
        budget = result.budget_db
    else:
        grid = np.arange(-75.0, -29.9, 5.0)
        points = tuple(
            measure_ber(modem, float(p), run.params,
                        seed=_seed_int(run.seed, i),
                        noise_corner_hz=cal.noise_corner_hz,
                        compression_exponent=cal.compression_exponent)
            for i, p in enumerate(grid)
        )
        sens = float("nan")
        budget = float("nan")
    out_ber = run.out_dir / "ber.csv"
    _write_csv(out_ber, ["p_sig_dbm", "p_sig_w", "ber", "errors", "bits"],
               [(q.p_sig_dbm, dbm_to_watts(q.p_sig_dbm), q.ber,
                 q.errors_counted, q.bits_tested) for q in points])
    out_sens = run.out_dir / "sensitivity.csv"
    _write_csv(out_sens,
               ["sensitivity_dbm", "target_ber", "launch_dbm", "budget_db"],
               [(sens, args.target_ber, args.launch_dbm, budget)])
    outputs += [out_ber, out_sens]
    # constellation dump at a fixed received power
    dump_cfg = replace(modem, n_symbols=4096)
    symbols, waveform = generate_qpsk(dump_cfg, _seed_int(run.seed, 9001))
    trace = front_end(waveform, dbm_to_watts(args.constellation_dbm), dump_cfg,
                      run.params, _seed_int(run.seed, 9002),
                      noise_corner_hz=cal.noise_corner_hz,
                      compression_exponent=cal.compression_exponent)
    z = demodulate_soft(trace, dump_cfg)
    core = z[dump_cfg.filter_span: dump_cfg.filter_span + dump_cfg.n_symbols]
    core = core / np.sqrt(np.mean(np.abs(core) ** 2))
    out_const = run.out_dir / "constellation.csv"
    _write_csv(out_const, ["i", "q"], [(c.real, c.imag) for c in core])
    outputs.append(out_const)
    if run.plot:
        from .plots import plot_ber, plot_constellation

        f1 = run.out_dir / "ber.png"
        plot_ber(points, sens, args.target_ber, f1)
        f2 = run.out_dir / "constellation.png"
        plot_constellation(core, f2)
        outputs += [f1, f2]
    _write_run_report(run, "qpsk", outputs,
                      extra={"sensitivity_dbm": sens, "budget_db": budget,
                             "constellation_dbm": args.constellation_dbm})
    return 0


def _cmd_skr(args) -> int:
    run = _build_run(args, {})
    zetas = [float(z) for z in args.zeta.split(",")]
    distances = np.arange(args.d_min, args.d_max + 1e-9, args.d_step)
    rows = []
    curves = {}
    for zeta in zetas:
        link = replace(run.link, channel_excess_noise=zeta)
        skrs = []
        for d in distances:
            res = optimize_modulation_variance(replace(link, distance_km=float(d)))
            rows.append((float(d), zeta, res.v_a, res.skr))
            skrs.append(res.skr)
        curves[zeta] = (distances, skrs)
    out_skr = run.out_dir / "skr.csv"
    _write_csv(out_skr, ["distance_km", "zeta_snu", "v_a_opt", "skr_bps"], rows)
    outputs = [out_skr]
    reach_rows = []
    if args.reach_floor_bps > 0:
        for zeta in zetas:
            link = replace(run.link, channel_excess_noise=zeta)
            try:
                reach = max_reach(link, args.reach_floor_bps)
            except InfeasibleError:
                reach = float("nan")
            reach_rows.append((zeta, args.reach_floor_bps, reach))
        out_reach = run.out_dir / "reach.csv"
        _write_csv(out_reach, ["zeta_snu", "floor_bps", "reach_km"], reach_rows)
        outputs.append(out_reach)
    if run.plot:
        from .plots import plot_skr

        fig = run.out_dir / "skr.png"
        plot_skr(curves, fig)
        outputs.append(fig)
    _write_run_report(run, "skr", outputs)
    return 0


def _cmd_calibrate(args) -> int:
    run = _build_run(args, {})
    targets = None
    if args.anchors:
        targets = {k: float(v) for k, v in load_key_value_file(args.anchors).items()}
    report = calibrate(targets, params=replace(run.params, arm_responsivity_mismatch=0.0),
                       threshold_db=args.threshold_db)
    v = report.values
    out_cfg = run.out_dir / "calibration.cfg"
    write_key_value_file(out_cfg, {
        "calibration.noise_corner_hz": v.noise_corner_hz,
        "calibration.compression_exponent": v.compression_exponent,
        "calibration.timedomain_band_hz": v.timedomain_band_hz,
        "calibration.cmrr_mismatch": v.cmrr_mismatch,
        "calibration.ceiling_current_a": v.ceiling_current_a,
        "calibration.detection_threshold": v.detection_threshold,
        "calibration.qpsk_penalty_db": v.qpsk_penalty_db,
    }, header="fitted calibration profile; load with --config or --set")
    out_txt = run.out_dir / "calibration_report.txt"
    tmp = Path(str(out_txt) + ".tmp")
    tmp.write_text(report.summary() + "\n")
    os.replace(tmp, out_txt)
    _write_run_report(run, "calibrate", [out_cfg, out_txt])
    print(report.summary())
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhdsim",
        description="balanced homodyne receiver simulation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"bhdsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cmrr", help="common-mode rejection spectrum")
    _add_common(p)
    p.add_argument("--mismatch", help="arm responsivity mismatch (relative)")
    p.add_argument("--skew", help="arm skew, e.g. '10ps'")
    p.add_argument("--f-min", default="10MHz")
    p.add_argument("--f-max", default="2GHz")
    p.add_argument("--n-points", type=int, default=512)
    p.add_argument("--ceiling-db", type=float, default=120.0)
    p.set_defaults(func=_cmd_cmrr)

    p = sub.add_parser("qcnr", help="clearance spectra and QCNR estimates over LO power")
    _add_common(p)
    p.add_argument("--lo-min", type=float, default=-5.0, help="dBm")
    p.add_argument("--lo-max", type=float, default=12.0, help="dBm")
    p.add_argument("--lo-step", type=float, default=1.0, help="dB")
    p.add_argument("--band-lo", default="1MHz", help="integration band lower edge")
    p.add_argument("--band-hi", default="1GHz", help="integration band upper edge")
    p.add_argument("--trace-samples", type=int, default=2 ** 20)
    p.set_defaults(func=_cmd_qcnr)

    p = sub.add_parser("linearity", help="single-tone sweep and dynamic range")
    _add_common(p)
    p.add_argument("--p-lo", default="100uW", help="LO power, e.g. '100uW' or '-10dBm'")
    p.add_argument("--offset-freq", default="120MHz")
    p.add_argument("--sig-min", type=float, default=-85.0, help="dBm")
    p.add_argument("--sig-max", type=float, default=-25.0, help="dBm")
    p.add_argument("--sig-step", type=float, default=1.0, help="dB")
    p.set_defaults(func=_cmd_linearity)

    p = sub.add_parser("qpsk", help="heterodyne QPSK BER sweep and sensitivity")
    _add_common(p)
    p.add_argument("--lo-dbm", help="LO power override, e.g. '13' or '20mW'")
    p.add_argument("--target-ber", type=float, default=1e-3)
    p.add_argument("--launch-dbm", type=float, default=-6.0)
    p.add_argument("--constellation-dbm", type=float, default=-50.0)
    p.add_argument("--no-noise", action="store_true",
                   help="disable receiver noise (loopback check)")
    p.set_defaults(func=_cmd_qpsk)

    p = sub.add_parser("skr", help="CV-QKD secure key rate vs distance")
    _add_common(p)
    p.add_argument("--zeta", default="0,0.01,0.02,0.04",
                   help="comma-separated channel noise values, SNU")
    p.add_argument("--d-min", type=float, default=0.1, help="km")
    p.add_argument("--d-max", type=float, default=35.0, help="km")
    p.add_argument("--d-step", type=float, default=0.5, help="km")
    p.add_argument("--reach-floor-bps", type=float, default=1e6,
                   help="also solve the reach at this rate (0 disables)")
    p.set_defaults(func=_cmd_skr)

    p = sub.add_parser("calibrate", help="fit the model knobs to the characterization targets")
    _add_common(p)
    p.add_argument("--anchors", help="key = value file overriding the target set")
    p.add_argument("--threshold-db", type=float, default=2.0)
    p.set_defaults(func=_cmd_calibrate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SearchFailureError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
