"""Command-line interface: simulate, estimate, sweep, coilmap, selftest.

Exit codes: 0 success, 1 validation/usage errors, 2 I/O errors.  All paths
and the sweep master seed can be overridden by flags; the only environment
variable honored is MPSDC_THREADS (default worker count for sweeps).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import coilfield, config, physics, relaxation, sigio, svgplot, sweep, tauest


def _load_config(path: str) -> config.RunConfig:
    return config.parse_config(Path(path).read_text())


def _require(value, section: str, command: str):
    if value is None:
        raise config.ValidationError(
            f"command {command!r} needs a [{section}] section in the configuration"
        )
    return value


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    drive = _require(cfg.drive, "drive", "simulate")
    dc = cfg.dc if cfg.dc is not None else physics.DcField(0.0)
    tau = cfg.relaxation_tau_s if cfg.relaxation_tau_s is not None else 0.0
    trace = physics.ideal_signal(cfg.particle, drive, dc, cfg.sampling)
    trace = relaxation.apply_relaxation(trace, relaxation.RelaxationKernel(tau))
    out = args.out or cfg.output.signal_csv or "signal.csv"
    sigio.write_signal_csv(trace, out)
    print(f"wrote {trace.samples.size} samples to {out}")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    trace = sigio.read_signal_csv(args.input)
    estimate = tauest.estimate_tau(trace)
    print(f"tau_hat_s = {format(estimate.tau_hat, '.17g')}")
    print(f"residual = {format(estimate.residual, '.6g')}")
    print(f"included_bins = {estimate.taus.size}")
    if args.spectrum_csv:
        table = sigio.ResultTable(
            columns=("frequency_Hz", "tau_s", "weight"),
            rows=tuple(
                (float(f), float(t), float(w))
                for f, t, w in zip(estimate.frequencies, estimate.taus, estimate.weights)
            ),
        )
        sigio.write_results_csv(table, args.spectrum_csv)
        print(f"wrote per-bin spectrum to {args.spectrum_csv}")
    return 0


def _resolve_threads(args: argparse.Namespace, cfg: config.RunConfig) -> int:
    if args.threads is not None:
        return args.threads
    if cfg.sweep_threads is not None:
        return cfg.sweep_threads
    env = os.environ.get("MPSDC_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise config.ValidationError(f"MPSDC_THREADS must be an integer, got {env!r}")
        if value < 1:
            raise config.ValidationError(f"MPSDC_THREADS must be >= 1, got {value}")
        return value
    return 1


def _sweep_plots(plan: sweep.SweepPlan, rows: list[sweep.SummaryRow], plots_dir: Path) -> int:
    """One tau-vs-DC and one RMS-vs-DC plot per drive setting."""
    if len(plan.dc_fields_mt) < 2:
        return 0
    plots_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    by_setting: dict[tuple[float, float], list[sweep.SummaryRow]] = {}
    for row in rows:
        by_setting.setdefault((row.frequency_hz, row.amplitude_mt), []).append(row)
    for (freq, amp), group in by_setting.items():
        dc_rows = [r for r in group if r.dc_label != sweep.NO_COIL_LABEL]
        ref = [r for r in group if r.dc_label == sweep.NO_COIL_LABEL]
        xs = tuple(float(r.dc_label) for r in dc_rows)
        tag = f"f{format(freq, 'g')}Hz_A{format(amp, 'g')}mT"
        for metric, fname, ylabel in (
            ("tau_hat_mean", f"tau_vs_dc_{tag}.svg", "tau_hat (s)"),
            ("rms_mean", f"rms_vs_dc_{tag}.svg", "RMS (arb.)"),
        ):
            series = [
                svgplot.Series(
                    x=xs,
                    y=tuple(getattr(r, metric) for r in dc_rows),
                    label="DC sweep",
                )
            ]
            if ref:
                level = getattr(ref[0], metric)
                series.append(
                    svgplot.Series(
                        x=(xs[0], xs[-1]), y=(level, level), label="no coil"
                    )
                )
            svgplot.plot_svg(
                series,
                svgplot.PlotStyle(
                    title=f"{format(freq, 'g')} Hz, {format(amp, 'g')} mT",
                    x_label="DC field (mT)",
                    y_label=ylabel,
                ),
                plots_dir / fname,
            )
            count += 1
    return count


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    plan = _require(cfg.sweep_plan, "sweep", "sweep")
    if args.master_seed is not None:
        plan = dataclasses.replace(plan, master_seed=args.master_seed)
    threads = _resolve_threads(args, cfg)
    records = sweep.run_sweep(plan, threads=threads)
    rows = sweep.summarize(records)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / (cfg.output.results_csv or "results.csv")
    summary_path = out_dir / (cfg.output.summary_csv or "summary.csv")
    sigio.write_results_csv(sigio.ResultTable.from_records(records), results_path)
    sigio.write_results_csv(sigio.ResultTable.from_summary(rows), summary_path)
    n_plots = _sweep_plots(plan, rows, out_dir / (cfg.output.plots_dir or "plots"))
    print(f"wrote {len(records)} records to {results_path}")
    print(f"wrote {len(rows)} summary rows to {summary_path}")
    print(f"wrote {n_plots} plots")
    return 0


def cmd_coilmap(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    coil = _require(cfg.coil, "coil", "coilmap")
    field_map = coilfield.helmholtz_map(coil.geometry, coil.grid)
    region = coilfield.homogeneity_region(field_map, coil.homogeneity_level)
    sensitivity = coilfield.center_sensitivity(coil.geometry)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / (cfg.output.fieldmap_csv or "fieldmap.csv")
    svg_path = out_dir / (cfg.output.fieldmap_svg or "fieldmap.svg")
    sigio.write_fieldmap_csv(field_map.xs, field_map.zs, field_map.bx, csv_path)
    svgplot.field_heatmap_svg(field_map, svg_path, title="Bias coil Bx map")

    print(f"center_sensitivity_mT_per_A = {format(sensitivity * 1e3, '.6g')}")
    print(
        f"homogeneity_region_{format(coil.homogeneity_level, 'g')} = "
        f"{format(region.axial_extent * 1e3, '.6g')} mm axial x "
        f"{format(region.radial_extent * 1e3, '.6g')} mm radial"
    )
    if coil.chamber is not None:
        fits = coilfield.chamber_fit(
            region, coil.chamber.diameter, coil.chamber.length, coil.chamber.axis
        )
        print(f"chamber_fits = {str(fits).lower()}")
    print(f"wrote field map to {csv_path} and {svg_path}")
    return 0


def _selftest_checks() -> list[tuple[str, object]]:
    def langevin_shape() -> None:
        xs = np.logspace(-8, 4, 400)
        values = np.asarray(physics.langevin(xs))
        assert np.all(np.abs(values) < 1.0)
        assert np.all(np.diff(values) > 0)
        assert np.allclose(np.asarray(physics.langevin(-xs)), -values, rtol=0, atol=0)

    def dlangevin_derivative() -> None:
        xs = np.linspace(0.0, 50.0, 101)
        h = 1e-6
        fd = (np.asarray(physics.langevin(xs + h)) - np.asarray(physics.langevin(xs - h))) / (2 * h)
        assert np.max(np.abs(np.asarray(physics.dlangevin(xs)) - fd)) < 1e-8

    def ideal_symmetry() -> None:
        trace = physics.ideal_signal(
            physics.ParticleModel(),
            physics.DriveField(1000.0, 0.01),
            physics.DcField(0.0),
            physics.SamplingConfig(4096, 2),
        )
        s = trace.samples
        assert np.array_equal(s[:4096], s[4096:])
        half = 2048
        peak = np.max(np.abs(s))
        assert np.max(np.abs(s[half:4096] + s[:half])) < 1e-12 * peak

    def relaxation_transfer() -> None:
        spp = 4096
        dt = 1.0 / (1000.0 * spp)
        tone = np.sin(2 * np.pi * np.arange(spp) / spp)
        trace = physics.SignalTrace(dt=dt, samples=tone, samples_per_period=spp)
        out = relaxation.apply_relaxation(trace, relaxation.RelaxationKernel(50e-6))
        wt = 2 * math.pi * 1000.0 * 50e-6
        expected = 1.0 / math.sqrt(1.0 + wt * wt)
        measured = np.max(np.abs(out.samples))
        assert abs(measured - expected) < 1e-6

    def realizations_agree() -> None:
        trace = physics.ideal_signal(
            physics.ParticleModel(),
            physics.DriveField(1000.0, 0.01),
            physics.DcField(0.0),
            physics.SamplingConfig(4096, 1),
        )
        kernel = relaxation.RelaxationKernel(2e-6)
        a = relaxation.apply_relaxation(trace, kernel).samples
        b = relaxation.apply_relaxation_recursive(trace, kernel, 20).samples
        assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-6

    def mirror_identity() -> None:
        for dc_mt in (0.0, 9.0):
            trace = physics.ideal_signal(
                physics.ParticleModel(),
                physics.DriveField(1000.0, 0.01),
                physics.DcField(dc_mt * 1e-3),
                physics.SamplingConfig(4096, 1),
            )
            pair = tauest.mean_pair(tauest.extract_half_cycles(trace))
            s_pos, s_neg = tauest.half_cycle_spectra(pair)
            dev = np.max(np.abs(s_neg + np.conj(s_pos))) / np.max(np.abs(s_pos))
            assert dev < 1e-9

    def tau_round_trip() -> None:
        trace = physics.ideal_signal(
            physics.ParticleModel(),
            physics.DriveField(3000.0, 0.0125),
            physics.DcField(4e-3),
            physics.SamplingConfig(4096, 1),
        )
        relaxed = relaxation.apply_relaxation(trace, relaxation.RelaxationKernel(1.5e-6))
        estimate = tauest.estimate_tau(relaxed)
        assert abs(estimate.tau_hat - 1.5e-6) / 1.5e-6 < 0.02

    def elliptic_values() -> None:
        k_half, e_half = coilfield.elliptic_ke(0.5)
        assert abs(k_half - 1.8540746773013719) < 1e-12
        assert abs(e_half - 1.3506438810476755) < 1e-12
        k0, e0 = coilfield.elliptic_ke(0.0)
        assert abs(k0 - math.pi / 2) < 1e-15 and abs(e0 - math.pi / 2) < 1e-15

    def coil_center_field() -> None:
        geometry = coilfield.CoilGeometry(0.1, 0.1, 100, 1.0)
        expected = (4.0 / 5.0) ** 1.5 * coilfield.MU0 * 100 / 0.1
        assert abs(coilfield.center_sensitivity(geometry) - expected) < 1e-3 * expected

    def sweep_determinism() -> None:
        plan = sweep.default_plan(repetitions=1)
        plan = dataclasses.replace(
            plan, frequencies_hz=(1000.0,), amplitudes_mt=(10.0,), dc_fields_mt=(0.0, 3.0)
        )
        first = sweep.run_sweep(plan, threads=1)
        second = sweep.run_sweep(plan, threads=2)
        assert first == second

    return [
        ("langevin odd, bounded, increasing", langevin_shape),
        ("dlangevin matches finite differences", dlangevin_derivative),
        ("ideal signal periodic and antisymmetric", ideal_symmetry),
        ("relaxation transfer function", relaxation_transfer),
        ("relaxation realizations agree", realizations_agree),
        ("half-cycle mirror identity", mirror_identity),
        ("tau round trip", tau_round_trip),
        ("elliptic integrals", elliptic_values),
        ("coil center field", coil_center_field),
        ("sweep determinism across threads", sweep_determinism),
    ]


def cmd_selftest(_args: argparse.Namespace) -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:  # report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpsdc",
        description=(
            "Magnetic-nanoparticle signal simulation under a DC bias field: "
            "synthesis, relaxation, time-constant estimation, coil maps, sweeps."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("simulate", help="synthesize a signal trace to CSV")
    p.add_argument("--config", required=True, help="TOML configuration path")
    p.add_argument("--out", help="output signal CSV path (default from config or signal.csv)")
    p.set_defaults(handler=cmd_simulate)

    p = commands.add_parser("estimate", help="estimate tau from a signal CSV")
    p.add_argument("--input", required=True, help="signal CSV produced by simulate")
    p.add_argument("--spectrum-csv", help="optional per-bin tau spectrum CSV output")
    p.set_defaults(handler=cmd_estimate)

    p = commands.add_parser("sweep", help="run the experiment grid")
    p.add_argument("--config", required=True, help="TOML configuration path")
    p.add_argument("--out-dir", default="out", help="output directory (default: out)")
    p.add_argument("--master-seed", type=int, help="override the plan master seed")
    p.add_argument("--threads", type=int, help="worker threads (default 1)")
    p.set_defaults(handler=cmd_sweep)

    p = commands.add_parser("coilmap", help="compute the bias-coil field map")
    p.add_argument("--config", required=True, help="TOML configuration path")
    p.add_argument("--out-dir", default="out", help="output directory (default: out)")
    p.set_defaults(handler=cmd_coilmap)

    p = commands.add_parser("selftest", help="run the built-in invariant checks")
    p.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the validation exit code.
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except (config.ParseError, config.ValidationError, sigio.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (tauest.AllBinsExcluded, sweep.NoPeak, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
