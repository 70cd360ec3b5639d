"""Command-line interface.

Subcommands: simulate (emit an image-series directory), analyze (series
directory -> curve/cycle CSVs), validate (10-repeat comparison experiment),
sweep (pixel-size experiment), render (SVGs from previously written CSVs).

Exit codes: 0 success, 1 hard error, 2 acceptance-gate failure with --gate.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, plots
from .acquisition import MODE_CINE, MODE_EPI, acquire_cine, acquire_epi
from .config import ConfigError, ExperimentConfig, apply_cli_overrides, load_config
from .cycle import (align_to_peak, detect_cycle_minima,
                    read_cycle_csv, reconstruct_average_cycle, write_cycle_csv)
from .phantom import default_scene
from .quantify import (EmptyRegionError, flow_curve, read_flow_curve_csv,
                       segment_vessel, write_flow_curve_csv)
from .seriesio import load_series, save_series
from .stats import read_bland_altman_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GATE_FAILED = 2


def _common_flags(sub):
    sub.add_argument("--config", type=Path, help="experiment config file")
    sub.add_argument("--seed", type=int, help="override base seed")
    sub.add_argument("--out", type=Path, help="output directory")
    sub.add_argument("--noiseless", action="store_true", help="disable acquisition noise")


def _load_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    return apply_cli_overrides(config, seed=args.seed,
                               out=str(args.out) if args.out else None,
                               noiseless=args.noiseless)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epiflow",
                                     description="Phase-contrast flow phantom simulator and analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="acquire one image series and write it to disk")
    _common_flags(p)
    p.add_argument("--mode", choices=["cine", "epi"], default="epi")

    p = sub.add_parser("analyze", help="extract flow curve (and EPI cycle) from a series directory")
    p.add_argument("series_dir", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("validate", help="10-repeat default-parameter validation experiment")
    _common_flags(p)
    p.add_argument("--gate", action="store_true", help="exit 2 unless the CI/agreement gates pass")

    p = sub.add_parser("sweep", help="pixel-size sweep experiment")
    _common_flags(p)
    p.add_argument("--gate", action="store_true", help="exit 2 unless the pass-band gate holds")

    p = sub.add_parser("render", help="regenerate SVG figures from CSVs in a directory")
    p.add_argument("--out", type=Path, required=True,
                   help="directory holding validate/sweep CSV outputs")
    return parser


def cmd_simulate(args) -> int:
    config = _load_config(args)
    outdir = Path(config.output_dir)
    scene = default_scene(config.waveform())
    params = harness._acquisition_params(
        config, MODE_CINE if args.mode == "cine" else MODE_EPI, config.base_seed)
    acquire = acquire_cine if args.mode == "cine" else acquire_epi
    series = acquire(scene, params, config.supersampling)
    save_series(series, outdir, scene=scene)
    print(f"wrote {len(series.frames)}-frame {params.mode} series to {outdir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    series, scene = load_series(args.series_dir)
    if scene is None:
        print("series header carries no scene block; cannot locate seed points",
              file=sys.stderr)
        return EXIT_ERROR
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    vessel = segment_vessel(series, scene.tubes[0].center)
    static = segment_vessel(series, scene.static_tube.center, label="static")
    curve = flow_curve(series, vessel, static)
    write_flow_curve_csv(curve, outdir / "flow_curve.csv")
    print(f"flow curve: {len(curve)} samples, mean {curve.mean_flow:.1f} mm^3/s, "
          f"area {vessel.area:.1f} mm^2")
    if series.params.mode == MODE_EPI:
        minima = detect_cycle_minima(curve, scene.waveform.period)
        recon = reconstruct_average_cycle(curve, minima)
        write_cycle_csv(recon, outdir / "cycle.csv")
        print(f"reconstructed cycle from {recon.n_cycles} segments, "
              f"mean {recon.mean_flow:.1f} mm^3/s")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load_config(args)
    report = harness.run_validation(config)
    harness.render_outputs(config.output_dir, validation=report)
    for s in report.summaries:
        print(f"{s.mode}: mean flow {s.mean_flow:.1f} mm^3/s "
              f"(in CI: {s.in_flow_ci}), area {s.area:.1f} mm^2 (in CI: {s.in_area_ci})"
              + (f", CV {s.cv_percent:.2f}%" if s.cv_percent is not None else f" [{s.note}]"))
    print(f"Bland-Altman mean diff {report.bland_altman.mean_diff:.1f} mm^3/s, "
          f"agreement: {report.agreement}")
    if args.gate and not harness.validation_gate(report):
        print("validation gate FAILED", file=sys.stderr)
        return EXIT_GATE_FAILED
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    records = harness.run_pixel_sweep(config)
    harness.render_outputs(config.output_dir, sweep=records)
    failed = [r for r in records if not r.ok]
    print(f"{len(records)} sweep records ({len(failed)} failed cells) "
          f"written to {config.output_dir}")
    if args.gate and not harness.sweep_gate(records):
        print("sweep gate FAILED", file=sys.stderr)
        return EXIT_GATE_FAILED
    return EXIT_OK


def cmd_render(args) -> int:
    outdir = Path(args.out)
    rendered = []
    curve_csv = outdir / "cine_mean_curve.csv"
    if curve_csv.exists():
        cine = read_flow_curve_csv(curve_csv, source_mode=MODE_CINE)
        epi = read_cycle_csv(outdir / "epi_mean_cycle.csv")
        rendered.append(plots.plot_cycle_comparison(cine, epi, outdir / "fig4_curves.svg"))
        ba = read_bland_altman_csv(outdir / "bland_altman.csv")
        rendered.append(plots.plot_bland_altman(ba, outdir / "fig4_bland_altman.svg"))
    sweep_csv = outdir / "sweep.csv"
    if sweep_csv.exists():
        records = harness.read_sweep_csv(sweep_csv)
        rendered.append(plots.plot_sweep(records, harness.GOLD_FLOW_MM3_S,
                                         harness.GOLD_AREA_MM2,
                                         harness.CI_TOLERANCE_PERCENT,
                                         outdir / "fig5_sweep.svg"))
    if not rendered:
        print(f"no renderable CSVs found in {outdir}", file=sys.stderr)
        return EXIT_ERROR
    print("rendered " + ", ".join(p.name for p in rendered))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "analyze": cmd_analyze,
        "validate": cmd_validate,
        "sweep": cmd_sweep,
        "render": cmd_render,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, EmptyRegionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
