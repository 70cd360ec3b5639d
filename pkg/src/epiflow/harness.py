"""Experiment orchestration: the 10-repeat default-parameter validation, the
pixel-size sweep, the acceptance gates and CSV/SVG output."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plots
from .acquisition import (MODE_CINE, MODE_EPI, acquire_cine, acquire_epi,
                          cine_defaults, epi_defaults)
from .config import ExperimentConfig
from .cycle import (ReconstructedCycle, align_to_peak, detect_cycle_minima,
                    reconstruct_average_cycle, write_cycle_csv)
from .phantom import PhantomScene, default_scene
from .quantify import (EmptyRegionError, FlowCurve, flow_curve, segment_vessel,
                       write_flow_curve_csv)
from .stats import (BlandAltmanResult, RunSummary, agreement_verdict,
                    bland_altman, coefficient_of_variation, confidence_check,
                    write_bland_altman_csv, write_run_summaries_csv)

GOLD_FLOW_MM3_S = 1150.0
GOLD_AREA_MM2 = 70.8
CI_TOLERANCE_PERCENT = 10.0

# Sweep sizes whose repeat-mean EPI flow must sit inside the CI, and the size
# where partial volume must push it outside.
GATE_PASS_SIZES = (1.2, 1.6, 2.0, 2.4)
GATE_FAIL_SIZE = 4.4


class PipelineError(RuntimeError):
    """A pipeline stage failed; carries repeat/mode context."""


@dataclass(frozen=True)
class PipelineResult:
    """Output of the full post-processing chain for one acquisition."""

    mode: str
    curve: FlowCurve
    area: float
    recon: ReconstructedCycle | None = None

    @property
    def mean_flow(self) -> float:
        """Cycle-averaged flow: reconstruction mean for EPI, curve mean for CINE."""
        return self.recon.mean_flow if self.recon is not None else self.curve.mean_flow


@dataclass(frozen=True)
class SweepRecord:
    pixel_size: float
    mode: str
    repeat_index: int
    area: float | None
    mean_flow: float | None
    ok: bool = True
    error: str = ""


@dataclass
class ValidationReport:
    summaries: list[RunSummary]
    cine_mean_curve: FlowCurve
    epi_mean_cycle: ReconstructedCycle
    bland_altman: BlandAltmanResult
    agreement: bool
    cine_curves: list[FlowCurve] = field(default_factory=list)
    epi_curves: list[FlowCurve] = field(default_factory=list)
    epi_cycles: list[ReconstructedCycle] = field(default_factory=list)


def _acquisition_params(config: ExperimentConfig, mode: str, seed: int,
                        pixel_size: float | None = None):
    factory = cine_defaults if mode == MODE_CINE else epi_defaults
    return factory(
        venc=config.venc,
        pixel_size=config.pixel_size if pixel_size is None else pixel_size,
        noise_sigma_ref=0.0 if config.noiseless else config.noise_sigma_ref,
        background_coeffs=config.background_coeffs,
        rng_seed=seed,
    )


def run_pipeline(scene: PhantomScene, params, supersampling: int = 16) -> PipelineResult:
    """Acquire one series and run decode/segment/calibrate/flow/reconstruct."""
    if params.mode == MODE_EPI:
        series = acquire_epi(scene, params, supersampling)
    else:
        series = acquire_cine(scene, params, supersampling)
    vessel = segment_vessel(series, scene.tubes[0].center)
    static = segment_vessel(series, scene.static_tube.center, label="static")
    curve = flow_curve(series, vessel, static)
    recon = None
    if params.mode == MODE_EPI:
        minima = detect_cycle_minima(curve, scene.waveform.period)
        recon = reconstruct_average_cycle(curve, minima)
    return PipelineResult(mode=params.mode, curve=curve, area=vessel.area, recon=recon)


def _summary(mode: str, mean_flows, areas) -> RunSummary:
    mean_flow = float(np.mean(mean_flows))
    area = float(np.mean(areas))
    if len(mean_flows) >= 2:
        sd = float(np.std(mean_flows, ddof=1))
        cv = coefficient_of_variation(mean_flows)
        note = ""
    else:
        sd = cv = None
        note = "insufficient repeats"
    in_flow, _ = confidence_check(mean_flow, GOLD_FLOW_MM3_S, CI_TOLERANCE_PERCENT)
    in_area, _ = confidence_check(area, GOLD_AREA_MM2, CI_TOLERANCE_PERCENT)
    return RunSummary(mode=mode, n_repeats=len(mean_flows), mean_flow=mean_flow,
                      sd_flow=sd, cv_percent=cv, area=area,
                      in_flow_ci=in_flow, in_area_ci=in_area, note=note)


def run_validation(config: ExperimentConfig) -> ValidationReport:
    """Image tube-1 n_repeats times with both sequences and compare them.

    Repeat r uses seed base_seed + r. The EPI reconstruction of each repeat
    is aligned at the peak to that repeat's CINE curve; Bland-Altman compares
    the across-repeat mean curves.
    """
    scene = default_scene(config.waveform())
    cine_curves, epi_curves, epi_cycles = [], [], []
    cine_flows, epi_flows, cine_areas, epi_areas = [], [], [], []
    for r in range(config.n_repeats):
        seed = config.base_seed + r
        try:
            cine = run_pipeline(scene, _acquisition_params(config, MODE_CINE, seed),
                                config.supersampling)
            epi = run_pipeline(scene, _acquisition_params(config, MODE_EPI, seed),
                               config.supersampling)
        except (EmptyRegionError, ValueError) as exc:
            raise PipelineError(f"repeat {r}: {exc}") from exc
        aligned = align_to_peak(epi.recon, cine.curve)
        cine_curves.append(cine.curve)
        epi_curves.append(epi.curve)
        epi_cycles.append(aligned)
        cine_flows.append(cine.mean_flow)
        epi_flows.append(aligned.mean_flow)
        cine_areas.append(cine.area)
        epi_areas.append(epi.area)
    cine_mean = FlowCurve(times=cine_curves[0].times,
                          flows=np.mean([c.flows for c in cine_curves], axis=0),
                          source_mode=MODE_CINE)
    epi_mean = ReconstructedCycle(
        flows=np.mean([c.flows for c in epi_cycles], axis=0),
        sds=np.mean([c.sds for c in epi_cycles], axis=0),
        n_cycles=min(c.n_cycles for c in epi_cycles),
        period_estimate=float(np.mean([c.period_estimate for c in epi_cycles])),
    )
    ba = bland_altman(epi_mean.flows, cine_mean.flows)
    return ValidationReport(
        summaries=[_summary(MODE_CINE, cine_flows, cine_areas),
                   _summary(MODE_EPI, epi_flows, epi_areas)],
        cine_mean_curve=cine_mean,
        epi_mean_cycle=epi_mean,
        bland_altman=ba,
        agreement=agreement_verdict(ba),
        cine_curves=cine_curves,
        epi_curves=epi_curves,
        epi_cycles=epi_cycles,
    )


def sweep_cell_seed(base_seed: int, size_index: int, mode: str, repeat: int) -> int:
    """Independently reproducible per-cell seed: xor-mix of the cell indices."""
    mode_bit = 0 if mode == MODE_EPI else 1
    return base_seed ^ (size_index << 12) ^ (mode_bit << 8) ^ repeat


def run_pixel_sweep(config: ExperimentConfig) -> list[SweepRecord]:
    """Full pipeline at every (pixel size, mode, repeat) cell.

    Per-cell failures (e.g. segmentation collapse at extreme pixel sizes) are
    recorded as failed records and never abort the other cells. Records come
    back sorted by (pixel_size, mode, repeat).
    """
    scene = default_scene(config.waveform())
    records = []
    for si, px in enumerate(config.sweep.sizes()):
        for mode in (MODE_CINE, MODE_EPI):
            for rep in range(config.sweep.repeats_per_size):
                seed = sweep_cell_seed(config.base_seed, si, mode, rep)
                params = _acquisition_params(config, mode, seed, pixel_size=px)
                try:
                    result = run_pipeline(scene, params, config.supersampling)
                    records.append(SweepRecord(px, mode, rep, result.area, result.mean_flow))
                except (EmptyRegionError, ValueError) as exc:
                    records.append(SweepRecord(px, mode, rep, None, None,
                                               ok=False, error=str(exc)))
    records.sort(key=lambda rec: (rec.pixel_size, rec.mode, rec.repeat_index))
    return records


def validation_gate(report: ValidationReport) -> bool:
    """Both modes inside the flow and area CIs, and curve shapes agree."""
    return all(s.in_flow_ci and s.in_area_ci for s in report.summaries) and report.agreement


def sweep_gate(records: list[SweepRecord]) -> bool:
    """EPI repeat-mean flow inside the CI across the pass band, outside at 4.4 mm."""
    def repeat_mean(px):
        flows = [r.mean_flow for r in records
                 if r.mode == MODE_EPI and r.ok and abs(r.pixel_size - px) < 1e-9]
        return float(np.mean(flows)) if flows else None
    for px in GATE_PASS_SIZES:
        mean = repeat_mean(px)
        if mean is None or not confidence_check(mean, GOLD_FLOW_MM3_S, CI_TOLERANCE_PERCENT)[0]:
            return False
    mean = repeat_mean(GATE_FAIL_SIZE)
    return mean is not None and not confidence_check(mean, GOLD_FLOW_MM3_S,
                                                     CI_TOLERANCE_PERCENT)[0]


def write_sweep_csv(records: list[SweepRecord], path) -> Path:
    path = Path(path)
    lines = ["pixel_size_mm,mode,repeat_index,area_mm2,mean_flow_mm3_s,ok,error"]
    for r in records:
        area = "" if r.area is None else f"{r.area:.9g}"
        flow = "" if r.mean_flow is None else f"{r.mean_flow:.9g}"
        lines.append(f"{r.pixel_size:.9g},{r.mode},{r.repeat_index},{area},{flow},{r.ok},{r.error}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_sweep_csv(path) -> list[SweepRecord]:
    records = []
    for row in Path(path).read_text().strip().splitlines()[1:]:
        px, mode, rep, area, flow, ok, error = row.split(",", 6)
        records.append(SweepRecord(float(px), mode, int(rep),
                                   float(area) if area else None,
                                   float(flow) if flow else None,
                                   ok == "True", error))
    return records


def render_outputs(outdir, validation: ValidationReport | None = None,
                   sweep: list[SweepRecord] | None = None) -> list[Path]:
    """Write every CSV and SVG for the given reports; idempotent."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if validation is not None:
        written.append(write_run_summaries_csv(validation.summaries,
                                               outdir / "validation_summary.csv"))
        written.append(write_flow_curve_csv(validation.cine_mean_curve,
                                            outdir / "cine_mean_curve.csv"))
        written.append(write_cycle_csv(validation.epi_mean_cycle,
                                       outdir / "epi_mean_cycle.csv"))
        written.append(write_bland_altman_csv(validation.bland_altman,
                                              outdir / "bland_altman.csv"))
        curve_dir = outdir / "curves"
        curve_dir.mkdir(exist_ok=True)
        for r, (cine, epi, cyc) in enumerate(zip(validation.cine_curves,
                                                 validation.epi_curves,
                                                 validation.epi_cycles)):
            written.append(write_flow_curve_csv(cine, curve_dir / f"cine_r{r:02d}.csv"))
            written.append(write_flow_curve_csv(epi, curve_dir / f"epi_r{r:02d}.csv"))
            written.append(write_cycle_csv(cyc, curve_dir / f"epi_r{r:02d}_cycle.csv"))
        written.append(plots.plot_cycle_comparison(
            validation.cine_mean_curve, validation.epi_mean_cycle,
            outdir / "fig4_curves.svg"))
        written.append(plots.plot_bland_altman(
            validation.bland_altman, outdir / "fig4_bland_altman.svg"))
    if sweep is not None:
        written.append(write_sweep_csv(sweep, outdir / "sweep.csv"))
        written.append(plots.plot_sweep(
            sweep, GOLD_FLOW_MM3_S, GOLD_AREA_MM2, CI_TOLERANCE_PERCENT,
            outdir / "fig5_sweep.svg"))
    return written
