"""Simulator and analysis toolkit for validating real-time EPI phase-contrast
flow quantification against gated CINE on a pulsatile flow phantom."""

from .phantom import (FlowWaveform, PhantomScene, TubeGeometry, default_scene,
                      flow_at, velocity_at)
from .acquisition import (AcquisitionParams, Frame, ImageSeries, acquire_cine,
                          acquire_epi, cine_defaults, encode_frame,
                          epi_defaults, rasterize_velocity)
from .quantify import (FlowCurve, Mask, calibrate_background, decode_velocity,
                       flow_curve, segment_vessel)
from .cycle import (ReconstructedCycle, align_to_peak, detect_cycle_minima,
                    reconstruct_average_cycle)
from .stats import (BlandAltmanResult, RunSummary, agreement_verdict,
                    bland_altman, coefficient_of_variation, confidence_check)
from .config import ExperimentConfig, SweepSpec, load_config
from .harness import (SweepRecord, ValidationReport, render_outputs,
                      run_pixel_sweep, run_validation)

__version__ = "0.1.0"
