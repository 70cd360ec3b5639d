"""Measurement half of the post-processing pipeline: velocity decoding,
vessel segmentation, static-tube calibration and flow-curve extraction."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acquisition import Frame, ImageSeries

# Pixels are admitted while their time-averaged magnitude is at least this
# fraction of the seed pixel's value.
SEGMENT_THRESHOLD_FRACTION = 0.5


class EmptyRegionError(ValueError):
    """Raised when segmentation cannot grow a region from the given seed."""


@dataclass(frozen=True)
class Mask:
    """Binary, 4-connected region of pixels."""

    pixels: np.ndarray
    pixel_size: float
    label: str = "vessel"

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.pixels))

    @property
    def area(self) -> float:
        """Region area in mm^2 (pixel count times pixel area)."""
        return self.count * self.pixel_size**2


@dataclass(frozen=True)
class FlowCurve:
    """Time-indexed volumetric flow samples (mm^3/s)."""

    times: np.ndarray
    flows: np.ndarray
    source_mode: str

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "flows", np.asarray(self.flows, dtype=float))
        if self.times.shape != self.flows.shape:
            raise ValueError("times and flows must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.flows))):
            raise ValueError("curve values must be finite")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def mean_flow(self) -> float:
        return float(np.mean(self.flows))


def decode_velocity(frame: Frame | np.ndarray, venc: float) -> np.ndarray:
    """v = venc * phase / pi, mapping [-pi, pi) phases onto [-venc, venc)."""
    if venc <= 0:
        raise ValueError("venc must be positive")
    phase = frame.phase if isinstance(frame, Frame) else np.asarray(frame, dtype=float)
    return venc * phase / np.pi


def _seed_index(seed_point, pixel_size, shape) -> tuple[int, int]:
    iy = int(seed_point[1] / pixel_size)
    ix = int(seed_point[0] / pixel_size)
    ny, nx = shape
    if not (0 <= iy < ny and 0 <= ix < nx):
        raise ValueError(f"seed point {seed_point} outside FOV")
    return iy, ix


def segment_vessel(series: ImageSeries, seed_point, label: str = "vessel") -> Mask:
    """Region-grow a 4-connected mask on the time-averaged magnitude image.

    A pixel is admitted when its mean magnitude is >= 50% of the seed
    pixel's. The seed itself must look like signal (at least 50% of the
    image's peak mean magnitude), otherwise the seed is considered bad and
    an EmptyRegionError is raised.
    """
    mean_mag = series.mean_magnitude()
    iy, ix = _seed_index(seed_point, series.params.pixel_size, mean_mag.shape)
    seed_value = mean_mag[iy, ix]
    if seed_value < SEGMENT_THRESHOLD_FRACTION * mean_mag.max():
        raise EmptyRegionError(
            f"seed pixel magnitude {seed_value:.3g} fails its threshold "
            f"(image max {mean_mag.max():.3g}); bad seed or all-noise image")
    threshold = SEGMENT_THRESHOLD_FRACTION * seed_value
    ny, nx = mean_mag.shape
    admitted = mean_mag >= threshold
    pixels = np.zeros_like(admitted)
    frontier = deque([(iy, ix)])
    pixels[iy, ix] = True
    while frontier:
        y, x = frontier.popleft()
        for dy, dx in ((-1, 0), (0, -1), (0, 1), (1, 0)):  # row-major order
            ny_, nx_ = y + dy, x + dx
            if 0 <= ny_ < ny and 0 <= nx_ < nx and admitted[ny_, nx_] and not pixels[ny_, nx_]:
                pixels[ny_, nx_] = True
                frontier.append((ny_, nx_))
    return Mask(pixels=pixels, pixel_size=series.params.pixel_size, label=label)


def calibrate_background(vmaps: np.ndarray, static_mask: Mask) -> np.ndarray:
    """Subtract each frame's mean static-tube velocity from the whole frame.

    Per-frame correction removes slow drift as well as a constant offset;
    the static-region mean is exactly zero afterwards.
    """
    if static_mask.count == 0:
        raise EmptyRegionError("static mask is empty")
    vmaps = np.asarray(vmaps, dtype=float)
    offsets = vmaps[:, static_mask.pixels].mean(axis=1)
    return vmaps - offsets[:, None, None]


def flow_curve(series: ImageSeries, vessel_mask: Mask, static_mask: Mask) -> FlowCurve:
    """Decode, calibrate and integrate each frame into a flow sample."""
    venc = series.params.venc
    px2 = series.params.pixel_size**2
    vmaps = np.stack([decode_velocity(f, venc) for f in series.frames])
    vmaps = calibrate_background(vmaps, static_mask)
    flows = vmaps[:, vessel_mask.pixels].sum(axis=1) * px2
    return FlowCurve(times=series.timestamps, flows=flows, source_mode=series.params.mode)


def write_flow_curve_csv(curve: FlowCurve, path) -> Path:
    """CSV export: header ``time_s,flow_mm3_s``, 9 significant digits."""
    path = Path(path)
    lines = ["time_s,flow_mm3_s"]
    for t, q in zip(curve.times, curve.flows):
        lines.append(f"{t:.9g},{q:.9g}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_flow_curve_csv(path, source_mode: str = "EPI") -> FlowCurve:
    rows = Path(path).read_text().strip().splitlines()[1:]
    data = np.array([[float(v) for v in row.split(",")] for row in rows])
    return FlowCurve(times=data[:, 0], flows=data[:, 1], source_mode=source_mode)
