"""Synthetic CINE-gated and real-time EPI phase-contrast acquisitions.

Turns the continuous phantom scene into discrete magnitude/phase frame
stacks: supersampled (partial-volume aware) velocity rasterization,
velocity-to-phase encoding with wrapping, complex-channel Gaussian noise and
a linear background phase offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .phantom import PhantomScene, TubeGeometry, flow_at, velocity_field

MODE_CINE = "CINE"
MODE_EPI = "EPI"

# Pixel size at which noise_sigma_ref is specified; noise scales with the
# inverse pixel area relative to this (SNR proportional to voxel volume).
REFERENCE_PIXEL_MM = 1.2

# Complex-signal amplitude inside any tube (fluid or static water) vs outside.
AMPLITUDE_FLUID = 1.0
AMPLITUDE_BACKGROUND = 0.05

DEFAULT_SUPERSAMPLING = 16

# Inert scanner metadata, carried along but never interpreted.
_METADATA = {
    MODE_CINE: {"tr_ms": 11.0, "te_ms": 7.7, "flip_deg": 30, "epi_factor": None, "sense": 1.5, "thickness_mm": 4.0},
    MODE_EPI: {"tr_ms": 15.2, "te_ms": 9.1, "flip_deg": 30, "epi_factor": 9, "sense": 2.5, "thickness_mm": 4.0},
}


@dataclass(frozen=True)
class AcquisitionParams:
    """Acquisition settings shared by both sequences.

    CINE ignores frame_interval/n_frames; EPI ignores phases_per_cycle.
    """

    mode: str
    venc: float = 50.0
    pixel_size: float = 1.2
    fov: tuple[float, float] = (100.0, 60.0)
    frame_interval: float = 0.062
    n_frames: int = 150
    phases_per_cycle: int = 32
    acq_duration: float = 9.3
    noise_sigma_ref: float = 0.12
    background_coeffs: tuple[float, float, float] = (0.05, 0.0005, 0.0005)
    rng_seed: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (MODE_CINE, MODE_EPI):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.venc <= 0:
            raise ValueError("venc must be positive")
        if self.pixel_size <= 0:
            raise ValueError("pixel_size must be positive")
        if not self.metadata:
            object.__setattr__(self, "metadata", dict(_METADATA[self.mode]))

    @property
    def grid_shape(self) -> tuple[int, int]:
        """(ny, nx) = ceil(fov / pixel_size) per axis."""
        return (math.ceil(self.fov[1] / self.pixel_size),
                math.ceil(self.fov[0] / self.pixel_size))

    @property
    def effective_sigma(self) -> float:
        """Complex-channel noise SD at this pixel size."""
        return self.noise_sigma_ref * (REFERENCE_PIXEL_MM / self.pixel_size) ** 2


def cine_defaults(**overrides) -> AcquisitionParams:
    return AcquisitionParams(mode=MODE_CINE, acq_duration=23.6, **overrides)


def epi_defaults(**overrides) -> AcquisitionParams:
    return AcquisitionParams(mode=MODE_EPI, acq_duration=9.3, **overrides)


@dataclass(frozen=True)
class Frame:
    """One magnitude + phase image pair at a frame-center timestamp."""

    magnitude: np.ndarray
    phase: np.ndarray
    timestamp: float

    def __post_init__(self):
        if self.magnitude.shape != self.phase.shape:
            raise ValueError("magnitude and phase grids must share dimensions")


@dataclass(frozen=True)
class ImageSeries:
    """Ordered frame stack plus the parameters and scene that generated it."""

    frames: tuple[Frame, ...]
    params: AcquisitionParams
    scene_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        ts = [f.timestamp for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("frame timestamps must be strictly increasing")

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([f.timestamp for f in self.frames])

    def mean_magnitude(self) -> np.ndarray:
        return np.mean([f.magnitude for f in self.frames], axis=0)


def pixel_centers(params: AcquisitionParams) -> tuple[np.ndarray, np.ndarray]:
    """Meshgrids (X, Y) of pixel-center coordinates in mm, shape (ny, nx)."""
    ny, nx = params.grid_shape
    px = params.pixel_size
    xc = (np.arange(nx) + 0.5) * px
    yc = (np.arange(ny) + 0.5) * px
    return np.meshgrid(xc, yc)


def tube_pixel_mask(tube: TubeGeometry, params: AcquisitionParams) -> np.ndarray:
    """Boolean grid of pixels whose center lies inside the tube."""
    X, Y = pixel_centers(params)
    return (X - tube.center[0]) ** 2 + (Y - tube.center[1]) ** 2 <= tube.radius**2


def scene_fluid_mask(scene: PhantomScene, params: AcquisitionParams) -> np.ndarray:
    """Pixels inside any tube (flow or static water)."""
    mask = np.zeros(params.grid_shape, dtype=bool)
    for tube in scene.all_tubes:
        mask |= tube_pixel_mask(tube, params)
    return mask


def rasterize_velocity(scene: PhantomScene, q: float, params: AcquisitionParams,
                       supersampling: int = DEFAULT_SUPERSAMPLING) -> np.ndarray:
    """Pixel-averaged velocity map (mm/s) at instantaneous flow q.

    Each pixel value is the mean of the analytic velocity over
    supersampling^2 uniformly spaced subsample points within its footprint,
    so boundary pixels take fractional (partial-volume) values.
    """
    if supersampling < 1:
        raise ValueError("supersampling must be >= 1")
    ny, nx = params.grid_shape
    s = supersampling
    sub = params.pixel_size / s
    xs = (np.arange(nx * s) + 0.5) * sub
    ys = (np.arange(ny * s) + 0.5) * sub
    X, Y = np.meshgrid(xs, ys)
    v = np.zeros_like(X)
    for tube in scene.tubes:
        v += velocity_field(tube, q, X, Y)
    return v.reshape(ny, s, nx, s).mean(axis=(1, 3))


def background_phase(params: AcquisitionParams) -> np.ndarray:
    """Linear background phase a + b*x + c*y (radians) at pixel centers."""
    a, b, c = params.background_coeffs
    X, Y = pixel_centers(params)
    return a + b * X + c * Y


def wrap_phase(phi: np.ndarray) -> np.ndarray:
    """Wrap radians into [-pi, pi)."""
    return np.mod(phi + np.pi, 2.0 * np.pi) - np.pi


def encode_frame(vmap: np.ndarray, params: AcquisitionParams, fluid_mask: np.ndarray,
                 t: float, rng: np.random.Generator | None,
                 noise_sigma: float | None = None) -> Frame:
    """Encode a velocity map into a magnitude/phase frame.

    Ideal phase is pi*v/venc plus the background polynomial; independent
    Gaussian noise of SD ``noise_sigma`` (default: params.effective_sigma) is
    added to the real and imaginary channels of the unit/0.05 amplitude
    signal. Output phase is wrapped to [-pi, pi).
    """
    vmap = np.asarray(vmap, dtype=float)
    if vmap.shape != params.grid_shape:
        raise ValueError(f"velocity map shape {vmap.shape} != matrix {params.grid_shape}")
    if not np.all(np.isfinite(vmap)):
        raise ValueError("velocity map contains non-finite values")
    sigma = params.effective_sigma if noise_sigma is None else noise_sigma
    amp = np.where(fluid_mask, AMPLITUDE_FLUID, AMPLITUDE_BACKGROUND)
    phi = np.pi * vmap / params.venc + background_phase(params)
    if sigma > 0:
        if rng is None:
            raise ValueError("noisy encoding requires an rng")
        signal = amp * np.exp(1j * phi)
        signal = signal + sigma * (rng.standard_normal(vmap.shape)
                                   + 1j * rng.standard_normal(vmap.shape))
        magnitude = np.abs(signal)
        phase = np.angle(signal)
        phase[phase >= np.pi] = -np.pi  # np.angle returns (-pi, pi]
    else:
        magnitude = amp.astype(float)
        phase = wrap_phase(phi)
    return Frame(magnitude=magnitude, phase=phase, timestamp=float(t))


def _frame_rng(seed: int, mode: str, index: int) -> np.random.Generator:
    # Independent per-frame substream; deterministic in (seed, mode, index).
    return np.random.default_rng([seed, 0 if mode == MODE_EPI else 1, index])


def acquire_epi(scene: PhantomScene, params: AcquisitionParams,
                supersampling: int = DEFAULT_SUPERSAMPLING) -> ImageSeries:
    """Real-time EPI series: n_frames instantaneous samples, 62 ms apart."""
    if params.mode != MODE_EPI:
        raise ValueError("acquire_epi requires EPI params")
    unit = rasterize_velocity(scene, 1.0, params, supersampling)
    mask = scene_fluid_mask(scene, params)
    sigma = params.effective_sigma
    frames = []
    for i in range(params.n_frames):
        t = (i + 0.5) * params.frame_interval
        q = flow_at(scene.waveform, t)
        rng = _frame_rng(params.rng_seed, MODE_EPI, i) if sigma > 0 else None
        frames.append(encode_frame(unit * q, params, mask, t, rng, noise_sigma=sigma))
    return ImageSeries(tuple(frames), params, scene.scene_hash())


def cine_n_cycles(scene: PhantomScene, params: AcquisitionParams) -> int:
    """Complete pump cycles inside the CINE acquisition window."""
    return math.floor(params.acq_duration * scene.waveform.rate_bpm / 60.0)


def acquire_cine(scene: PhantomScene, params: AcquisitionParams,
                 supersampling: int = DEFAULT_SUPERSAMPLING) -> ImageSeries:
    """CINE series: phases_per_cycle bin-center samples of one average cycle.

    Retrospective gating over n_cycles heartbeats is emulated by dividing the
    per-frame noise SD by sqrt(n_cycles).
    """
    if params.mode != MODE_CINE:
        raise ValueError("acquire_cine requires CINE params")
    unit = rasterize_velocity(scene, 1.0, params, supersampling)
    mask = scene_fluid_mask(scene, params)
    n_cycles = cine_n_cycles(scene, params)
    sigma = params.effective_sigma / math.sqrt(max(n_cycles, 1))
    period = scene.waveform.period
    n = params.phases_per_cycle
    frames = []
    for i in range(n):
        t = (i + 0.5) * period / n
        q = flow_at(scene.waveform, t)
        rng = _frame_rng(params.rng_seed, MODE_CINE, i) if sigma > 0 else None
        frames.append(encode_frame(unit * q, params, mask, t, rng, noise_sigma=sigma))
    return ImageSeries(tuple(frames), params, scene.scene_hash())
