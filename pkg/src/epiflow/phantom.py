"""Pulsatile flow phantom: pump waveform, tube geometry and the ground-truth
velocity field they induce in the imaging plane.

All quantities are in mm / s / mm^3/s. Everything here is immutable and pure,
so scenes can be evaluated concurrently without coordination.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

# Number of samples used to screen a waveform for negativity at construction.
_NEGATIVITY_SCREEN_SAMPLES = 8192


class WaveformError(ValueError):
    """Raised when a waveform definition would produce negative flow."""


@dataclass(frozen=True)
class FlowWaveform:
    """Periodic volumetric pump output Q(t).

    Q(t) = mean_flow * (1 + sum_k a_k * sin(2*pi*k*f*t + phi_k)) with
    f = rate_bpm / 60 and (a_k, phi_k) taken from ``harmonics`` for the
    k-th integer multiple of the fundamental.
    """

    mean_flow: float = 1150.0
    rate_bpm: float = 99.0
    harmonics: tuple[tuple[float, float], ...] = ((0.45, -math.pi / 2),)

    def __post_init__(self):
        if self.mean_flow < 0:
            raise WaveformError("mean_flow must be non-negative")
        if self.rate_bpm <= 0:
            raise WaveformError("rate_bpm must be positive")
        object.__setattr__(self, "harmonics", tuple((float(a), float(p)) for a, p in self.harmonics))
        t = np.linspace(0.0, self.period, _NEGATIVITY_SCREEN_SAMPLES, endpoint=False)
        if np.min(self(t)) < 0.0:
            raise WaveformError("harmonic set produces negative flow; rejected")

    @property
    def period(self) -> float:
        """Cycle duration in seconds (60 / rate_bpm)."""
        return 60.0 / self.rate_bpm

    def __call__(self, t):
        return flow_at(self, t)


def flow_at(waveform: FlowWaveform, t):
    """Volumetric flow Q(t) in mm^3/s; accepts scalars or arrays, vectorized.

    Periodic with period 60/rate_bpm and non-negative for any waveform that
    survived construction.
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t must be finite")
    # fmod is exact, so t and t + period reduce to the same phase whenever
    # the addition itself was exact; periodicity then holds bit-for-bit.
    tau = np.fmod(t, waveform.period)
    f = waveform.rate_bpm / 60.0
    rel = np.ones_like(tau)
    for k, (a, phi) in enumerate(waveform.harmonics, start=1):
        rel = rel + a * np.sin(2.0 * np.pi * k * f * tau + phi)
    q = waveform.mean_flow * rel
    return float(q) if q.ndim == 0 else q


@dataclass(frozen=True)
class TubeGeometry:
    """Circular tube cross-section in the imaging plane."""

    center: tuple[float, float]
    diameter: float
    is_static: bool = False

    def __post_init__(self):
        if self.diameter <= 0:
            raise ValueError("diameter must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    @property
    def area(self) -> float:
        """Cross-section area in mm^2 (pi * r^2)."""
        return math.pi * self.radius**2


def velocity_at(tube: TubeGeometry, q: float, point) -> float:
    """Axial velocity (mm/s) of the laminar parabolic profile at ``point``.

    v(r) = 2*q/A * (1 - (r/R)^2) inside the tube, 0 outside or in a static
    tube. The spatial integral over the cross-section equals q.
    """
    if q < 0:
        raise ValueError("q must be non-negative")
    point = np.asarray(point, dtype=float)
    return float(velocity_field(tube, q, point[..., 0], point[..., 1]))


def velocity_field(tube: TubeGeometry, q: float, x, y):
    """Vectorized parabolic profile over coordinate arrays x, y (mm)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if tube.is_static or q == 0:
        return np.zeros(np.broadcast(x, y).shape)
    r2 = (x - tube.center[0]) ** 2 + (y - tube.center[1]) ** 2
    rr2 = tube.radius**2
    peak = 2.0 * q / tube.area
    return np.where(r2 <= rr2, peak * (1.0 - r2 / rr2), 0.0)


@dataclass(frozen=True)
class PhantomScene:
    """Flow tubes (in series, sharing one waveform), a static calibration
    tube and the field of view they sit in."""

    tubes: tuple[TubeGeometry, ...]
    static_tube: TubeGeometry
    waveform: FlowWaveform
    fov: tuple[float, float] = (100.0, 60.0)

    def __post_init__(self):
        object.__setattr__(self, "tubes", tuple(self.tubes))
        object.__setattr__(self, "fov", (float(self.fov[0]), float(self.fov[1])))
        every = list(self.tubes) + [self.static_tube]
        for i, a in enumerate(every):
            for b in every[i + 1:]:
                d = math.dist(a.center, b.center)
                if d < a.radius + b.radius:
                    raise ValueError(f"tube cross-sections overlap (centers {a.center} / {b.center})")
        w, h = self.fov
        for t in every:
            cx, cy = t.center
            if not (t.radius <= cx <= w - t.radius and t.radius <= cy <= h - t.radius):
                raise ValueError(f"tube at {t.center} does not fit inside the {w}x{h} mm FOV")

    @property
    def all_tubes(self) -> tuple[TubeGeometry, ...]:
        """Flow tubes plus the static tube."""
        return self.tubes + (self.static_tube,)

    def scene_hash(self) -> str:
        """Stable short identifier of the scene definition."""
        payload = json.dumps(scene_to_dict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def scene_to_dict(scene: PhantomScene) -> dict:
    """JSON-serializable scene description (used by the series header)."""
    def tube(t):
        return {"center": list(t.center), "diameter": t.diameter, "is_static": t.is_static}
    return {
        "tubes": [tube(t) for t in scene.tubes],
        "static_tube": tube(scene.static_tube),
        "waveform": {
            "mean_flow": scene.waveform.mean_flow,
            "rate_bpm": scene.waveform.rate_bpm,
            "harmonics": [list(h) for h in scene.waveform.harmonics],
        },
        "fov": list(scene.fov),
    }


def scene_from_dict(d: dict) -> PhantomScene:
    def tube(td):
        return TubeGeometry(tuple(td["center"]), td["diameter"], td["is_static"])
    wf = d["waveform"]
    return PhantomScene(
        tubes=tuple(tube(td) for td in d["tubes"]),
        static_tube=tube(d["static_tube"]),
        waveform=FlowWaveform(wf["mean_flow"], wf["rate_bpm"],
                              tuple(tuple(h) for h in wf["harmonics"])),
        fov=tuple(d["fov"]),
    )


def default_scene(waveform: FlowWaveform | None = None) -> PhantomScene:
    """The default four-tube phantom plus an adjacent static calibration tube.

    Tube diameters 9.5/6.4/4.4/2 mm in a 100x60 mm FOV, driven at 99 bpm with
    a 1150 mm^3/s mean. The static tube sits near tube-1 (small residual from
    any background phase gradient after offset-only calibration) but with a
    9.5 mm edge gap so pixel masks stay 4-disconnected up to 4.4 mm pixels.
    Deterministic.
    """
    if waveform is None:
        waveform = FlowWaveform()
    return PhantomScene(
        tubes=(
            TubeGeometry((15.3, 30.3), 9.5),
            TubeGeometry((35.0, 30.3), 6.4),
            TubeGeometry((50.0, 30.3), 4.4),
            TubeGeometry((62.0, 30.3), 2.0),
        ),
        static_tube=TubeGeometry((15.3, 11.3), 9.5, is_static=True),
        waveform=waveform,
        fov=(100.0, 60.0),
    )
