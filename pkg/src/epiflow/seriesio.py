"""On-disk image series format.

A series is a directory with a human-readable ``series.json`` header (params,
scene hash, frame count, grid dims, endianness) plus one flat binary file per
frame: 32-bit little-endian floats, magnitude plane then phase plane,
row-major. Save -> load -> save is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionParams, Frame, ImageSeries
from .phantom import PhantomScene, scene_from_dict, scene_to_dict

HEADER_NAME = "series.json"
FORMAT_VERSION = 1

# Largest float32 strictly below pi; keeps stored phases inside [-pi, pi).
_MAX_PHASE_F32 = np.nextafter(np.float32(np.pi), np.float32(0.0))


def _to_f32_plane(arr: np.ndarray, clamp_phase: bool) -> np.ndarray:
    out = np.asarray(arr, dtype="<f4")
    if clamp_phase:
        out = np.minimum(out, _MAX_PHASE_F32)
    return out


def save_series(series: ImageSeries, directory, scene: PhantomScene | None = None) -> Path:
    """Write a series directory; returns its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ny, nx = series.params.grid_shape
    header = {
        "format_version": FORMAT_VERSION,
        "endianness": "little",
        "dtype": "float32",
        "frame_count": len(series.frames),
        "dims": [ny, nx],
        "scene_hash": series.scene_hash,
        "timestamps": [f.timestamp for f in series.frames],
        "params": _params_to_dict(series.params),
    }
    if scene is not None:
        header["scene"] = scene_to_dict(scene)
    (directory / HEADER_NAME).write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    for i, frame in enumerate(series.frames):
        mag = _to_f32_plane(frame.magnitude, clamp_phase=False)
        phs = _to_f32_plane(frame.phase, clamp_phase=True)
        with open(directory / f"frame_{i:04d}.bin", "wb") as fh:
            fh.write(mag.tobytes(order="C"))
            fh.write(phs.tobytes(order="C"))
    return directory


def load_series(directory) -> tuple[ImageSeries, PhantomScene | None]:
    """Read a series directory back; returns (series, scene-or-None)."""
    directory = Path(directory)
    header = json.loads((directory / HEADER_NAME).read_text())
    ny, nx = header["dims"]
    params = _params_from_dict(header["params"])
    frames = []
    for i, t in enumerate(header["timestamps"]):
        raw = np.fromfile(directory / f"frame_{i:04d}.bin", dtype="<f4")
        if raw.size != 2 * ny * nx:
            raise ValueError(f"frame_{i:04d}.bin has {raw.size} floats, expected {2 * ny * nx}")
        mag = raw[: ny * nx].reshape(ny, nx)
        phs = raw[ny * nx:].reshape(ny, nx)
        frames.append(Frame(magnitude=mag, phase=phs, timestamp=t))
    series = ImageSeries(tuple(frames), params, header.get("scene_hash", ""))
    scene = scene_from_dict(header["scene"]) if "scene" in header else None
    return series, scene


def _params_to_dict(params: AcquisitionParams) -> dict:
    return {
        "mode": params.mode,
        "venc": params.venc,
        "pixel_size": params.pixel_size,
        "fov": list(params.fov),
        "frame_interval": params.frame_interval,
        "n_frames": params.n_frames,
        "phases_per_cycle": params.phases_per_cycle,
        "acq_duration": params.acq_duration,
        "noise_sigma_ref": params.noise_sigma_ref,
        "background_coeffs": list(params.background_coeffs),
        "rng_seed": params.rng_seed,
        "metadata": dict(params.metadata),
    }


def _params_from_dict(d: dict) -> AcquisitionParams:
    d = dict(d)
    d["fov"] = tuple(d["fov"])
    d["background_coeffs"] = tuple(d["background_coeffs"])
    return AcquisitionParams(**d)
