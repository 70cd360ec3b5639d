"""Experiment configuration: dataclasses plus a flat key=value config-file
parser (INI sections; unknown sections or keys are rejected)."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .phantom import FlowWaveform


class ConfigError(ValueError):
    """Raised for unknown keys/sections or unparsable values."""


@dataclass(frozen=True)
class SweepSpec:
    """Pixel-size sweep: 0.8 to 4.4 mm in 0.4 mm steps, 4 repeats per size."""

    min_px: float = 0.8
    max_px: float = 4.4
    step: float = 0.4
    repeats_per_size: int = 4

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError("sweep step must be positive")
        if self.min_px > self.max_px:
            raise ConfigError("sweep min_px must be <= max_px")

    def sizes(self) -> list[float]:
        sizes = []
        k = 0
        while True:
            px = round(self.min_px + k * self.step, 6)
            if px > self.max_px + 1e-9:
                break
            sizes.append(px)
            k += 1
        return sizes


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything the validation and sweep experiments need."""

    mean_flow: float = 1150.0
    rate_bpm: float = 99.0
    harmonics: tuple[tuple[float, float], ...] = FlowWaveform().harmonics
    venc: float = 50.0
    pixel_size: float = 1.2
    noise_sigma_ref: float = 0.12
    background_coeffs: tuple[float, float, float] = (0.05, 0.0005, 0.0005)
    supersampling: int = 16
    n_repeats: int = 10
    sweep: SweepSpec = field(default_factory=SweepSpec)
    base_seed: int = 20260823
    noiseless: bool = False
    output_dir: str = "out"

    def waveform(self) -> FlowWaveform:
        return FlowWaveform(self.mean_flow, self.rate_bpm, self.harmonics)


_SCHEMA = {
    "scene": {"mean_flow": float, "rate_bpm": float, "harmonics": str},
    "acquisition": {
        "venc": float, "pixel_size": float, "noise_sigma_ref": float,
        "background_a": float, "background_b": float, "background_c": float,
        "supersampling": int,
    },
    "validation": {"n_repeats": int},
    "sweep": {"min_px": float, "max_px": float, "step": float, "repeats_per_size": int},
    "run": {"base_seed": int, "noiseless": bool, "output_dir": str},
}


def _parse_harmonics(text: str) -> tuple[tuple[float, float], ...]:
    # "0.45:-1.5708; 0.15:0" -> ((0.45, -1.5708), (0.15, 0.0))
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            amp, phase = part.split(":")
            out.append((float(amp), float(phase)))
        except ValueError as exc:
            raise ConfigError(f"bad harmonic entry {part!r}; expected amp:phase") from exc
    return tuple(out)


def load_config(path) -> ExperimentConfig:
    """Parse a config file into an ExperimentConfig, validating every key."""
    parser = configparser.ConfigParser()
    read = parser.read(Path(path))
    if not read:
        raise ConfigError(f"config file {path} not found")
    values: dict = {}
    bg = list(ExperimentConfig().background_coeffs)
    sweep_kwargs: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind = _SCHEMA[section][key]
            try:
                if kind is bool:
                    value = parser.getboolean(section, key)
                elif key == "harmonics":
                    value = _parse_harmonics(raw)
                else:
                    value = kind(raw)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
            if section == "sweep":
                sweep_kwargs[key] = value
            elif key == "background_a":
                bg[0] = value
            elif key == "background_b":
                bg[1] = value
            elif key == "background_c":
                bg[2] = value
            else:
                values[key] = value
    if sweep_kwargs:
        values["sweep"] = SweepSpec(**sweep_kwargs)
    values["background_coeffs"] = tuple(bg)
    return ExperimentConfig(**values)


def apply_cli_overrides(config: ExperimentConfig, seed: int | None = None,
                        out: str | None = None, noiseless: bool = False) -> ExperimentConfig:
    if seed is not None:
        config = replace(config, base_seed=seed)
    if out is not None:
        config = replace(config, output_dir=out)
    if noiseless:
        config = replace(config, noiseless=True)
    return config
