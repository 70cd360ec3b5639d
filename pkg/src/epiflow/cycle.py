"""Average-cycle reconstruction from a real-time flow curve.

The curve is cut at per-cycle minima, every complete min-to-min segment is
resampled to 32 points on normalized time and the segments are averaged
point-wise. The result can be circularly aligned to a gated reference curve
at the peak.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quantify import FlowCurve

CYCLE_POINTS = 32

# Consecutive minima must be at least this fraction of the expected period apart.
MIN_SEPARATION_FRACTION = 0.7


class TooShortCurveError(ValueError):
    """Raised when a curve does not contain at least two cycle minima."""


@dataclass(frozen=True)
class ReconstructedCycle:
    """32-point average cycle with per-point standard deviation."""

    flows: np.ndarray
    sds: np.ndarray
    n_cycles: int
    period_estimate: float

    def __post_init__(self):
        object.__setattr__(self, "flows", np.asarray(self.flows, dtype=float))
        object.__setattr__(self, "sds", np.asarray(self.sds, dtype=float))
        if len(self.flows) != CYCLE_POINTS or len(self.sds) != CYCLE_POINTS:
            raise ValueError(f"reconstructed cycle must have exactly {CYCLE_POINTS} points")
        if np.any(self.sds < 0):
            raise ValueError("per-point standard deviations must be non-negative")
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")

    @property
    def mean_flow(self) -> float:
        return float(np.mean(self.flows))


def detect_cycle_minima(curve: FlowCurve, expected_period: float) -> list[int]:
    """Indices of per-cycle minima via a sliding-window minimum.

    A sample is a minimum when it is the earliest occurrence of the smallest
    value inside a window one expected period wide centred on it, and the
    window is not flat. Accepted minima are at least 0.7 expected periods
    apart (earlier index wins).
    """
    if expected_period <= 0:
        raise ValueError("expected_period must be positive")
    flows = curve.flows
    times = curve.times
    n = len(flows)
    dt = float(np.median(np.diff(times)))
    if n < 2 * expected_period / dt:
        raise TooShortCurveError(
            f"curve of {n} samples is shorter than two expected periods")
    half = int(round(expected_period / (2.0 * dt)))
    candidates = []
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        window = flows[lo:hi]
        wmin = window.min()
        if window.max() <= wmin:
            continue  # flat window: no strict minimum
        if flows[i] == wmin and lo + int(np.argmax(window == wmin)) == i:
            candidates.append(i)
    minima = []
    for i in candidates:
        if not minima or times[i] - times[minima[-1]] >= MIN_SEPARATION_FRACTION * expected_period:
            minima.append(i)
    if len(minima) < 2:
        raise TooShortCurveError(f"found {len(minima)} cycle minima, need at least 2")
    return minima


def reconstruct_average_cycle(curve: FlowCurve, minima) -> ReconstructedCycle:
    """Point-wise mean and sample SD of all complete min-to-min segments.

    Segment sample j sits at absolute time t_k + (j/32) * (t_{k+1} - t_k) and
    is read off the curve by linear interpolation; partial leading/trailing
    cycles are never part of a segment.
    """
    minima = list(minima)
    if len(minima) < 2:
        raise TooShortCurveError("need at least 2 minima to cut a complete cycle")
    u = np.arange(CYCLE_POINTS) / CYCLE_POINTS
    segments = []
    durations = []
    for k in range(len(minima) - 1):
        t0, t1 = curve.times[minima[k]], curve.times[minima[k + 1]]
        tq = t0 + u * (t1 - t0)
        segments.append(np.interp(tq, curve.times, curve.flows))
        durations.append(t1 - t0)
    segments = np.asarray(segments)
    n_cycles = len(segments)
    sds = segments.std(axis=0, ddof=1) if n_cycles > 1 else np.zeros(CYCLE_POINTS)
    return ReconstructedCycle(
        flows=segments.mean(axis=0),
        sds=sds,
        n_cycles=n_cycles,
        period_estimate=float(np.mean(durations)),
    )


def align_to_peak(recon: ReconstructedCycle, reference: FlowCurve) -> ReconstructedCycle:
    """Circularly shift the cycle so its peak index matches the reference's.

    Ties in either argmax resolve toward the lowest index; flows and sds move
    together, so the operation is idempotent and content-preserving.
    """
    if len(reference) != CYCLE_POINTS:
        raise ValueError(f"reference curve must have {CYCLE_POINTS} samples")
    shift = int(np.argmax(reference.flows)) - int(np.argmax(recon.flows))
    return ReconstructedCycle(
        flows=np.roll(recon.flows, shift),
        sds=np.roll(recon.sds, shift),
        n_cycles=recon.n_cycles,
        period_estimate=recon.period_estimate,
    )


def read_cycle_csv(path) -> ReconstructedCycle:
    n_cycles, period = 1, 0.0
    flows, sds = [], []
    for line in Path(path).read_text().strip().splitlines():
        if line.startswith("# n_cycles"):
            n_cycles = int(line.split("=")[1])
        elif line.startswith("# period_estimate_s"):
            period = float(line.split("=")[1])
        elif line and not line.startswith(("#", "index")):
            _, q, s = line.split(",")
            flows.append(float(q))
            sds.append(float(s))
    return ReconstructedCycle(flows=np.array(flows), sds=np.array(sds),
                              n_cycles=n_cycles, period_estimate=period)


def write_cycle_csv(recon: ReconstructedCycle, path) -> Path:
    """CSV export with n_cycles / period as commented header lines."""
    path = Path(path)
    lines = [
        f"# n_cycles = {recon.n_cycles}",
        f"# period_estimate_s = {recon.period_estimate:.9g}",
        "index,flow_mm3_s,sd_mm3_s",
    ]
    for i, (q, s) in enumerate(zip(recon.flows, recon.sds)):
        lines.append(f"{i},{q:.9g},{s:.9g}")
    path.write_text("\n".join(lines) + "\n")
    return path
