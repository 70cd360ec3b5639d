"""Statistical validation: Bland-Altman agreement, coefficient of variation
and confidence-interval gating against gold-standard values.

Sample (n-1) standard deviations are used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

LOA_FACTOR = 1.96


class LengthMismatchError(ValueError):
    """Raised when paired inputs differ in length."""


class ZeroMeanError(ValueError):
    """Raised when a coefficient of variation is requested for zero-mean data."""


@dataclass(frozen=True)
class BlandAltmanResult:
    """Pairwise differences with mean difference and 95% limits of agreement."""

    pair_means: np.ndarray
    diffs: np.ndarray
    mean_diff: float
    loa_low: float
    loa_high: float


@dataclass(frozen=True)
class RunSummary:
    """Aggregate of one validation arm (one mode, n_repeats acquisitions).

    sd_flow / cv_percent are None when there are not enough repeats to
    estimate spread; ``note`` says why.
    """

    mode: str
    n_repeats: int
    mean_flow: float
    sd_flow: float | None
    cv_percent: float | None
    area: float
    in_flow_ci: bool
    in_area_ci: bool
    note: str = ""


def bland_altman(a, b) -> BlandAltmanResult:
    """Bland-Altman comparison of two equally long measurement vectors.

    diffs = a - b, pair_means = (a + b) / 2, limits of agreement =
    mean(diffs) +/- 1.96 * sample SD(diffs).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatchError(f"inputs have shapes {a.shape} and {b.shape}")
    if len(a) < 2:
        raise LengthMismatchError("need at least 2 pairs")
    diffs = a - b
    mean_diff = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    return BlandAltmanResult(
        pair_means=(a + b) / 2.0,
        diffs=diffs,
        mean_diff=mean_diff,
        loa_low=mean_diff - LOA_FACTOR * sd,
        loa_high=mean_diff + LOA_FACTOR * sd,
    )


def coefficient_of_variation(values) -> float:
    """100 * sample SD / mean, in percent."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least 2 values")
    mean = values.mean()
    if mean == 0:
        raise ZeroMeanError("coefficient of variation undefined for zero mean")
    return float(100.0 * values.std(ddof=1) / mean)


def confidence_check(value: float, gold: float, tolerance_percent: float = 10.0):
    """Closed-interval check against gold * (1 +/- tolerance/100).

    Returns (inside, (low, high)).
    """
    if gold <= 0:
        raise ValueError("gold reference must be positive")
    low = gold * (1.0 - tolerance_percent / 100.0)
    high = gold * (1.0 + tolerance_percent / 100.0)
    return bool(low <= value <= high), (low, high)


def agreement_verdict(result: BlandAltmanResult) -> bool:
    """True when every difference lies inside the limits of agreement.

    The limits come from the differences themselves, so for Gaussian diffs
    roughly 95% of points land inside by construction; this is a screen for
    gross shape mismatch, not a significance test.
    """
    return bool(np.all((result.diffs >= result.loa_low) & (result.diffs <= result.loa_high)))


def write_bland_altman_csv(result: BlandAltmanResult, path) -> Path:
    """CSV of (pair_mean, diff) rows plus the computed mean/LoA lines."""
    path = Path(path)
    lines = [
        f"# mean_diff = {result.mean_diff:.9g}",
        f"# loa_low = {result.loa_low:.9g}",
        f"# loa_high = {result.loa_high:.9g}",
        "pair_mean,diff",
    ]
    for m, d in zip(result.pair_means, result.diffs):
        lines.append(f"{m:.9g},{d:.9g}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_bland_altman_csv(path) -> BlandAltmanResult:
    mean_diff = loa_low = loa_high = 0.0
    means, diffs = [], []
    for line in Path(path).read_text().strip().splitlines():
        if line.startswith("# mean_diff"):
            mean_diff = float(line.split("=")[1])
        elif line.startswith("# loa_low"):
            loa_low = float(line.split("=")[1])
        elif line.startswith("# loa_high"):
            loa_high = float(line.split("=")[1])
        elif line and not line.startswith(("#", "pair_mean")):
            m, d = line.split(",")
            means.append(float(m))
            diffs.append(float(d))
    return BlandAltmanResult(pair_means=np.array(means), diffs=np.array(diffs),
                             mean_diff=mean_diff, loa_low=loa_low, loa_high=loa_high)


def write_run_summaries_csv(summaries, path) -> Path:
    path = Path(path)
    lines = ["mode,n_repeats,mean_flow_mm3_s,sd_flow_mm3_s,cv_percent,area_mm2,in_flow_ci,in_area_ci,note"]
    for s in summaries:
        sd = "" if s.sd_flow is None else f"{s.sd_flow:.9g}"
        cv = "" if s.cv_percent is None else f"{s.cv_percent:.9g}"
        lines.append(f"{s.mode},{s.n_repeats},{s.mean_flow:.9g},{sd},{cv},"
                     f"{s.area:.9g},{s.in_flow_ci},{s.in_area_ci},{s.note}")
    path.write_text("\n".join(lines) + "\n")
    return path
