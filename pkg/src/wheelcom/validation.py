"""Agreement statistics between the estimated CoM ground projection and
the force-plate CoP, per posture and axis.

In this toolkit's reporting, "accuracy" is the mean of the estimated minus
reference differences over a posture's trials and "precision" their sample
standard deviation (n-1 denominator). The axis-level agreement analysis is
Bland-Altman: difference against mean-of-pair, with limits of agreement at
mean +/- 1.96 SD and a Pearson correlation of difference versus mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput, StatisticsError, TooFewResults, WheelcomError

POSTURES = (
    "full extension",
    "arms backward",
    "neutral",
    "arms forward",
    "front reach",
    "left reach",
    "left arm raised",
    "right arm raised",
    "right reach",
)

AXES = ("ap", "ml")


@dataclass(frozen=True)
class TrialResult:
    """One acquisition: estimated and reference (AP, ML) in metres."""

    posture: str
    trial_index: int
    est_ap: float
    est_ml: float
    ref_ap: float
    ref_ml: float

    def __post_init__(self):
        if self.posture not in POSTURES:
            raise WheelcomError(f"unknown posture {self.posture!r}")
        values = (self.est_ap, self.est_ml, self.ref_ap, self.ref_ml)
        if not all(math.isfinite(v) for v in values):
            raise WheelcomError(f"non-finite trial result for {self.posture!r}")

    def diff(self, axis: str) -> float:
        if axis == "ap":
            return self.est_ap - self.ref_ap
        if axis == "ml":
            return self.est_ml - self.ref_ml
        raise WheelcomError(f"axis must be 'ap' or 'ml', got {axis!r}")

    def pair_mean(self, axis: str) -> float:
        if axis == "ap":
            return 0.5 * (self.est_ap + self.ref_ap)
        if axis == "ml":
            return 0.5 * (self.est_ml + self.ref_ml)
        raise WheelcomError(f"axis must be 'ap' or 'ml', got {axis!r}")


@dataclass(frozen=True)
class PostureStats:
    """Accuracy (mean difference) and precision (SD of differences) of one
    posture, per axis, in metres."""

    posture: str
    accuracy_ap: float
    precision_ap: float
    accuracy_ml: float
    precision_ml: float
    n: int


@dataclass(frozen=True)
class BlandAltmanStats:
    """Axis-level agreement: mean difference, SD, limits of agreement and
    the Pearson correlation of difference versus mean-of-pair."""

    axis: str
    mean_diff: float
    sd_diff: float
    loa_low: float
    loa_high: float
    pearson_rho: float
    degenerate: bool
    n: int


@dataclass(frozen=True)
class ValidationReport:
    """Everything the report writers consume."""

    results: tuple
    stats: tuple
    bland_altman_ap: BlandAltmanStats
    bland_altman_ml: BlandAltmanStats


def _sd(values: np.ndarray) -> float:
    # Sample standard deviation; a single observation has zero spread here.
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def posture_stats(results: Sequence[TrialResult]) -> list[PostureStats]:
    """Per-posture accuracy and precision, ordered canonically.

    Only postures present in the results are reported; each needs at least
    one trial.
    """
    if not results:
        raise EmptyInput("no trial results")
    out = []
    for posture in POSTURES:
        group = [r for r in results if r.posture == posture]
        if not group:
            continue
        diffs_ap = np.array([r.diff("ap") for r in group])
        diffs_ml = np.array([r.diff("ml") for r in group])
        out.append(
            PostureStats(
                posture=posture,
                accuracy_ap=float(diffs_ap.mean()),
                precision_ap=_sd(diffs_ap),
                accuracy_ml=float(diffs_ml.mean()),
                precision_ml=_sd(diffs_ml),
                n=len(group),
            )
        )
    return out


def bland_altman(results: Sequence[TrialResult], axis: str) -> BlandAltmanStats:
    """Bland-Altman statistics for one axis over all supplied results."""
    if axis not in AXES:
        raise StatisticsError(f"axis must be one of {AXES}, got {axis!r}")
    if len(results) < 2:
        raise TooFewResults(f"need at least 2 results, got {len(results)}")
    diffs = np.array([r.diff(axis) for r in results])
    means = np.array([r.pair_mean(axis) for r in results])
    mean_diff = float(diffs.mean())
    sd_diff = _sd(diffs)

    var_d = float(np.var(diffs))
    var_m = float(np.var(means))
    degenerate = var_d <= 0.0 or var_m <= 0.0
    if degenerate:
        rho = 0.0
    else:
        rho = float(np.corrcoef(diffs, means)[0, 1])

    return BlandAltmanStats(
        axis=axis,
        mean_diff=mean_diff,
        sd_diff=sd_diff,
        loa_low=mean_diff - 1.96 * sd_diff,
        loa_high=mean_diff + 1.96 * sd_diff,
        pearson_rho=rho,
        degenerate=degenerate,
        n=len(results),
    )


def build_report(results: Sequence[TrialResult]) -> ValidationReport:
    """Posture table plus both axis-level Bland-Altman analyses."""
    return ValidationReport(
        results=tuple(results),
        stats=tuple(posture_stats(results)),
        bland_altman_ap=bland_altman(results, "ap"),
        bland_altman_ml=bland_altman(results, "ml"),
    )
