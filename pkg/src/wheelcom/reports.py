"""Report and plot emission: per-trial results, the posture accuracy and
precision table, Bland-Altman CSVs and SVG scatter plots.

Values are millimetres at this boundary. The posture table rounds to
integer millimetres; everything else keeps full precision. All writers are
deterministic: identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .body import ComTrajectory
from .errors import IoFailure, SchemaViolation
from .validation import (
    BlandAltmanStats,
    PostureStats,
    TrialResult,
    ValidationReport,
)

REPORT_HEADER = (
    "Posture",
    "AP Accuracy (mm)",
    "AP Precision (mm)",
    "ML Accuracy (mm)",
    "ML Precision (mm)",
)
TRIALS_HEADER = (
    "posture",
    "trial_index",
    "est_ap_mm",
    "est_ml_mm",
    "ref_ap_mm",
    "ref_ml_mm",
    "diff_ap_mm",
    "diff_ml_mm",
)


def _mm(value_m: float) -> float:
    return 1000.0 * value_m


def _open_writer(path: Path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def format_posture(posture: str) -> str:
    return posture.capitalize()


def write_posture_table(stats: Sequence[PostureStats], path) -> Path:
    """The accuracy/precision table, one row per posture, integer mm."""
    path = Path(path)
    with _open_writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for s in stats:
            w.writerow(
                [
                    format_posture(s.posture),
                    round(_mm(s.accuracy_ap)),
                    round(_mm(s.precision_ap)),
                    round(_mm(s.accuracy_ml)),
                    round(_mm(s.precision_ml)),
                ]
            )
    return path


def write_trial_results(results: Sequence[TrialResult], path) -> Path:
    path = Path(path)
    with _open_writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIALS_HEADER)
        for r in results:
            w.writerow(
                [
                    r.posture,
                    r.trial_index,
                    repr(_mm(r.est_ap)),
                    repr(_mm(r.est_ml)),
                    repr(_mm(r.ref_ap)),
                    repr(_mm(r.ref_ml)),
                    repr(_mm(r.diff("ap"))),
                    repr(_mm(r.diff("ml"))),
                ]
            )
    return path


def read_trial_results(path) -> list:
    """Read back a per-trial results CSV (the 'report' entry point)."""
    path = Path(path)
    results = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRIALS_HEADER:
            raise SchemaViolation(f"{path}: expected header {TRIALS_HEADER}")
        for i, row in enumerate(reader):
            if len(row) != len(TRIALS_HEADER):
                raise SchemaViolation(f"{path}, line {i + 2}: wrong column count")
            try:
                results.append(
                    TrialResult(
                        posture=row[0],
                        trial_index=int(row[1]),
                        est_ap=float(row[2]) / 1000.0,
                        est_ml=float(row[3]) / 1000.0,
                        ref_ap=float(row[4]) / 1000.0,
                        ref_ml=float(row[5]) / 1000.0,
                    )
                )
            except ValueError as exc:
                raise SchemaViolation(f"{path}, line {i + 2}: {exc}") from exc
    return results


def write_bland_altman_csv(
    results: Sequence[TrialResult], stats: BlandAltmanStats, path
) -> Path:
    """Scatter data (mean, difference) in mm, followed by a stats block."""
    path = Path(path)
    with _open_writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mean_mm", "diff_mm"])
        for r in results:
            w.writerow([repr(_mm(r.pair_mean(stats.axis))), repr(_mm(r.diff(stats.axis)))])
        w.writerow([])
        w.writerow(["stat", "value"])
        w.writerow(["axis", stats.axis])
        w.writerow(["n", stats.n])
        w.writerow(["mean_diff_mm", repr(_mm(stats.mean_diff))])
        w.writerow(["sd_diff_mm", repr(_mm(stats.sd_diff))])
        w.writerow(["loa_low_mm", repr(_mm(stats.loa_low))])
        w.writerow(["loa_high_mm", repr(_mm(stats.loa_high))])
        w.writerow(["pearson_rho", repr(stats.pearson_rho)])
        w.writerow(["degenerate", str(stats.degenerate).lower()])
    return path


# -- SVG scatter --------------------------------------------------------------

_SVG_WIDTH = 640.0
_SVG_HEIGHT = 480.0
_MARGIN_LEFT = 80.0
_MARGIN_RIGHT = 25.0
_MARGIN_TOP = 25.0
_MARGIN_BOTTOM = 60.0


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list:
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    power = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * power
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def write_bland_altman_svg(
    results: Sequence[TrialResult], stats: BlandAltmanStats, path
) -> Path:
    """Difference-versus-mean scatter with horizontal lines at the mean
    difference and both limits of agreement.

    Tick labels carry their pixel position, so the data coordinates of the
    reference lines can be recovered from the file.
    """
    path = Path(path)
    means = np.array([_mm(r.pair_mean(stats.axis)) for r in results])
    diffs = np.array([_mm(r.diff(stats.axis)) for r in results])
    lines = {
        "mean": _mm(stats.mean_diff),
        "loa_low": _mm(stats.loa_low),
        "loa_high": _mm(stats.loa_high),
    }

    def padded(lo, hi):
        span = hi - lo
        pad = 0.05 * span if span > 0 else max(1.0, abs(hi)) * 0.5
        return lo - pad, hi + pad

    x_lo, x_hi = padded(float(means.min()), float(means.max()))
    y_all = np.concatenate([diffs, list(lines.values())])
    y_lo, y_hi = padded(float(y_all.min()), float(y_all.max()))

    plot_w = _SVG_WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _SVG_HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(x):
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return _MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH:.0f}" '
        f'height="{_SVG_HEIGHT:.0f}" viewBox="0 0 {_SVG_WIDTH:.0f} {_SVG_HEIGHT:.0f}">',
        f'<rect x="0" y="0" width="{_SVG_WIDTH:.0f}" height="{_SVG_HEIGHT:.0f}" fill="white"/>',
        f'<rect x="{_MARGIN_LEFT:.1f}" y="{_MARGIN_TOP:.1f}" width="{plot_w:.1f}" '
        f'height="{plot_h:.1f}" fill="none" stroke="black" stroke-width="1"/>',
    ]

    for t in _nice_ticks(x_lo, x_hi):
        if not x_lo <= t <= x_hi:
            continue
        parts.append(
            f'<line class="xtick" x1="{_fmt(px(t))}" y1="{_fmt(py(y_lo))}" '
            f'x2="{_fmt(px(t))}" y2="{_fmt(py(y_lo) + 5)}" stroke="black"/>'
        )
        parts.append(
            f'<text class="xticklabel" x="{_fmt(px(t))}" y="{_fmt(py(y_lo) + 20)}" '
            f'text-anchor="middle" font-size="12">{t:g}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        if not y_lo <= t <= y_hi:
            continue
        parts.append(
            f'<line class="ytick" x1="{_fmt(_MARGIN_LEFT - 5)}" y1="{_fmt(py(t))}" '
            f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(py(t))}" stroke="black"/>'
        )
        parts.append(
            f'<text class="yticklabel" x="{_fmt(_MARGIN_LEFT - 8)}" y="{_fmt(py(t) + 4)}" '
            f'text-anchor="end" font-size="12">{t:g}</text>'
        )

    dash = {"mean": "none", "loa_low": "6,4", "loa_high": "6,4"}
    for name, value in lines.items():
        parts.append(
            f'<line id="{name}" x1="{_fmt(px(x_lo))}" y1="{_fmt(py(value))}" '
            f'x2="{_fmt(px(x_hi))}" y2="{_fmt(py(value))}" stroke="crimson" '
            f'stroke-width="1.5" stroke-dasharray="{dash[name]}"/>'
        )

    for m, d in zip(means, diffs):
        parts.append(
            f'<circle class="point" cx="{_fmt(px(m))}" cy="{_fmt(py(d))}" r="3.5" '
            f'fill="steelblue" fill-opacity="0.8"/>'
        )

    parts.append(
        f'<text class="xlabel" x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" '
        f'y="{_fmt(_SVG_HEIGHT - 15)}" text-anchor="middle" font-size="14">Mean (mm)</text>'
    )
    parts.append(
        f'<text class="ylabel" x="20" y="{_fmt(_MARGIN_TOP + plot_h / 2)}" '
        f'text-anchor="middle" font-size="14" transform="rotate(-90 20 '
        f'{_fmt(_MARGIN_TOP + plot_h / 2)})">Difference (mm)</text>'
    )
    parts.append("</svg>")

    try:
        path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def write_com_trajectory(traj: ComTrajectory, path) -> Path:
    """Per-frame CoM in wheelchair coordinates, metres."""
    path = Path(path)
    with _open_writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "com_x_m", "com_y_m", "com_z_m", "ap_m", "ml_m"])
        for t, c in zip(traj.times, traj.com):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in c] +
                       [repr(float(c[0])), repr(float(c[2]))])
    return path


def _com_filename(posture: str, trial_index: int) -> str:
    return f"com_{posture.replace(' ', '_')}_{trial_index}.csv"


def write_outputs(
    report: ValidationReport,
    trajectories: Sequence[tuple],
    out_dir,
) -> list:
    """Write the full artifact set into ``out_dir``.

    ``trajectories`` is a sequence of (posture, trial_index, ComTrajectory);
    pass an empty sequence to emit the report files only. Returns the
    written paths in a deterministic order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        write_trial_results(report.results, out / "trials.csv"),
        write_posture_table(report.stats, out / "report.csv"),
        write_bland_altman_csv(report.results, report.bland_altman_ap, out / "bland_altman_ap.csv"),
        write_bland_altman_csv(report.results, report.bland_altman_ml, out / "bland_altman_ml.csv"),
        write_bland_altman_svg(report.results, report.bland_altman_ap, out / "bland_altman_ap.svg"),
        write_bland_altman_svg(report.results, report.bland_altman_ml, out / "bland_altman_ml.svg"),
    ]
    for posture, trial_index, traj in trajectories:
        written.append(write_com_trajectory(traj, out / _com_filename(posture, trial_index)))
    return written
