"""Session file formats: manifest JSON, marker and force CSVs, probing and
pelvis-cloud documents.

Marker CSV is wide format: ``time_s`` then ``<marker>.x, <marker>.y,
<marker>.z`` in metres; an empty cell means the marker is occluded in that
frame. Force CSV is ``time_s, f1_N, f2_N, f3_N, f4_N``. The manifest binds
everything together, including the plate-to-contact map that orders the
four contact points like the force columns. All formats carry a
``format_version`` field.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .body import CalibrationRecordings, ProbedPoint
from .clusters import MarkerCluster, MarkerTrial, PelvisCloud
from .errors import IoFailure, SchemaViolation, UnitMismatch
from .forceplate import ForceRecord
from .anthropometry import AnthropometricTable, load_table
from .validation import POSTURES

FORMAT_VERSION = "1.0"

TIME_COLUMN = "time_s"
FORCE_COLUMNS = ("time_s", "f1_N", "f2_N", "f3_N", "f4_N")
_MARKER_COLUMN = re.compile(r"^(?P<name>.+)\.(?P<axis>[xyz])$")
_TIME_LIKE = re.compile(r"^time(_\w+)?$")
_FORCE_LIKE = re.compile(r"^f(?P<n>[1-4])_(?P<unit>\w+)$")


@dataclass(frozen=True)
class Acquisition:
    """One recording: synchronized marker and force streams."""

    markers: MarkerTrial
    forces: ForceRecord | None
    posture: str | None = None
    trial_index: int | None = None


@dataclass
class Session:
    """A fully parsed session, ready for calibration and validation."""

    root: Path
    subject_sex: str
    total_mass_kg: float | None  # None means "from-plates"
    table: AnthropometricTable
    cluster_labels: Mapping[str, Sequence[str]]
    cluster_frames: list
    probed_points: list
    probing_frames: MarkerTrial
    pelvis_cloud: PelvisCloud | None
    empty_forces: ForceRecord
    neutral: Acquisition
    trials: list
    wheelchair_cluster: str
    wheel_left_label: str
    wheel_right_label: str
    contact_labels: tuple  # manifest order, for geometry assembly
    plate_contact_labels: tuple  # f1..f4 order, for the force columns
    window_s: float | None  # None means the full trial span

    def calibration_recordings(self) -> CalibrationRecordings:
        return CalibrationRecordings(
            cluster_labels=self.cluster_labels,
            cluster_frames=self.cluster_frames,
            probed_points=self.probed_points,
            probing_frames=self.probing_frames,
            neutral_static=self.neutral.markers,
        )


def _numeric_columns(df: pd.DataFrame, path) -> pd.DataFrame:
    """Coerce all columns to float, reporting the first offending cell."""
    out = {}
    for col in df.columns:
        series = df[col]
        if series.dtype == object:
            coerced = pd.to_numeric(series, errors="coerce")
            bad = coerced.isna() & series.notna() & (series.astype(str).str.strip() != "")
            if bad.any():
                line = int(bad.idxmax()) + 2  # header is line 1
                raise SchemaViolation(
                    f"{path}, line {line}, column {col!r}: not a number "
                    f"({series[bad.idxmax()]!r})"
                )
            series = coerced
        out[col] = series.astype(float)
    return pd.DataFrame(out)


def _validate_time(times: np.ndarray, path) -> None:
    if np.any(~np.isfinite(times)):
        line = int(np.nonzero(~np.isfinite(times))[0][0]) + 2
        raise SchemaViolation(f"{path}, line {line}: missing or non-finite time")
    bad = np.nonzero(np.diff(times) <= 0)[0]
    if bad.size:
        raise SchemaViolation(
            f"{path}, line {int(bad[0]) + 3}: time column is not strictly increasing"
        )


def read_marker_csv(path) -> MarkerTrial:
    """Parse a wide marker CSV into a MarkerTrial (NaN rows = occlusions)."""
    path = Path(path)
    df = pd.read_csv(path, float_precision="round_trip")
    if df.columns.empty or df.columns[0] != TIME_COLUMN:
        first = df.columns[0] if len(df.columns) else "<none>"
        if _TIME_LIKE.match(str(first)) and first != TIME_COLUMN:
            raise UnitMismatch(
                f"{path}: time column must be {TIME_COLUMN!r} (seconds), got {first!r}"
            )
        raise SchemaViolation(f"{path}: first column must be {TIME_COLUMN!r}, got {first!r}")

    markers: dict = {}
    for col in df.columns[1:]:
        m = _MARKER_COLUMN.match(str(col))
        if not m:
            raise SchemaViolation(
                f"{path}: column {col!r} is not of the form '<marker>.<x|y|z>'"
            )
        markers.setdefault(m.group("name"), set()).add(m.group("axis"))
    for name, axes in markers.items():
        if axes != {"x", "y", "z"}:
            raise SchemaViolation(
                f"{path}: marker {name!r} has columns for axes {sorted(axes)}, needs x, y, z"
            )

    df = _numeric_columns(df, path)
    times = df[TIME_COLUMN].to_numpy()
    _validate_time(times, path)

    labels = tuple(markers)
    positions = np.empty((len(df), len(labels), 3))
    for j, name in enumerate(labels):
        for k, axis in enumerate(("x", "y", "z")):
            positions[:, j, k] = df[f"{name}.{axis}"].to_numpy()

    partial = np.any(np.isfinite(positions), axis=2) & ~np.all(
        np.isfinite(positions), axis=2
    )
    if np.any(partial):
        i, j = np.argwhere(partial)[0]
        raise SchemaViolation(
            f"{path}, line {int(i) + 2}: marker {labels[j]!r} has a partially "
            "empty x/y/z triplet"
        )
    return MarkerTrial(times, labels, positions)


def write_marker_csv(path, times, labels, positions) -> None:
    """Write a MarkerTrial-shaped array set as a wide marker CSV."""
    positions = np.asarray(positions, dtype=float)
    data = {TIME_COLUMN: np.asarray(times, dtype=float)}
    for j, label in enumerate(labels):
        for k, axis in enumerate(("x", "y", "z")):
            data[f"{label}.{axis}"] = positions[:, j, k]
    try:
        pd.DataFrame(data).to_csv(path, index=False)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_force_csv(path) -> ForceRecord:
    path = Path(path)
    df = pd.read_csv(path, float_precision="round_trip")
    cols = tuple(str(c) for c in df.columns)
    if cols != FORCE_COLUMNS:
        for c in cols:
            fm = _FORCE_LIKE.match(c)
            if fm and fm.group("unit") != "N":
                raise UnitMismatch(
                    f"{path}: force column {c!r} must be in newtons (f{fm.group('n')}_N)"
                )
            if _TIME_LIKE.match(c) and c != TIME_COLUMN:
                raise UnitMismatch(
                    f"{path}: time column must be {TIME_COLUMN!r} (seconds), got {c!r}"
                )
        raise SchemaViolation(
            f"{path}: force CSV columns must be {FORCE_COLUMNS}, got {cols}"
        )
    df = _numeric_columns(df, path)
    times = df[TIME_COLUMN].to_numpy()
    _validate_time(times, path)
    forces = df[list(FORCE_COLUMNS[1:])].to_numpy()
    if np.any(~np.isfinite(forces)):
        i = int(np.nonzero(~np.all(np.isfinite(forces), axis=1))[0][0]) + 2
        raise SchemaViolation(f"{path}, line {i}: missing or non-finite force value")
    return ForceRecord(times, forces)


def write_force_csv(path, times, forces) -> None:
    forces = np.asarray(forces, dtype=float)
    data = {TIME_COLUMN: np.asarray(times, dtype=float)}
    for i in range(4):
        data[FORCE_COLUMNS[i + 1]] = forces[:, i]
    try:
        pd.DataFrame(data).to_csv(path, index=False)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _load_json(path: Path) -> dict:
    if not path.exists():
        raise FileNotFoundError(f"missing file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{path}: top level must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise SchemaViolation(
            f"{path}: unsupported format_version {doc.get('format_version')!r}"
        )
    return doc


def read_probing(path) -> tuple[list, str]:
    """Probed points plus the name of the capture-frames CSV."""
    path = Path(path)
    doc = _load_json(path)
    frames_file = doc.get("frames_file")
    if not isinstance(frames_file, str):
        raise SchemaViolation(f"{path}: missing 'frames_file'")
    points = []
    for i, entry in enumerate(doc.get("points", [])):
        try:
            points.append(
                ProbedPoint(
                    label=str(entry["label"]),
                    cluster=str(entry["cluster"]),
                    time=float(entry["time_s"]),
                    position=np.asarray(entry["position_m"], dtype=float),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"{path}: points[{i}]: {exc!r}") from exc
    if not points:
        raise SchemaViolation(f"{path}: no probed points")
    return points, frames_file


def read_pelvis_cloud(path) -> PelvisCloud:
    path = Path(path)
    doc = _load_json(path)
    pts = doc.get("points_m")
    if not isinstance(pts, dict):
        raise SchemaViolation(f"{path}: missing 'points_m' mapping")
    return PelvisCloud({k: np.asarray(v, dtype=float) for k, v in pts.items()})


def _require(doc: Mapping, key: str, path) -> object:
    if key not in doc:
        raise SchemaViolation(f"{path}: manifest is missing {key!r}")
    return doc[key]


def load_session(manifest_path) -> Session:
    """Parse and validate a full session from its manifest."""
    manifest_path = Path(manifest_path)
    doc = _load_json(manifest_path)
    root = manifest_path.parent

    def resolve(name) -> Path:
        p = root / str(name)
        if not p.exists():
            raise FileNotFoundError(f"missing file: {p}")
        return p

    subject = _require(doc, "subject", manifest_path)
    sex = subject.get("sex")
    if sex not in ("female", "male"):
        raise SchemaViolation(f"{manifest_path}: subject sex must be female or male")
    mass = subject.get("total_mass_kg")
    if mass == "from-plates":
        total_mass = None
    else:
        try:
            total_mass = float(mass)
        except (TypeError, ValueError):
            raise SchemaViolation(
                f"{manifest_path}: total_mass_kg must be a number or 'from-plates'"
            ) from None
        if not total_mass > 0:
            raise SchemaViolation(f"{manifest_path}: total_mass_kg must be positive")

    table = load_table(resolve(_require(doc, "anthropometric_table", manifest_path)))

    cluster_labels = _require(doc, "clusters", manifest_path)
    if not isinstance(cluster_labels, dict) or not cluster_labels:
        raise SchemaViolation(f"{manifest_path}: 'clusters' must be a non-empty mapping")
    cluster_labels = {str(k): [str(l) for l in v] for k, v in cluster_labels.items()}

    cluster_trial = read_marker_csv(resolve(_require(doc, "cluster_definition", manifest_path)))
    probed_points, frames_file = read_probing(resolve(_require(doc, "probing", manifest_path)))
    probing_frames = read_marker_csv(resolve(frames_file))

    pelvis_cloud = None
    if doc.get("pelvis_cloud"):
        pelvis_cloud = read_pelvis_cloud(resolve(doc["pelvis_cloud"]))

    empty_forces = read_force_csv(
        resolve(_require(doc, "empty_wheelchair_forces", manifest_path))
    )

    neutral_doc = _require(doc, "neutral_static", manifest_path)
    neutral = Acquisition(
        markers=read_marker_csv(resolve(neutral_doc["markers"])),
        forces=read_force_csv(resolve(neutral_doc["forces"])),
        posture="neutral",
        trial_index=0,
    )

    trials = []
    for i, t in enumerate(_require(doc, "trials", manifest_path)):
        posture = t.get("posture")
        if posture not in POSTURES:
            raise SchemaViolation(
                f"{manifest_path}: trials[{i}]: unknown posture {posture!r}"
            )
        index = t.get("trial_index")
        if not isinstance(index, int) or index < 1:
            raise SchemaViolation(
                f"{manifest_path}: trials[{i}]: trial_index must be a positive integer"
            )
        trials.append(
            Acquisition(
                markers=read_marker_csv(resolve(t["markers"])),
                forces=read_force_csv(resolve(t["forces"])),
                posture=posture,
                trial_index=index,
            )
        )
    if not trials:
        raise SchemaViolation(f"{manifest_path}: no trials listed")

    wheelchair = _require(doc, "wheelchair", manifest_path)
    try:
        wc_cluster = str(wheelchair["cluster"])
        wheel_left = str(wheelchair["rear_wheel_left"])
        wheel_right = str(wheelchair["rear_wheel_right"])
        contact_labels = tuple(str(c) for c in wheelchair["contacts"])
    except (KeyError, TypeError) as exc:
        raise SchemaViolation(f"{manifest_path}: wheelchair block: {exc!r}") from exc
    if wc_cluster not in cluster_labels:
        raise SchemaViolation(
            f"{manifest_path}: wheelchair cluster {wc_cluster!r} is not a defined cluster"
        )
    if len(contact_labels) != 4 or len(set(contact_labels)) != 4:
        raise SchemaViolation(f"{manifest_path}: need exactly 4 distinct contact labels")

    plate_map = _require(doc, "plate_map", manifest_path)
    plate_contact_labels = []
    for i in range(1, 5):
        label = plate_map.get(f"f{i}") if isinstance(plate_map, dict) else None
        if label not in contact_labels:
            raise SchemaViolation(
                f"{manifest_path}: plate_map must assign f{i} to one of the contacts"
            )
        plate_contact_labels.append(label)
    if len(set(plate_contact_labels)) != 4:
        raise SchemaViolation(f"{manifest_path}: plate_map must be a bijection")

    window_s = doc.get("window_s")
    if window_s is not None:
        try:
            window_s = float(window_s)
        except (TypeError, ValueError):
            raise SchemaViolation(f"{manifest_path}: window_s must be a number") from None
        if window_s <= 0:
            raise SchemaViolation(f"{manifest_path}: window_s must be positive")

    return Session(
        root=root,
        subject_sex=sex,
        total_mass_kg=total_mass,
        table=table,
        cluster_labels=cluster_labels,
        cluster_frames=cluster_trial.frames(),
        probed_points=probed_points,
        probing_frames=probing_frames,
        pelvis_cloud=pelvis_cloud,
        empty_forces=empty_forces,
        neutral=neutral,
        trials=trials,
        wheelchair_cluster=wc_cluster,
        wheel_left_label=wheel_left,
        wheel_right_label=wheel_right,
        contact_labels=contact_labels,
        plate_contact_labels=tuple(plate_contact_labels),
        window_s=window_s,
    )


def clusters_to_doc(body_clusters: Mapping[str, MarkerCluster]) -> dict:
    """Serialize calibrated clusters (markers and extended points, local
    coordinates) for the calibration summary."""
    return {
        "format_version": FORMAT_VERSION,
        "clusters": {
            name: {
                "markers": {l: p.tolist() for l, p in c.markers.items()},
                "extended_points": {
                    l: p.tolist() for l, p in c.extended_points.items()
                },
            }
            for name, c in body_clusters.items()
        },
    }


def clusters_from_doc(doc: Mapping) -> dict:
    if doc.get("format_version") != FORMAT_VERSION:
        raise SchemaViolation(
            f"unsupported cluster document format_version {doc.get('format_version')!r}"
        )
    out = {}
    for name, c in doc["clusters"].items():
        out[name] = MarkerCluster(
            name,
            {l: np.asarray(p, dtype=float) for l, p in c["markers"].items()},
            {l: np.asarray(p, dtype=float) for l, p in c["extended_points"].items()},
        )
    return out
