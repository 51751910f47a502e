"""Rigid marker clusters: definition, extension with virtual points,
per-frame tracking and the five-point pelvis cloud registration.

A cluster is a named set of markers whose mutual geometry is rigid. Its
local geometry is established once from static frames; afterwards any
global point captured while the cluster is visible can be stored in
cluster coordinates ("extended point") and reconstructed in every later
frame from the cluster pose alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import geometry
from .errors import (
    DegenerateGeometry,
    DuplicateLabel,
    FewerThanThreeCommonLabels,
    MarkerNeverVisible,
    TrackingFailed,
)
from .geometry import RigidTransform

PELVIS_CLOUD_LABELS = ("LASIS", "RASIS", "SYM", "LPSIS", "RPSIS")
ANTERIOR_PELVIS_LABELS = ("LASIS", "RASIS", "SYM")


@dataclass(frozen=True)
class Frame:
    """Markers visible at one instant; occluded markers are simply absent."""

    time: float
    markers: Mapping[str, np.ndarray]

    def __post_init__(self):
        pts = {str(k): geometry.as_point(v, name=k) for k, v in self.markers.items()}
        object.__setattr__(self, "markers", pts)


@dataclass(frozen=True)
class MarkerTrial:
    """Marker trajectories of one acquisition as dense arrays.

    ``positions`` is (T, M, 3) with NaN rows marking occlusions; ``labels``
    gives the column order. This is the bulk representation used by the
    batched tracking path; ``frame(i)`` converts one row back to a Frame.
    """

    times: np.ndarray
    labels: tuple
    positions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.positions, dtype=float)
        if p.shape != (t.shape[0], len(self.labels), 3):
            raise ValueError("positions must be (T, M, 3) matching times and labels")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "positions", p)

    @classmethod
    def from_frames(cls, frames: Sequence[Frame]) -> "MarkerTrial":
        labels = []
        for f in frames:
            for l in f.markers:
                if l not in labels:
                    labels.append(l)
        pos = np.full((len(frames), len(labels), 3), np.nan)
        for i, f in enumerate(frames):
            for j, l in enumerate(labels):
                if l in f.markers:
                    pos[i, j] = f.markers[l]
        return cls(np.array([f.time for f in frames]), tuple(labels), pos)

    @property
    def n_frames(self) -> int:
        return len(self.times)

    def frame(self, i: int) -> Frame:
        row = self.positions[i]
        markers = {
            l: row[j]
            for j, l in enumerate(self.labels)
            if np.all(np.isfinite(row[j]))
        }
        return Frame(float(self.times[i]), markers)

    def frames(self) -> list:
        return [self.frame(i) for i in range(self.n_frames)]

    def get(self, label: str) -> np.ndarray | None:
        """Trajectory (T,3) of one marker, or None if the label is unknown."""
        if label not in self.labels:
            return None
        return self.positions[:, self.labels.index(label), :]

    def frame_at(self, time: float, tol: float = 1e-6) -> Frame:
        i = int(np.argmin(np.abs(self.times - time)))
        if abs(self.times[i] - time) > tol:
            raise TrackingFailed(f"no frame within {tol} s of t={time}")
        return self.frame(i)


@dataclass(frozen=True)
class MarkerCluster:
    """A rigid cluster: marker geometry plus extended virtual points, both
    in cluster-local coordinates (centroid origin, principal axes)."""

    name: str
    markers: Mapping[str, np.ndarray]
    extended_points: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        markers = {str(k): geometry.as_point(v, k) for k, v in self.markers.items()}
        extended = {
            str(k): geometry.as_point(v, k) for k, v in self.extended_points.items()
        }
        if len(markers) < 3:
            raise DegenerateGeometry(
                f"cluster {self.name!r} needs at least 3 markers, has {len(markers)}"
            )
        overlap = set(markers) & set(extended)
        if overlap:
            raise DuplicateLabel(
                f"cluster {self.name!r}: labels in both marker and extended sets: "
                f"{sorted(overlap)}"
            )
        coords = np.array(list(markers.values()))
        geometry._check_planar_rank(coords - coords.mean(axis=0), "cluster marker")
        object.__setattr__(self, "markers", markers)
        object.__setattr__(self, "extended_points", extended)

    def all_points(self) -> dict:
        return {**self.markers, **self.extended_points}

    def with_local_point(self, label: str, local: np.ndarray) -> "MarkerCluster":
        """New cluster with one more extended point given in local coordinates."""
        if label in self.markers or label in self.extended_points:
            raise DuplicateLabel(f"cluster {self.name!r} already has {label!r}")
        extended = dict(self.extended_points)
        extended[label] = geometry.as_point(local, label)
        return replace(self, extended_points=extended)


def _canonical_local(points: Mapping[str, np.ndarray]) -> dict:
    """Express points in a canonical frame: centroid origin, principal axes.

    Axis signs are normalized (largest component positive, then determinant
    fixed on the last axis) so the result is deterministic.
    """
    labels = list(points)
    coords = np.array([points[l] for l in labels])
    centred = coords - coords.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=True)
    v = vt.T
    for k in range(3):
        i = int(np.argmax(np.abs(v[:, k])))
        if v[i, k] < 0:
            v[:, k] = -v[:, k]
    if np.linalg.det(v) < 0:
        v[:, 2] = -v[:, 2]
    local = centred @ v
    return {l: local[i] for i, l in enumerate(labels)}


def define_cluster(
    name: str, marker_labels: Sequence[str], static_frames: Sequence[Frame]
) -> MarkerCluster:
    """Establish a cluster's local geometry from static frames.

    Frames are rigidly aligned onto the best-populated frame before the
    per-marker averaging, so the definition is invariant to any rigid motion
    of the cluster between frames.
    """
    marker_labels = list(marker_labels)
    if len(set(marker_labels)) != len(marker_labels):
        raise DuplicateLabel(f"cluster {name!r}: repeated marker labels")

    def visible(frame: Frame) -> list:
        return [l for l in marker_labels if l in frame.markers]

    usable = [(f, visible(f)) for f in static_frames]
    usable = [(f, v) for f, v in usable if len(v) >= 3]
    if not usable:
        raise MarkerNeverVisible(
            f"cluster {name!r}: no static frame shows 3 or more of its markers"
        )
    ref_frame, ref_visible = max(usable, key=lambda fv: len(fv[1]))
    ref_points = {l: ref_frame.markers[l] for l in ref_visible}

    sums: dict = {l: np.zeros(3) for l in marker_labels}
    counts: dict = {l: 0 for l in marker_labels}
    for f, vis in usable:
        common = [l for l in vis if l in ref_points]
        if len(common) < 3:
            continue
        pose, _ = geometry.rigid_fit(
            {l: f.markers[l] for l in common}, {l: ref_points[l] for l in common}
        )
        for l in vis:
            sums[l] += pose.apply(f.markers[l])
            counts[l] += 1

    missing = [l for l in marker_labels if counts[l] == 0]
    if missing:
        raise MarkerNeverVisible(
            f"cluster {name!r}: markers never visible in a trackable frame: {missing}"
        )
    mean_points = {l: sums[l] / counts[l] for l in marker_labels}
    coords = np.array(list(mean_points.values()))
    centred = coords - coords.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[1] < geometry.COLLINEARITY_RTOL * max(sv[0], 1e-300):
        raise DegenerateGeometry(f"cluster {name!r}: averaged markers are collinear")
    return MarkerCluster(name, _canonical_local(mean_points))


def track_cluster(cluster: MarkerCluster, frame: Frame) -> tuple[RigidTransform, float]:
    """Pose of a cluster in one frame from its visible markers."""
    try:
        return geometry.rigid_fit(cluster.markers, frame.markers)
    except FewerThanThreeCommonLabels as exc:
        raise TrackingFailed(
            f"cluster {cluster.name!r} at t={frame.time}: {exc}"
        ) from exc


def extend_cluster(
    cluster: MarkerCluster, label: str, global_point, reference_frame: Frame
) -> MarkerCluster:
    """Store a global point in cluster coordinates using the frame's pose."""
    if label in cluster.markers or label in cluster.extended_points:
        raise DuplicateLabel(f"cluster {cluster.name!r} already has {label!r}")
    pose, _ = track_cluster(cluster, reference_frame)
    local = pose.inverse().apply(geometry.as_point(global_point, label))
    return cluster.with_local_point(label, local)


def track_and_reconstruct(
    cluster: MarkerCluster, frame: Frame
) -> tuple[RigidTransform, dict, float]:
    """Track a cluster and map all its points (markers and extended) to
    global coordinates through the pose."""
    pose, rms = track_cluster(cluster, frame)
    points = {l: pose.apply(p) for l, p in cluster.all_points().items()}
    return pose, points, rms


@dataclass(frozen=True)
class TrialPoses:
    """Per-frame cluster poses over a trial: rotations (T,3,3), translations
    (T,3) and fit residuals (T,)."""

    rotations: np.ndarray
    translations: np.ndarray
    rms: np.ndarray

    def reconstruct(self, local) -> np.ndarray:
        """Global trajectory (T,3) of a point given in cluster coordinates."""
        local = geometry.as_point(local, "local")
        return np.einsum("tij,j->ti", self.rotations, local) + self.translations

    def to_local(self, global_points: np.ndarray) -> np.ndarray:
        """Cluster-local coordinates (T,3) of per-frame global points (T,3)."""
        g = np.asarray(global_points, dtype=float)
        return np.einsum("tji,tj->ti", self.rotations, g - self.translations)

    def pose(self, i: int) -> RigidTransform:
        return RigidTransform(self.rotations[i], self.translations[i])


def track_trial(cluster: MarkerCluster, trial: MarkerTrial) -> TrialPoses:
    """Track a cluster across all frames of a trial.

    Frames are grouped by their marker-visibility pattern so each group runs
    through one batched fit; a frame with fewer than three visible markers
    raises TrackingFailed.
    """
    labels = [l for l in cluster.markers if l in trial.labels]
    if len(labels) < 3:
        raise TrackingFailed(
            f"cluster {cluster.name!r}: trial carries only {len(labels)} of its markers"
        )
    local = np.array([cluster.markers[l] for l in labels])
    idx = [trial.labels.index(l) for l in labels]
    observed = trial.positions[:, idx, :]
    visible = np.all(np.isfinite(observed), axis=2)

    n = trial.n_frames
    rotations = np.empty((n, 3, 3))
    translations = np.empty((n, 3))
    rms = np.empty(n)
    for pattern in np.unique(visible, axis=0):
        rows = np.nonzero(np.all(visible == pattern, axis=1))[0]
        if int(pattern.sum()) < 3:
            t_bad = trial.times[rows[0]]
            raise TrackingFailed(
                f"cluster {cluster.name!r} at t={t_bad}: only "
                f"{int(pattern.sum())} markers visible"
            )
        r, t, e = geometry.fit_poses(local[pattern], observed[rows][:, pattern, :])
        rotations[rows] = r
        translations[rows] = t
        rms[rows] = e
    return TrialPoses(rotations, translations, rms)


@dataclass(frozen=True)
class PelvisCloud:
    """The five pelvis landmarks probed with the subject on the fore-part of
    the seat: LASIS, RASIS, SYM, LPSIS, RPSIS in global coordinates."""

    points: Mapping[str, np.ndarray]

    def __post_init__(self):
        pts = {str(k): geometry.as_point(v, k) for k, v in self.points.items()}
        if set(pts) != set(PELVIS_CLOUD_LABELS):
            raise DegenerateGeometry(
                f"pelvis cloud must contain exactly {PELVIS_CLOUD_LABELS}, "
                f"got {sorted(pts)}"
            )
        _require_noncollinear(
            pts["LASIS"], pts["RASIS"], pts["SYM"], "pelvis cloud anterior"
        )
        object.__setattr__(self, "points", pts)

    def __getitem__(self, label: str) -> np.ndarray:
        return self.points[label]


def _require_noncollinear(a, b, c, what: str, min_sin: float = 1e-6) -> None:
    u = b - a
    v = c - a
    denom = np.linalg.norm(u) * np.linalg.norm(v)
    if denom < 1e-15 or np.linalg.norm(np.cross(u, v)) < min_sin * denom:
        raise DegenerateGeometry(f"{what} points are collinear or coincident")


def register_pelvis_cloud(
    cloud: PelvisCloud, observed_lasis, observed_rasis, observed_sym
) -> tuple[np.ndarray, np.ndarray, float]:
    """Carry the cloud's posterior landmarks into the observed pelvis pose.

    Finds the rigid transform best mapping the cloud's anterior triplet onto
    the observed triplet and returns the transformed LPSIS and RPSIS plus
    the three-point fit residual. With exact inputs the fit is exactly
    determined; a nonzero residual signals inconsistent probing.
    """
    observed = {
        "LASIS": geometry.as_point(observed_lasis, "observed_lasis"),
        "RASIS": geometry.as_point(observed_rasis, "observed_rasis"),
        "SYM": geometry.as_point(observed_sym, "observed_sym"),
    }
    _require_noncollinear(
        observed["LASIS"], observed["RASIS"], observed["SYM"], "observed anterior"
    )
    source = {l: cloud[l] for l in ANTERIOR_PELVIS_LABELS}
    pose, rms = geometry.rigid_fit(source, observed)
    return pose.apply(cloud["LPSIS"]), pose.apply(cloud["RPSIS"]), rms
