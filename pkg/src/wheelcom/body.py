"""Fifteen-segment body model bound to marker clusters.

Calibration runs the six-step sequence that turns raw captures into a
CalibratedBody: probed landmarks are stored in their clusters, the
posterior iliac spines are recovered by registering the five-point pelvis
cloud, the lumbar/hip/cervical/shoulder joint centres come from the
regression rules, and the extremity joint centres are landmark midpoints.
Pelvis and lower-body points live in the wheelchair cluster; the upper
body tracks its own clusters.

Per frame, every segment frame is rebuilt from reconstructed points, each
segment's calibrated local CoM is placed in space, and the mass-weighted
whole-body CoM is expressed in the wheelchair coordinate system (origin on
the ground between the rear wheels, x forward, y up, z right).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import anthropometry, clusters, geometry
from .anthropometry import AnthropometricTable, LcsRecipe
from .clusters import Frame, MarkerCluster, MarkerTrial, PelvisCloud, TrialPoses
from .errors import (
    CalibrationError,
    DegenerateAxis,
    DegenerateGeometry,
    EmptyWindow,
    TrackingFailed,
    WheelcomError,
)
from .geometry import RigidTransform

# Joint centres defined as midpoints of probed landmark pairs; both
# landmarks always live in the same cluster, so the midpoint is taken in
# cluster coordinates directly (midpoints commute with rigid transforms).
MIDPOINT_JOINT_CENTRES = {
    "LElbowJC": ("LElbowLat", "LElbowMed"),
    "RElbowJC": ("RElbowLat", "RElbowMed"),
    "LWristJC": ("LWristUln", "LWristRad"),
    "RWristJC": ("RWristUln", "RWristRad"),
    "LKneeJC": ("LKneeLat", "LKneeMed"),
    "RKneeJC": ("RKneeLat", "RKneeMed"),
    "LAnkleJC": ("LAnkleLat", "LAnkleMed"),
    "RAnkleJC": ("RAnkleLat", "RAnkleMed"),
}


@dataclass(frozen=True)
class Subject:
    sex: str
    total_mass_kg: float

    def __post_init__(self):
        if self.sex not in anthropometry.SEXES:
            raise WheelcomError(f"sex must be one of {anthropometry.SEXES}")
        if not (np.isfinite(self.total_mass_kg) and self.total_mass_kg > 0):
            raise WheelcomError(f"total mass must be positive, got {self.total_mass_kg}")


@dataclass(frozen=True)
class WheelchairGeometry:
    """Probed wheelchair geometry in wheelchair-cluster coordinates."""

    cluster: str
    rear_wheel_left: np.ndarray
    rear_wheel_right: np.ndarray
    contacts: np.ndarray

    def __post_init__(self):
        left = geometry.as_point(self.rear_wheel_left, "rear_wheel_left")
        right = geometry.as_point(self.rear_wheel_right, "rear_wheel_right")
        contacts = np.asarray(self.contacts, dtype=float)
        if np.linalg.norm(right - left) < 1e-9:
            raise DegenerateGeometry("rear wheel centres are coincident")
        if contacts.shape != (4, 3) or not np.all(np.isfinite(contacts)):
            raise DegenerateGeometry("need exactly 4 finite contact points")
        geometry._check_planar_rank(contacts - contacts.mean(axis=0), "contact")
        object.__setattr__(self, "rear_wheel_left", left)
        object.__setattr__(self, "rear_wheel_right", right)
        object.__setattr__(self, "contacts", contacts)


@dataclass(frozen=True)
class SegmentDefinition:
    """One calibrated segment: its frame recipe, mass, measured length and
    metric CoM offset in the segment frame."""

    segment_id: str
    recipe: LcsRecipe
    mass_kg: float
    length_m: float
    com_local_m: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "com_local_m", geometry.as_point(self.com_local_m, "com_local_m")
        )


@dataclass(frozen=True)
class ComSample:
    """Whole-body CoM at one instant, in wheelchair coordinates."""

    time: float
    com: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "com", geometry.as_point(self.com, "com"))

    @property
    def ground_projection(self) -> tuple[float, float]:
        """(AP, ML) = (x, z); the wheelchair frame drops y onto the ground."""
        return float(self.com[0]), float(self.com[2])


@dataclass(frozen=True)
class ComTrajectory:
    """Per-frame CoM samples of one trial, in wheelchair coordinates."""

    times: np.ndarray
    com: np.ndarray

    @property
    def ground(self) -> np.ndarray:
        """(T,2) array of (AP, ML) ground projections."""
        return self.com[:, [0, 2]]

    def samples(self) -> list:
        return [ComSample(float(t), c) for t, c in zip(self.times, self.com)]


@dataclass(frozen=True)
class CalibratedBody:
    """Output of the six-step calibration: extended clusters plus the
    fifteen segment definitions. Immutable; all computations are pure."""

    subject: Subject
    body_clusters: Mapping[str, MarkerCluster]
    segments: tuple

    def __post_init__(self):
        total = math.fsum(s.mass_kg for s in self.segments)
        expected = self.subject.total_mass_kg
        if abs(total - expected) > 1e-12 * expected:
            raise CalibrationError(
                f"segment masses sum to {total!r}, expected {expected!r}"
            )
        labels = [l for c in self.body_clusters.values() for l in c.all_points()]
        dupes = {l for l in labels if labels.count(l) > 1}
        if dupes:
            raise CalibrationError(
                f"labels present in more than one cluster: {sorted(dupes)}"
            )

    def cluster_of(self, label: str) -> str:
        for name, c in self.body_clusters.items():
            if label in c.markers or label in c.extended_points:
                return name
        raise TrackingFailed(f"label {label!r} not found in any cluster")

    def segment(self, segment_id: str) -> SegmentDefinition:
        for s in self.segments:
            if s.segment_id == segment_id:
                return s
        raise WheelcomError(f"unknown segment {segment_id!r}")


@dataclass(frozen=True)
class ProbedPoint:
    """A landmark captured by probing: global position at a capture time,
    destined for one cluster."""

    label: str
    cluster: str
    time: float
    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "position", geometry.as_point(self.position, self.label)
        )


@dataclass(frozen=True)
class CalibrationRecordings:
    """Everything the calibration consumes, already parsed."""

    cluster_labels: Mapping[str, Sequence[str]]
    cluster_frames: Sequence[Frame]
    probed_points: Sequence[ProbedPoint]
    probing_frames: MarkerTrial
    neutral_static: MarkerTrial


def wheelchair_lcs(geom: WheelchairGeometry, wheelchair_pose: RigidTransform) -> RigidTransform:
    """Wheelchair coordinate system for one cluster pose.

    z runs along the left-to-right rear-wheel axis projected to the
    horizontal, y is global up, x = y cross z; the origin is the rear-wheel
    midpoint dropped to the ground plane (y = 0).
    """
    left = wheelchair_pose.apply(geom.rear_wheel_left)
    right = wheelchair_pose.apply(geom.rear_wheel_right)
    z = right - left
    z[1] = 0.0
    norm = np.linalg.norm(z)
    if norm < 1e-9:
        raise DegenerateGeometry("rear wheel axis is vertical; wheelchair frame undefined")
    z = z / norm
    y = np.array([0.0, 1.0, 0.0])
    x = np.cross(y, z)
    rotation = np.column_stack([x, y, z])
    origin = 0.5 * (left + right)
    origin[1] = 0.0
    return RigidTransform(rotation, origin)


def _wheelchair_frames(
    geom: WheelchairGeometry, poses: TrialPoses
) -> tuple[np.ndarray, np.ndarray]:
    """Batched wheelchair LCS: (rotations (T,3,3), origins (T,3))."""
    left = poses.reconstruct(geom.rear_wheel_left)
    right = poses.reconstruct(geom.rear_wheel_right)
    z = right - left
    z[:, 1] = 0.0
    norm = np.linalg.norm(z, axis=1)
    if np.any(norm < 1e-9):
        raise DegenerateGeometry("rear wheel axis is vertical in some frame")
    z = z / norm[:, None]
    y = np.zeros_like(z)
    y[:, 1] = 1.0
    x = np.cross(y, z)
    rot = np.stack([x, y, z], axis=2)
    origin = 0.5 * (left + right)
    origin[:, 1] = 0.0
    return rot, origin


def resolve_reference(ref: str, lookup: Callable[[str], np.ndarray]) -> np.ndarray:
    """Resolve a recipe point reference: a label or ``midpoint(A,B)``."""
    if ref.startswith("midpoint(") and ref.endswith(")"):
        inner = ref[len("midpoint(") : -1]
        parts = [p.strip() for p in inner.split(",")]
        if len(parts) != 2:
            raise WheelcomError(f"bad midpoint reference {ref!r}")
        return 0.5 * (lookup(parts[0]) + lookup(parts[1]))
    return lookup(ref)


class _TrialReconstruction:
    """Shared per-trial machinery: cluster poses plus lazy point trajectories."""

    def __init__(self, body_clusters: Mapping[str, MarkerCluster], trial: MarkerTrial):
        self.trial = trial
        self.poses = {
            name: clusters.track_trial(c, trial) for name, c in body_clusters.items()
        }
        self._clusters = body_clusters
        self._cache: dict = {}
        self._owner = {}
        for name, c in body_clusters.items():
            for label in c.all_points():
                self._owner[label] = name

    def point(self, label: str) -> np.ndarray:
        """Global trajectory (T,3) of a labelled point.

        Cluster points are reconstructed through the cluster pose; labels
        outside every cluster (e.g. metacarpal markers) are read from the
        trial and must be visible in all frames.
        """
        if label in self._cache:
            return self._cache[label]
        owner = self._owner.get(label)
        if owner is not None:
            local = self._clusters[owner].all_points()[label]
            traj = self.poses[owner].reconstruct(local)
        else:
            traj = self.trial.get(label)
            if traj is None:
                raise TrackingFailed(f"point {label!r} is not available in this trial")
            bad = ~np.all(np.isfinite(traj), axis=1)
            if np.any(bad):
                t_bad = self.trial.times[int(np.nonzero(bad)[0][0])]
                raise TrackingFailed(f"marker {label!r} occluded at t={t_bad}")
        self._cache[label] = traj
        return traj

    def reference(self, ref: str) -> np.ndarray:
        return resolve_reference(ref, self.point)


def reconstruct_points(body_clusters: Mapping[str, MarkerCluster], frame: Frame) -> dict:
    """All cluster points mapped to global coordinates in one frame, plus
    the frame's own markers for labels outside every cluster."""
    points: dict = {}
    for c in body_clusters.values():
        _, recon, _ = clusters.track_and_reconstruct(c, frame)
        points.update(recon)
    for label, pos in frame.markers.items():
        points.setdefault(label, pos)
    return points


def segment_com(seg: SegmentDefinition, reference: Callable[[str], np.ndarray]) -> np.ndarray:
    """Global CoM trajectory (T,3) of one segment.

    ``reference`` resolves a recipe point reference to a (T,3) trajectory;
    both the tracked pipeline and the synthetic generator feed this with
    their own point sources.
    """
    r = seg.recipe
    origin = reference(r.origin)
    axis = reference(r.axis_to) - reference(r.axis_from)
    plane = reference(r.plane_to) - reference(r.plane_from)
    try:
        rot, org = geometry.frames_from_vectors(origin, axis, plane, r.roles)
    except DegenerateAxis as exc:
        raise DegenerateAxis(f"segment {seg.segment_id!r}: {exc}") from exc
    return org + np.einsum("tij,j->ti", rot, seg.com_local_m)


def build_segment_definitions(
    reference: Callable[[str], np.ndarray],
    table: AnthropometricTable,
    subject: Subject,
) -> tuple:
    """Measure segment lengths through ``reference`` and freeze the segment
    definitions: metric CoM offsets and masses normalized to sum exactly to
    the subject's total mass."""
    fractions = [
        table.segment(s, subject.sex).mass_fraction for s in anthropometry.SEGMENTS
    ]
    fraction_sum = math.fsum(fractions)
    segments = []
    for segment_id, fraction in zip(anthropometry.SEGMENTS, fractions):
        recipe = table.recipe(segment_id)
        end_a = reference(recipe.length_from)
        end_b = reference(recipe.length_to)
        length = float(np.mean(np.linalg.norm(end_b - end_a, axis=1)))
        if length < 1e-9:
            raise DegenerateGeometry(
                f"segment {segment_id!r} has zero length between "
                f"{recipe.length_from!r} and {recipe.length_to!r}"
            )
        params = table.segment(segment_id, subject.sex)
        segments.append(
            SegmentDefinition(
                segment_id=segment_id,
                recipe=recipe,
                mass_kg=subject.total_mass_kg * fraction / fraction_sum,
                length_m=length,
                com_local_m=length * params.com_local,
            )
        )
    return tuple(segments)


def com_trajectory(
    body: CalibratedBody, trial: MarkerTrial, geom: WheelchairGeometry
) -> ComTrajectory:
    """Whole-body CoM per frame of a trial, in wheelchair coordinates."""
    total = math.fsum(s.mass_kg for s in body.segments)
    if abs(total - body.subject.total_mass_kg) > 1e-12 * body.subject.total_mass_kg:
        raise CalibrationError("segment masses no longer sum to the subject mass")

    recon = _TrialReconstruction(body.body_clusters, trial)
    com = np.zeros((trial.n_frames, 3))
    for seg in body.segments:
        com += seg.mass_kg * segment_com(seg, recon.reference)
    com /= total

    wc_rot, wc_origin = _wheelchair_frames(geom, recon.poses[geom.cluster])
    local = np.einsum("tji,tj->ti", wc_rot, com - wc_origin)
    return ComTrajectory(trial.times.copy(), local)


def com_frame(body: CalibratedBody, frame: Frame, geom: WheelchairGeometry) -> ComSample:
    """Whole-body CoM for a single frame."""
    trial = MarkerTrial(
        np.array([frame.time]),
        tuple(frame.markers),
        np.array([[frame.markers[l] for l in frame.markers]], dtype=float),
    )
    traj = com_trajectory(body, trial, geom)
    return ComSample(float(frame.time), traj.com[0])


def average_static(samples: Sequence[ComSample], window: tuple) -> ComSample:
    """Component-wise mean CoM over samples inside [t0, t1]."""
    t0, t1 = float(window[0]), float(window[1])
    selected = [s for s in samples if t0 <= s.time <= t1]
    if not selected:
        raise EmptyWindow(f"no CoM samples inside window [{t0}, {t1}]")
    mean = np.mean([s.com for s in selected], axis=0)
    return ComSample(0.5 * (t0 + t1), mean)


def wheelchair_geometry_from_cluster(
    cluster: MarkerCluster,
    wheel_left_label: str,
    wheel_right_label: str,
    contact_labels: Sequence[str],
) -> WheelchairGeometry:
    """Assemble the wheelchair geometry from probed points stored in the
    wheelchair cluster."""
    points = cluster.all_points()
    try:
        left = points[wheel_left_label]
        right = points[wheel_right_label]
        contacts = np.array([points[l] for l in contact_labels])
    except KeyError as exc:
        raise CalibrationError(
            f"wheelchair geometry: point {exc.args[0]!r} missing from cluster "
            f"{cluster.name!r}"
        ) from exc
    return WheelchairGeometry(cluster.name, left, right, contacts)


def contacts_in_wheelchair(geom: WheelchairGeometry, poses: TrialPoses) -> np.ndarray:
    """Contact coordinates (4,3) in the wheelchair frame, averaged over a
    trial. Constant up to noise since contacts and frame share the cluster."""
    rot, origin = _wheelchair_frames(geom, poses)
    out = np.empty((4, 3))
    for i in range(4):
        g = poses.reconstruct(geom.contacts[i])
        out[i] = np.mean(np.einsum("tji,tj->ti", rot, g - origin), axis=0)
    return out


def _cluster_holding(body_clusters: Mapping[str, MarkerCluster], label: str) -> str:
    owners = [
        name
        for name, c in body_clusters.items()
        if label in c.markers or label in c.extended_points
    ]
    if len(owners) != 1:
        raise CalibrationError(
            f"label {label!r} must exist in exactly one cluster, found in {owners}"
        )
    return owners[0]


def calibrate_body(
    recordings: CalibrationRecordings,
    pelvis_cloud: PelvisCloud | None,
    table: AnthropometricTable,
    subject: Subject,
) -> CalibratedBody:
    """Run the six-step calibration and freeze the body model.

    Steps, in order: (1) store probed points in their clusters; (2) recover
    LPSIS/RPSIS by registering the pelvis cloud onto the seated anterior
    landmarks; (3) lumbar and hip joint centres into the pelvis-carrying
    cluster; (4) cervical joint centre into the C7 cluster; (5) shoulder
    joint centres into the upper-arm clusters; (6) midpoint joint centres
    for elbows, wrists, knees and ankles. Segment lengths are then measured
    over the neutral static trial and frozen. Any failure is re-raised
    annotated with the step it happened in.
    """

    def fail(step: str, exc: Exception):
        raise CalibrationError(f"{step}: {exc}") from exc

    # Cluster local geometry from the static capture.
    body_clusters: dict = {}
    try:
        for name, labels in recordings.cluster_labels.items():
            body_clusters[name] = clusters.define_cluster(
                name, labels, recordings.cluster_frames
            )
    except WheelcomError as exc:
        fail("cluster definition", exc)

    # Step 1: probed points, expressed in cluster coordinates at probing time.
    try:
        for p in recordings.probed_points:
            if p.cluster not in body_clusters:
                raise TrackingFailed(f"probed point {p.label!r}: unknown cluster {p.cluster!r}")
            ref = recordings.probing_frames.frame_at(p.time)
            body_clusters[p.cluster] = clusters.extend_cluster(
                body_clusters[p.cluster], p.label, p.position, ref
            )
    except WheelcomError as exc:
        fail("step 1 (probed points)", exc)

    # Poses over the neutral static trial; extending clusters afterwards does
    # not change them because poses come from markers only.
    static = recordings.neutral_static
    try:
        recon = _TrialReconstruction(body_clusters, static)
    except WheelcomError as exc:
        fail("step 1 (static tracking)", exc)

    def add_mean_local(cluster_name: str, label: str, traj: np.ndarray):
        local = recon.poses[cluster_name].to_local(traj).mean(axis=0)
        body_clusters[cluster_name] = body_clusters[cluster_name].with_local_point(
            label, local
        )
        recon._owner[label] = cluster_name

    # Step 2: posterior iliac spines from the pelvis cloud.
    try:
        if pelvis_cloud is None:
            raise CalibrationError("pelvis-cloud capture missing")
        pelvis_cluster = _cluster_holding(body_clusters, "LASIS")
        lasis = recon.point("LASIS")
        rasis = recon.point("RASIS")
        sym = recon.point("SYM")
        n = static.n_frames
        lpsis = np.empty((n, 3))
        rpsis = np.empty((n, 3))
        for i in range(n):
            lpsis[i], rpsis[i], _ = clusters.register_pelvis_cloud(
                pelvis_cloud, lasis[i], rasis[i], sym[i]
            )
        add_mean_local(pelvis_cluster, "LPSIS", lpsis)
        add_mean_local(pelvis_cluster, "RPSIS", rpsis)
    except WheelcomError as exc:
        fail("step 2 (posterior iliac spines)", exc)

    # Step 3: lumbar and hip joint centres.
    try:
        params = table.regression_for(subject.sex)
        n = static.n_frames
        lumbar = np.empty((n, 3))
        lhip = np.empty((n, 3))
        rhip = np.empty((n, 3))
        for i in range(n):
            lumbar[i] = anthropometry.lumbar_joint_centre(
                lasis[i], rasis[i], sym[i], params
            )
            lhip[i], rhip[i] = anthropometry.hip_joint_centres(
                lasis[i], rasis[i], sym[i], params
            )
        add_mean_local(pelvis_cluster, "LumbarJC", lumbar)
        add_mean_local(pelvis_cluster, "LHipJC", lhip)
        add_mean_local(pelvis_cluster, "RHipJC", rhip)
    except WheelcomError as exc:
        fail("step 3 (lumbar and hip joint centres)", exc)

    # Step 4: cervical joint centre.
    try:
        thorax_cluster = _cluster_holding(body_clusters, "C7")
        c7 = recon.point("C7")
        sup = recon.point("Suprasternale")
        lumbar_traj = recon.point("LumbarJC")
        cervical = np.empty((static.n_frames, 3))
        for i in range(static.n_frames):
            cervical[i] = anthropometry.cervical_joint_centre(
                c7[i], sup[i], lumbar_traj[i], params
            )
        add_mean_local(thorax_cluster, "CervicalJC", cervical)
    except WheelcomError as exc:
        fail("step 4 (cervical joint centre)", exc)

    # Step 5: shoulder joint centres, straight down from the acromions. The
    # wheelchair frame keeps y global-up, so its negative vertical is the
    # global down direction.
    try:
        left_arm = _cluster_holding(body_clusters, "LElbowLat")
        right_arm = _cluster_holding(body_clusters, "RElbowLat")
        lac = recon.point("LAcromion")
        rac = recon.point("RAcromion")
        down = np.array([0.0, -1.0, 0.0])
        lsjc = np.empty((static.n_frames, 3))
        rsjc = np.empty((static.n_frames, 3))
        for i in range(static.n_frames):
            lsjc[i], rsjc[i] = anthropometry.shoulder_joint_centres(
                lac[i], rac[i], down, params
            )
        add_mean_local(left_arm, "LShoulderJC", lsjc)
        add_mean_local(right_arm, "RShoulderJC", rsjc)
    except WheelcomError as exc:
        fail("step 5 (shoulder joint centres)", exc)

    # Step 6: extremity joint centres as midpoints of their landmark pairs,
    # taken directly in cluster coordinates.
    try:
        for label, (a, b) in MIDPOINT_JOINT_CENTRES.items():
            owner_a = _cluster_holding(body_clusters, a)
            owner_b = _cluster_holding(body_clusters, b)
            if owner_a != owner_b:
                raise CalibrationError(
                    f"{label}: landmarks {a!r} and {b!r} live in different clusters"
                )
            points = body_clusters[owner_a].all_points()
            body_clusters[owner_a] = body_clusters[owner_a].with_local_point(
                label, geometry.midpoint(points[a], points[b])
            )
            recon._owner[label] = owner_a
    except WheelcomError as exc:
        fail("step 6 (extremity joint centres)", exc)

    # Segment assembly: measure lengths in the static trial, freeze metric
    # CoM offsets, and normalize masses so they sum exactly to the subject's.
    try:
        segments = build_segment_definitions(recon.reference, table, subject)
    except WheelcomError as exc:
        fail("segment assembly", exc)

    return CalibratedBody(subject, body_clusters, segments)
