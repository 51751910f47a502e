"""Deterministic synthetic session generator.

Builds a seated 15-segment skeleton in wheelchair coordinates, poses it
through a configurable set of static postures, attaches rigid marker
clusters to the moving segments, and emits a complete session (calibration
captures, pelvis cloud, empty-wheelchair record, neutral static and
posture trials) in exactly the formats the pipeline reads. Ground truth is
recorded before any noise is added: the true whole-body CoM per trial, and
plate forces distributed over the four wheel contacts so that the CoP
equation lands exactly on the CoM ground projection.

Everything is a pure function of the scenario, so one seed always produces
byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import anthropometry, body, session as session_io
from .body import Subject
from .errors import InfeasibleCoM, WheelcomError
from .forceplate import GRAVITY_M_S2
from .geometry import RigidTransform, axis_angle_rotation


@dataclass(frozen=True)
class PostureSpec:
    """Joint configuration of one static posture, degrees.

    Positive trunk flexion leans forward, positive trunk lateral leans to
    the subject's left. Shoulder flexion raises the arm forward, abduction
    raises it sideways away from the trunk.
    """

    label: str
    trunk_flexion_deg: float = 0.0
    trunk_lateral_deg: float = 0.0
    head_flexion_deg: float = 0.0
    l_shoulder_flexion_deg: float = 0.0
    r_shoulder_flexion_deg: float = 0.0
    l_shoulder_abduction_deg: float = 0.0
    r_shoulder_abduction_deg: float = 0.0
    l_elbow_flexion_deg: float = 0.0
    r_elbow_flexion_deg: float = 0.0


DEFAULT_POSTURES = (
    PostureSpec("full extension", trunk_flexion_deg=-25.0),
    PostureSpec("arms backward", l_shoulder_flexion_deg=-35.0, r_shoulder_flexion_deg=-35.0),
    PostureSpec("neutral"),
    PostureSpec("arms forward", l_shoulder_flexion_deg=65.0, r_shoulder_flexion_deg=65.0),
    PostureSpec(
        "front reach",
        trunk_flexion_deg=30.0,
        head_flexion_deg=10.0,
        l_shoulder_flexion_deg=85.0,
        r_shoulder_flexion_deg=85.0,
        l_elbow_flexion_deg=5.0,
        r_elbow_flexion_deg=5.0,
    ),
    PostureSpec(
        "left reach",
        trunk_lateral_deg=20.0,
        l_shoulder_abduction_deg=55.0,
        l_elbow_flexion_deg=10.0,
    ),
    PostureSpec("left arm raised", l_shoulder_abduction_deg=150.0),
    PostureSpec("right arm raised", r_shoulder_abduction_deg=150.0),
    PostureSpec(
        "right reach",
        trunk_lateral_deg=-20.0,
        r_shoulder_abduction_deg=55.0,
        r_elbow_flexion_deg=10.0,
    ),
)


# -- wheelchair layout (wheelchair frame: x forward, y up, z right) ----------

WHEEL_CENTRES = {
    "LWheelCentre": np.array([0.0, 0.30, -0.28]),
    "RWheelCentre": np.array([0.0, 0.30, 0.28]),
}
# Rear pair slightly behind the wheel axle, front casters trailing forward:
# the rectangle x in {-0.05, 0.45}, z in {-0.28, 0.28}.
CONTACTS = {
    "Contact1": np.array([-0.05, 0.0, -0.28]),
    "Contact2": np.array([-0.05, 0.0, 0.28]),
    "Contact3": np.array([0.45, 0.0, -0.28]),
    "Contact4": np.array([0.45, 0.0, 0.28]),
}
WHEELCHAIR_MARKERS = {
    "WC1": np.array([0.08, 0.55, -0.26]),
    "WC2": np.array([0.08, 0.55, 0.26]),
    "WC3": np.array([0.38, 0.47, 0.22]),
    "WC4": np.array([0.38, 0.47, -0.22]),
}


@dataclass(frozen=True)
class WheelchairLayout:
    """Probed wheelchair geometry and frame-marker layout, wheelchair frame."""

    wheel_centres: Mapping[str, np.ndarray]
    contacts: Mapping[str, np.ndarray]
    markers: Mapping[str, np.ndarray]
    com_xz: tuple = (0.08, 0.0)

    def contact_labels(self) -> list:
        return sorted(self.contacts)


DEFAULT_WHEELCHAIR = WheelchairLayout(WHEEL_CENTRES, CONTACTS, WHEELCHAIR_MARKERS)


def _plate_map(layout: WheelchairLayout) -> dict:
    # Deliberately not the identity so sessions exercise the manifest's
    # plate-to-contact map.
    labels = layout.contact_labels()
    order = (1, 0, 3, 2)
    return {f"f{i + 1}": labels[order[i]] for i in range(4)}


@dataclass(frozen=True)
class SyntheticScenario:
    """Full description of a synthetic data-collection session."""

    seed: int = 0
    sex: str = "female"
    total_mass_kg: float = 68.0
    wheelchair_mass_kg: float = 15.0
    segment_scales: Mapping[str, float] = field(default_factory=dict)
    postures: tuple = DEFAULT_POSTURES
    trials_per_posture: int = 3
    marker_noise_m: float = 0.0
    force_noise_n: float = 0.0
    trial_duration_s: float = 2.0
    marker_rate_hz: float = 120.0
    force_rate_hz: float = 1000.0
    posture_jitter_deg: float = 1.5
    wheelchair: WheelchairLayout = DEFAULT_WHEELCHAIR
    table: object = None  # None -> packaged synthetic table; or path / mapping

    def __post_init__(self):
        if self.marker_noise_m < 0 or self.force_noise_n < 0:
            raise WheelcomError("noise levels must be non-negative")
        if self.trials_per_posture < 1 or self.trial_duration_s <= 0:
            raise WheelcomError("invalid trial configuration")


@dataclass(frozen=True)
class TrialTruth:
    posture: str
    trial_index: int
    com_wheelchair: np.ndarray
    subject_forces_n: np.ndarray  # plate order f1..f4

    @property
    def ground_projection(self) -> tuple[float, float]:
        return float(self.com_wheelchair[0]), float(self.com_wheelchair[2])


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knew: per-trial CoM and forces, plus the neutral
    landmark map in laboratory coordinates."""

    total_mass_kg: float
    wheelchair_mass_kg: float
    contacts_wheelchair: np.ndarray  # (4,3), plate order f1..f4
    neutral_com_wheelchair: np.ndarray
    neutral_landmarks_global: Mapping[str, np.ndarray]
    trials: tuple


PELVIS_SHAPE = {
    "LASIS": np.array([0.0, 0.0, -0.115]),
    "RASIS": np.array([0.0, 0.0, 0.115]),
    "SYM": np.array([-0.02, -0.075, 0.002]),
    "LPSIS": np.array([-0.135, 0.015, -0.045]),
    "RPSIS": np.array([-0.135, 0.015, 0.045]),
}


def _rx(deg: float) -> np.ndarray:
    return axis_angle_rotation([1.0, 0.0, 0.0], math.radians(deg))


def _ry(deg: float) -> np.ndarray:
    return axis_angle_rotation([0.0, 1.0, 0.0], math.radians(deg))


def _rz(deg: float) -> np.ndarray:
    return axis_angle_rotation([0.0, 0.0, 1.0], math.radians(deg))


def _mirror(v: np.ndarray) -> np.ndarray:
    return v * np.array([1.0, 1.0, -1.0])


class _Skeleton:
    """Neutral-pose landmark and marker positions in wheelchair coordinates,
    with every point assigned to the kinematic chain that carries it."""

    def __init__(self, scenario: SyntheticScenario, table: anthropometry.AnthropometricTable):
        self.scenario = scenario
        s = dict(scenario.segment_scales)

        def scale(name):
            return float(s.get(name, 1.0))

        points: dict = {}
        chain: dict = {}

        def add(label, position, chain_name):
            points[label] = np.asarray(position, dtype=float)
            chain[label] = chain_name

        layout = scenario.wheelchair
        for label, p in {**layout.wheel_centres, **layout.contacts, **layout.markers}.items():
            add(label, p, "wheelchair")

        # Pelvis, strapped to the seat with a slight posterior tilt.
        tilt = _rz(-8.0)
        mid_asis = np.array([0.20, 0.62, 0.0])
        for label, local in PELVIS_SHAPE.items():
            add(label, mid_asis + tilt @ (scale("pelvis") * local), "wheelchair")

        params = table.regression_for(scenario.sex)
        lumbar = anthropometry.lumbar_joint_centre(
            points["LASIS"], points["RASIS"], points["SYM"], params
        )
        lhip, rhip = anthropometry.hip_joint_centres(
            points["LASIS"], points["RASIS"], points["SYM"], params
        )
        add("LumbarJC", lumbar, "wheelchair")
        add("LHipJC", lhip, "wheelchair")
        add("RHipJC", rhip, "wheelchair")

        # Legs, fixed to the wheelchair: knees forward of the hips, shanks
        # dropping to the footrests.
        for side, hip in (("L", lhip), ("R", rhip)):
            sgn = -1.0 if side == "L" else 1.0
            knee = hip + scale("thigh") * np.array([0.38, -0.03, sgn * 0.043])
            ankle = knee + scale("shank") * np.array([-0.03, -0.41, 0.0])
            add(f"{side}KneeLat", knee + [0.0, 0.0, sgn * 0.05], "wheelchair")
            add(f"{side}KneeMed", knee - [0.0, 0.0, sgn * 0.05], "wheelchair")
            add(f"{side}AnkleLat", ankle + [0.0, 0.0, sgn * 0.042], "wheelchair")
            add(f"{side}AnkleMed", ankle - [0.0, 0.0, sgn * 0.042], "wheelchair")
            add(f"{side}KneeJC", knee, "wheelchair")
            add(f"{side}AnkleJC", ankle, "wheelchair")

        # Trunk landmarks, offsets from the lumbar centre.
        st = scale("thorax")
        add("C7", lumbar + st * np.array([-0.045, 0.44, 0.0]), "trunk")
        add("Suprasternale", lumbar + st * np.array([0.06, 0.41, 0.0]), "trunk")
        add("LAcromion", lumbar + st * np.array([-0.02, 0.40, -0.185]), "trunk")
        add("RAcromion", lumbar + st * np.array([-0.02, 0.40, 0.185]), "trunk")
        for i, off in enumerate(
            [
                (-0.090, 0.30, 0.000),
                (-0.085, 0.25, -0.055),
                (-0.085, 0.25, 0.055),
                (-0.075, 0.20, -0.030),
                (-0.075, 0.19, 0.035),
            ]
        ):
            add(f"T{i + 1}", lumbar + st * np.array(off), "trunk")

        cervical = anthropometry.cervical_joint_centre(
            points["C7"], points["Suprasternale"], lumbar, params
        )
        add("CervicalJC", cervical, "trunk")

        sh = scale("head")
        c7 = points["C7"]
        add("HeadVertex", c7 + sh * np.array([0.045, 0.27, 0.0]), "head")
        add("Sellion", c7 + sh * np.array([0.145, 0.16, 0.0]), "head")
        for i, off in enumerate(
            [
                (0.040, 0.21, 0.000),
                (0.000, 0.18, -0.075),
                (0.000, 0.18, 0.075),
                (0.100, 0.22, -0.045),
                (0.100, 0.22, 0.045),
            ]
        ):
            add(f"H{i + 1}", c7 + sh * np.array(off), "head")

        down = np.array([0.0, -1.0, 0.0])
        lsjc, rsjc = anthropometry.shoulder_joint_centres(
            points["LAcromion"], points["RAcromion"], down, params
        )
        add("LShoulderJC", lsjc, "trunk")
        add("RShoulderJC", rsjc, "trunk")

        arm_cluster = [
            (0.02, 0.10, 0.045),
            (-0.03, 0.12, 0.020),
            (0.03, 0.16, 0.010),
            (-0.02, 0.18, 0.040),
            (0.04, 0.07, -0.010),
        ]
        fa_cluster = [
            (0.015, 0.07, 0.035),
            (-0.020, 0.09, 0.010),
            (0.020, 0.12, -0.015),
            (-0.010, 0.14, 0.030),
            (0.030, 0.05, 0.000),
        ]
        for side, sjc in (("L", lsjc), ("R", rsjc)):
            sgn = -1.0 if side == "L" else 1.0
            arm = f"arm_{side.lower()}"
            fa = f"forearm_{side.lower()}"
            ejc = sjc + scale("upper_arm") * np.array([0.015, -0.30, sgn * 0.012])
            add(f"{side}ElbowLat", ejc + [0.0, 0.0, sgn * 0.034], arm)
            add(f"{side}ElbowMed", ejc - [0.0, 0.0, sgn * 0.034], arm)
            add(f"{side}ElbowJC", ejc, arm)
            for i, off in enumerate(arm_cluster):
                off = np.array(off) if side == "R" else _mirror(np.array(off))
                add(f"UA{side}{i + 1}", ejc + off, arm)

            wjc = ejc + scale("forearm") * np.array([0.045, -0.26, sgn * 0.012])
            rad = np.array([0.012, 0.003, sgn * 0.028])
            add(f"{side}WristRad", wjc + rad, fa)
            add(f"{side}WristUln", wjc - rad, fa)
            add(f"{side}WristJC", wjc, fa)
            for i, off in enumerate(fa_cluster):
                off = np.array(off) if side == "R" else _mirror(np.array(off))
                add(f"FA{side}{i + 1}", wjc + off, fa)

            hs = scale("hand")
            add(f"{side}Meta2", wjc + hs * np.array([0.035, -0.085, sgn * 0.022]), fa)
            add(f"{side}Meta5", wjc + hs * np.array([-0.018, -0.090, sgn * 0.032]), fa)

        self.points = points
        self.chain = chain
        self.pivots = {
            "lumbar": lumbar,
            "cervical": cervical,
            "shoulder_l": lsjc,
            "shoulder_r": rsjc,
            "elbow_l": points["LElbowJC"],
            "elbow_r": points["RElbowJC"],
        }

    def pose(self, p: PostureSpec) -> dict:
        """Posed landmark map (wheelchair frame) for one posture."""
        # Rotating about +z moves the up axis backward, so forward flexion
        # is a negative rotation about z.
        r_trunk = _rx(-p.trunk_lateral_deg) @ _rz(-p.trunk_flexion_deg)
        r_head = r_trunk @ _rz(-p.head_flexion_deg)
        lumbar = self.pivots["lumbar"]
        cervical_posed = lumbar + r_trunk @ (self.pivots["cervical"] - lumbar)

        def trunk_map(x):
            return lumbar + r_trunk @ (x - lumbar)

        def head_map(x):
            return cervical_posed + r_head @ (x - self.pivots["cervical"])

        arm_rot = {}
        forearm_rot = {}
        sjc_posed = {}
        ejc_posed = {}
        for side, flex, abd, elbow in (
            ("l", p.l_shoulder_flexion_deg, p.l_shoulder_abduction_deg, p.l_elbow_flexion_deg),
            ("r", p.r_shoulder_flexion_deg, p.r_shoulder_abduction_deg, p.r_elbow_flexion_deg),
        ):
            abd_sign = 1.0 if side == "l" else -1.0
            r_shoulder = _rz(flex) @ _rx(abd_sign * abd)
            arm_rot[side] = r_trunk @ r_shoulder
            forearm_rot[side] = arm_rot[side] @ _rz(elbow)
            sjc_posed[side] = trunk_map(self.pivots[f"shoulder_{side}"])
            pivot_s = self.pivots[f"shoulder_{side}"]
            ejc_posed[side] = sjc_posed[side] + arm_rot[side] @ (
                self.pivots[f"elbow_{side}"] - pivot_s
            )

        posed = {}
        for label, x in self.points.items():
            c = self.chain[label]
            if c == "wheelchair":
                posed[label] = x.copy()
            elif c == "trunk":
                posed[label] = trunk_map(x)
            elif c == "head":
                posed[label] = head_map(x)
            elif c in ("arm_l", "arm_r"):
                side = c[-1]
                posed[label] = sjc_posed[side] + arm_rot[side] @ (
                    x - self.pivots[f"shoulder_{side}"]
                )
            elif c in ("forearm_l", "forearm_r"):
                side = c[-1]
                posed[label] = ejc_posed[side] + forearm_rot[side] @ (
                    x - self.pivots[f"elbow_{side}"]
                )
            else:
                raise WheelcomError(f"unknown chain {c!r}")
        return posed

    def jittered(self, p: PostureSpec, rng) -> PostureSpec:
        j = self.scenario.posture_jitter_deg
        if j == 0:
            return p
        draw = lambda: float(rng.uniform(-j, j))
        return PostureSpec(
            label=p.label,
            trunk_flexion_deg=p.trunk_flexion_deg + draw(),
            trunk_lateral_deg=p.trunk_lateral_deg + draw(),
            head_flexion_deg=p.head_flexion_deg + draw(),
            l_shoulder_flexion_deg=p.l_shoulder_flexion_deg + draw(),
            r_shoulder_flexion_deg=p.r_shoulder_flexion_deg + draw(),
            l_shoulder_abduction_deg=p.l_shoulder_abduction_deg + draw(),
            r_shoulder_abduction_deg=p.r_shoulder_abduction_deg + draw(),
            l_elbow_flexion_deg=p.l_elbow_flexion_deg + draw(),
            r_elbow_flexion_deg=p.r_elbow_flexion_deg + draw(),
        )


BODY_CLUSTER_LABELS = {
    "thorax": ["T1", "T2", "T3", "T4", "T5"],
    "head": ["H1", "H2", "H3", "H4", "H5"],
    "upper_arm_l": ["UAL1", "UAL2", "UAL3", "UAL4", "UAL5"],
    "upper_arm_r": ["UAR1", "UAR2", "UAR3", "UAR4", "UAR5"],
    "forearm_l": ["FAL1", "FAL2", "FAL3", "FAL4", "FAL5"],
    "forearm_r": ["FAR1", "FAR2", "FAR3", "FAR4", "FAR5"],
}

BODY_PROBED_POINTS = {
    "wheelchair": [
        "LASIS", "RASIS", "SYM",
        "LKneeLat", "LKneeMed", "RKneeLat", "RKneeMed",
        "LAnkleLat", "LAnkleMed", "RAnkleLat", "RAnkleMed",
    ],
    "thorax": ["C7", "Suprasternale", "LAcromion", "RAcromion"],
    "head": ["HeadVertex", "Sellion"],
    "upper_arm_l": ["LElbowLat", "LElbowMed"],
    "upper_arm_r": ["RElbowLat", "RElbowMed"],
    "forearm_l": ["LWristRad", "LWristUln"],
    "forearm_r": ["RWristRad", "RWristUln"],
}

DIRECT_MARKERS = ("LMeta2", "LMeta5", "RMeta2", "RMeta5")


def _cluster_labels(layout: WheelchairLayout) -> dict:
    return {"wheelchair": list(layout.markers), **BODY_CLUSTER_LABELS}


def _probed_points(layout: WheelchairLayout) -> dict:
    probes = {k: list(v) for k, v in BODY_PROBED_POINTS.items()}
    probes["wheelchair"] = (
        probes["wheelchair"] + sorted(layout.wheel_centres) + layout.contact_labels()
    )
    return probes


# Labels carried in trial marker CSVs: cluster markers plus the hand markers.
def _trial_marker_labels(layout: WheelchairLayout) -> list:
    labels = []
    for cluster in _cluster_labels(layout).values():
        labels.extend(cluster)
    labels.extend(DIRECT_MARKERS)
    return labels


def _marker_source_label(label: str) -> str:
    # Hand markers in the skeleton carry their anatomical names.
    return {"LMeta2": "LMeta2", "LMeta5": "LMeta5", "RMeta2": "RMeta2", "RMeta5": "RMeta5"}.get(
        label, label
    )


def distribute_forces(total_n: float, contacts_xz: np.ndarray, target_xz) -> np.ndarray:
    """Non-negative force distribution whose CoP equals the target point.

    Minimum-norm solution of the three balance equations (total force and
    both first moments) subject to non-negativity, found by exact
    enumeration of active sets: for each contact subset, take the
    minimum-norm solution of the equality system and keep the feasible one
    with the smallest norm.
    """
    contacts_xz = np.asarray(contacts_xz, dtype=float)
    target = np.asarray(target_xz, dtype=float)
    a = np.vstack([np.ones(4), contacts_xz[:, 0], contacts_xz[:, 1]])
    b = np.array([total_n, total_n * target[0], total_n * target[1]])
    scale = max(abs(total_n), 1.0)

    best = None
    best_norm = np.inf
    for mask in range(1, 16):
        idx = [i for i in range(4) if mask & (1 << i)]
        sub = a[:, idx]
        f_sub = np.linalg.pinv(sub) @ b
        if np.any(f_sub < -1e-9 * scale):
            continue
        if np.linalg.norm(sub @ f_sub - b) > 1e-9 * scale:
            continue
        f = np.zeros(4)
        f[idx] = np.clip(f_sub, 0.0, None)
        norm = float(np.linalg.norm(f))
        if norm < best_norm - 1e-12 * scale:
            best = f
            best_norm = norm
    if best is None:
        raise InfeasibleCoM(
            f"CoM projection {target.tolist()} lies outside the contact polygon"
        )
    return best


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _table_document(scenario: SyntheticScenario) -> dict:
    if scenario.table is None:
        path = anthropometry.packaged_table_path("synthetic")
        return json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(scenario.table, Mapping):
        return dict(scenario.table)
    return json.loads(Path(scenario.table).read_text(encoding="utf-8"))


def _posture_slug(label: str) -> str:
    return label.replace(" ", "_")


def generate(scenario: SyntheticScenario, out_dir) -> GroundTruth:
    """Write a complete synthetic session into ``out_dir`` and return the
    ground truth (also saved as ground_truth.json, which the manifest does
    not reference)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    table_doc = _table_document(scenario)
    table = anthropometry.load_table(table_doc)
    subject = Subject(scenario.sex, scenario.total_mass_kg)
    skel = _Skeleton(scenario, table)

    rng_place, rng_jitter, rng_noise = np.random.default_rng(scenario.seed).spawn(3)

    yaw = float(rng_place.uniform(-np.pi, np.pi))
    shift = np.array(
        [float(rng_place.uniform(-0.5, 0.5)), 0.0, float(rng_place.uniform(-0.5, 0.5))]
    )
    session_t = RigidTransform(axis_angle_rotation([0.0, 1.0, 0.0], yaw), shift)

    neutral_points = skel.pose(PostureSpec("neutral"))

    # True segment definitions from the neutral configuration; the same
    # recipe machinery the pipeline uses, fed with true points.
    def neutral_ref(ref):
        return body.resolve_reference(ref, lambda l: neutral_points[l][None, :])

    segments = body.build_segment_definitions(neutral_ref, table, subject)
    total_mass = math.fsum(s.mass_kg for s in segments)

    def true_com(points: dict) -> np.ndarray:
        def ref(r):
            return body.resolve_reference(r, lambda l: points[l][None, :])

        acc = np.zeros(3)
        for seg in segments:
            acc += seg.mass_kg * body.segment_com(seg, ref)[0]
        return acc / total_mass

    layout = scenario.wheelchair
    if set(layout.wheel_centres) != {"LWheelCentre", "RWheelCentre"}:
        raise WheelcomError("wheel centres must be labelled L/RWheelCentre")
    plate_map = _plate_map(layout)
    contacts_plate = np.array([layout.contacts[plate_map[f"f{i}"]] for i in range(1, 5)])
    contacts_xz = contacts_plate[:, [0, 2]]
    weight = scenario.total_mass_kg * GRAVITY_M_S2
    wheelchair_forces = distribute_forces(
        scenario.wheelchair_mass_kg * GRAVITY_M_S2, contacts_xz, layout.com_xz
    )

    marker_noise = scenario.marker_noise_m
    force_noise = scenario.force_noise_n

    def noisy_points(points: np.ndarray) -> np.ndarray:
        if marker_noise == 0:
            return points
        return points + rng_noise.normal(0.0, marker_noise, points.shape)

    def marker_times(duration: float) -> np.ndarray:
        n = int(round(duration * scenario.marker_rate_hz))
        return np.arange(n) / scenario.marker_rate_hz

    def force_times(duration: float) -> np.ndarray:
        n = int(round(duration * scenario.force_rate_hz))
        return np.arange(n) / scenario.force_rate_hz

    trial_labels = _trial_marker_labels(layout)

    def write_markers(name: str, points: dict, duration: float) -> str:
        times = marker_times(duration)
        pos = np.empty((len(times), len(trial_labels), 3))
        for j, label in enumerate(trial_labels):
            pos[:, j, :] = session_t.apply(points[_marker_source_label(label)])
        session_io.write_marker_csv(out / name, times, trial_labels, noisy_points(pos))
        return name

    def write_forces(name: str, subject_forces: np.ndarray | None, duration: float) -> str:
        times = force_times(duration)
        f = np.tile(wheelchair_forces, (len(times), 1))
        if subject_forces is not None:
            f = f + subject_forces
        if force_noise > 0:
            f = f + rng_noise.normal(0.0, force_noise, f.shape)
        session_io.write_force_csv(out / name, times, f)
        return name

    # Calibration captures: cluster definition, probing, pelvis cloud.
    cluster_def_file = write_markers("clusters_static.csv", neutral_points, 0.1)

    probe_entries = []
    probe_index = 0
    for cluster, labels in _probed_points(layout).items():
        for label in labels:
            probe_entries.append((label, cluster, probe_index / scenario.marker_rate_hz))
            probe_index += 1
    probing_duration = probe_index / scenario.marker_rate_hz
    probing_frames_file = write_markers("probing_frames.csv", neutral_points, probing_duration)
    probed_docs = []
    for label, cluster, t in probe_entries:
        position = session_t.apply(neutral_points[label])
        if marker_noise > 0:
            position = position + rng_noise.normal(0.0, marker_noise, 3)
        probed_docs.append(
            {
                "label": label,
                "cluster": cluster,
                "time_s": t,
                "position_m": [float(v) for v in position],
            }
        )
    _write_json(
        out / "probing.json",
        {
            "format_version": session_io.FORMAT_VERSION,
            "frames_file": probing_frames_file,
            "points": probed_docs,
        },
    )

    # Pelvis cloud, probed with the pelvis slid to the fore-part of the seat.
    fore_rot = _rz(6.0) @ _ry(2.0)
    fore_mid = np.array([0.29, 0.635, 0.012])
    scale_pelvis = float(dict(scenario.segment_scales).get("pelvis", 1.0))
    cloud_points = {}
    for label, local in PELVIS_SHAPE.items():
        p = session_t.apply(fore_mid + fore_rot @ (scale_pelvis * local))
        if marker_noise > 0:
            p = p + rng_noise.normal(0.0, marker_noise, 3)
        cloud_points[label] = [float(v) for v in p]
    _write_json(
        out / "pelvis_cloud.json",
        {"format_version": session_io.FORMAT_VERSION, "points_m": cloud_points},
    )

    empty_file = write_forces("empty_forces.csv", None, 2.0)

    # Neutral static (exactly neutral; trials below carry posture jitter).
    neutral_com = true_com(neutral_points)
    neutral_forces = distribute_forces(weight, contacts_xz, neutral_com[[0, 2]])
    neutral_markers_file = write_markers(
        "neutral_markers.csv", neutral_points, scenario.trial_duration_s
    )
    neutral_forces_file = write_forces(
        "neutral_forces.csv", neutral_forces, scenario.trial_duration_s
    )

    trials_manifest = []
    trial_truths = []
    for posture in scenario.postures:
        for k in range(1, scenario.trials_per_posture + 1):
            spec = skel.jittered(posture, rng_jitter)
            points = skel.pose(spec)
            com = true_com(points)
            forces = distribute_forces(weight, contacts_xz, com[[0, 2]])
            slug = _posture_slug(posture.label)
            mfile = write_markers(
                f"trial_{slug}_{k}_markers.csv", points, scenario.trial_duration_s
            )
            ffile = write_forces(
                f"trial_{slug}_{k}_forces.csv", forces, scenario.trial_duration_s
            )
            trials_manifest.append(
                {
                    "posture": posture.label,
                    "trial_index": k,
                    "markers": mfile,
                    "forces": ffile,
                }
            )
            trial_truths.append(TrialTruth(posture.label, k, com, forces))

    table_file = "anthropometry.json"
    _write_json(out / table_file, table_doc)

    manifest = {
        "format_version": session_io.FORMAT_VERSION,
        "subject": {"sex": scenario.sex, "total_mass_kg": scenario.total_mass_kg},
        "anthropometric_table": table_file,
        "clusters": _cluster_labels(layout),
        "cluster_definition": cluster_def_file,
        "probing": "probing.json",
        "pelvis_cloud": "pelvis_cloud.json",
        "empty_wheelchair_forces": empty_file,
        "neutral_static": {"markers": neutral_markers_file, "forces": neutral_forces_file},
        "trials": trials_manifest,
        "wheelchair": {
            "cluster": "wheelchair",
            "rear_wheel_left": "LWheelCentre",
            "rear_wheel_right": "RWheelCentre",
            "contacts": layout.contact_labels(),
        },
        "plate_map": plate_map,
        "window_s": scenario.trial_duration_s,
    }
    _write_json(out / "manifest.json", manifest)

    cluster_markers = set(sum(_cluster_labels(layout).values(), []))
    landmark_labels = [l for l in skel.points if l not in cluster_markers]
    truth = GroundTruth(
        total_mass_kg=scenario.total_mass_kg,
        wheelchair_mass_kg=scenario.wheelchair_mass_kg,
        contacts_wheelchair=contacts_plate,
        neutral_com_wheelchair=neutral_com,
        neutral_landmarks_global={
            l: session_t.apply(neutral_points[l]) for l in landmark_labels
        },
        trials=tuple(trial_truths),
    )
    _write_json(out / "ground_truth.json", _truth_to_doc(truth))
    return truth


def _truth_to_doc(truth: GroundTruth) -> dict:
    return {
        "format_version": session_io.FORMAT_VERSION,
        "g_m_s2": GRAVITY_M_S2,
        "total_mass_kg": truth.total_mass_kg,
        "wheelchair_mass_kg": truth.wheelchair_mass_kg,
        "contacts_wheelchair_m": truth.contacts_wheelchair.tolist(),
        "neutral_com_wheelchair_m": truth.neutral_com_wheelchair.tolist(),
        "neutral_landmarks_global_m": {
            k: np.asarray(v).tolist() for k, v in truth.neutral_landmarks_global.items()
        },
        "trials": [
            {
                "posture": t.posture,
                "trial_index": t.trial_index,
                "com_wheelchair_m": t.com_wheelchair.tolist(),
                "ground_projection_m": list(t.ground_projection),
                "subject_forces_n": t.subject_forces_n.tolist(),
            }
            for t in truth.trials
        ],
    }


def load_ground_truth(path) -> GroundTruth:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return GroundTruth(
        total_mass_kg=doc["total_mass_kg"],
        wheelchair_mass_kg=doc["wheelchair_mass_kg"],
        contacts_wheelchair=np.array(doc["contacts_wheelchair_m"]),
        neutral_com_wheelchair=np.array(doc["neutral_com_wheelchair_m"]),
        neutral_landmarks_global={
            k: np.array(v) for k, v in doc["neutral_landmarks_global_m"].items()
        },
        trials=tuple(
            TrialTruth(
                posture=t["posture"],
                trial_index=t["trial_index"],
                com_wheelchair=np.array(t["com_wheelchair_m"]),
                subject_forces_n=np.array(t["subject_forces_n"]),
            )
            for t in doc["trials"]
        ),
    )
