"""Body-segment inertial parameters and joint-centre regression rules.

All numeric constants live in an external JSON document so the coefficient
values, the frame conventions they were defined in, and the segment
coordinate-system recipes travel together. The code only implements the
geometric rules:

- pelvis frame: origin at the ASIS midpoint, z along LASIS to RASIS,
  plane completed upward by the pubic symphysis, x forward;
- lumbar and hip joint centres: offsets in that frame scaled by the
  inter-ASIS distance (hips mirrored across the sagittal plane);
- cervical joint centre: polar offset from C7 inside the sagittal plane
  spanned by the suprasternal notch and the lumbar centre, scaled by the
  C7-to-notch distance;
- shoulder joint centres: a fraction of the inter-acromial distance,
  straight down from each acromion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from . import geometry
from .errors import (
    DegenerateGeometry,
    MalformedDocument,
    MassFractionOutOfRange,
    MissingSegment,
)

SEGMENTS = (
    "head",
    "thorax",
    "pelvis",
    "upper_arm_l",
    "upper_arm_r",
    "forearm_l",
    "forearm_r",
    "hand_l",
    "hand_r",
    "thigh_l",
    "thigh_r",
    "shank_l",
    "shank_r",
    "foot_l",
    "foot_r",
)
SEXES = ("female", "male")

FORMAT_VERSION = "1.0"


@dataclass(frozen=True)
class SegmentParams:
    """Mass fraction and local CoM position ratios of one segment, per sex.

    ``com_local`` positions the segment CoM in the segment frame as
    fractions of the segment length defined by its recipe.
    """

    segment_id: str
    sex: str
    mass_fraction: float
    com_local: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "com_local", geometry.as_point(self.com_local, "com_local")
        )


@dataclass(frozen=True)
class RegressionParams:
    """Joint-centre regression coefficients for one sex.

    Pelvis offsets are (forward, up, lateral) fractions of the inter-ASIS
    distance in the pelvis frame; the hip lateral term is a magnitude,
    mirrored per side. The cervical rule is a ratio of the C7-to-notch
    distance rotated by an angle above that line, inside the sagittal plane.
    """

    lumbar_offset: np.ndarray
    hip_offset: np.ndarray
    cervical_ratio: float
    cervical_angle_deg: float
    shoulder_ratio: float = 0.17

    def __post_init__(self):
        object.__setattr__(
            self, "lumbar_offset", geometry.as_point(self.lumbar_offset, "lumbar_offset")
        )
        object.__setattr__(
            self, "hip_offset", geometry.as_point(self.hip_offset, "hip_offset")
        )
        for name in ("cervical_ratio", "cervical_angle_deg", "shoulder_ratio"):
            if not np.isfinite(getattr(self, name)):
                raise MalformedDocument(f"regression coefficient {name} is not finite")
        if not 0.0 < self.shoulder_ratio < 1.0:
            raise MalformedDocument(
                f"shoulder_ratio must be in (0, 1), got {self.shoulder_ratio}"
            )


@dataclass(frozen=True)
class LcsRecipe:
    """How to build one segment's coordinate system from labelled points.

    Point references are labels, optionally ``midpoint(A,B)``. The axis
    vector runs from ``axis_from`` to ``axis_to`` and takes the role
    ``axis_role``; the plane vector likewise. Segment length is the distance
    between the two ``length`` references, measured once in the neutral
    static trial.
    """

    origin: str
    axis_role: str
    axis_from: str
    axis_to: str
    plane_role: str
    plane_from: str
    plane_to: str
    length_from: str
    length_to: str
    tracking_source: str

    @property
    def roles(self) -> str:
        return self.axis_role + self.plane_role

    def point_refs(self) -> tuple:
        return (
            self.origin,
            self.axis_from,
            self.axis_to,
            self.plane_from,
            self.plane_to,
            self.length_from,
            self.length_to,
        )


@dataclass(frozen=True)
class AnthropometricTable:
    """Complete segment table, per-sex regression coefficients and segment
    frame recipes, with mandatory provenance."""

    segments: Mapping[tuple, SegmentParams]
    regression: Mapping[str, RegressionParams]
    recipes: Mapping[str, LcsRecipe]
    provenance: str

    def segment(self, segment_id: str, sex: str) -> SegmentParams:
        try:
            return self.segments[(segment_id, sex)]
        except KeyError:
            raise MissingSegment(f"no entry for ({segment_id}, {sex})") from None

    def regression_for(self, sex: str) -> RegressionParams:
        try:
            return self.regression[sex]
        except KeyError:
            raise MissingSegment(f"no regression coefficients for sex {sex!r}") from None

    def recipe(self, segment_id: str) -> LcsRecipe:
        try:
            return self.recipes[segment_id]
        except KeyError:
            raise MissingSegment(f"no frame recipe for segment {segment_id!r}") from None


def _parse_recipe(segment_id: str, doc: Mapping) -> LcsRecipe:
    try:
        axis = doc["axis"]
        plane = doc["plane"]
        length = doc["length"]
        recipe = LcsRecipe(
            origin=str(doc["origin"]),
            axis_role=str(axis["role"]),
            axis_from=str(axis["from"]),
            axis_to=str(axis["to"]),
            plane_role=str(plane["role"]),
            plane_from=str(plane["from"]),
            plane_to=str(plane["to"]),
            length_from=str(length[0]),
            length_to=str(length[1]),
            tracking_source=str(doc["tracking"]),
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedDocument(f"recipe for {segment_id!r}: {exc!r}") from exc
    if recipe.roles not in geometry.VALID_ROLES:
        raise MalformedDocument(
            f"recipe for {segment_id!r}: invalid axis roles {recipe.roles!r}"
        )
    return recipe


def load_table(source) -> AnthropometricTable:
    """Load and validate an anthropometric document.

    ``source`` may be a path to a JSON file or an already-parsed mapping.
    Completeness (every segment and sex), mass-fraction ranges and per-sex
    sums are all enforced here so downstream code can trust the table.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"{source}: invalid JSON ({exc})") from exc
    else:
        doc = source
    if not isinstance(doc, Mapping):
        raise MalformedDocument("anthropometric document must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise MalformedDocument(
            f"unsupported anthropometric format_version {doc.get('format_version')!r}"
        )
    provenance = doc.get("provenance")
    if not provenance or not isinstance(provenance, str):
        raise MalformedDocument("anthropometric document needs a provenance string")

    seg_doc = doc.get("segments")
    if not isinstance(seg_doc, Mapping):
        raise MalformedDocument("missing 'segments' mapping")
    segments: dict = {}
    for segment_id in SEGMENTS:
        if segment_id not in seg_doc:
            raise MissingSegment(f"segment {segment_id!r} missing from table")
        for sex in SEXES:
            entry = seg_doc[segment_id].get(sex)
            if entry is None:
                raise MissingSegment(f"segment {segment_id!r} has no {sex!r} entry")
            try:
                fraction = float(entry["mass_fraction"])
                ratios = np.asarray(entry["com_ratios"], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedDocument(
                    f"segment {segment_id!r}/{sex}: {exc!r}"
                ) from exc
            if not np.isfinite(fraction) or not 0.0 < fraction < 1.0:
                raise MassFractionOutOfRange(
                    f"segment {segment_id!r}/{sex}: mass fraction {fraction}"
                )
            if ratios.shape != (3,) or not np.all(np.isfinite(ratios)):
                raise MalformedDocument(
                    f"segment {segment_id!r}/{sex}: com_ratios must be 3 finite numbers"
                )
            segments[(segment_id, sex)] = SegmentParams(segment_id, sex, fraction, ratios)

    for sex in SEXES:
        total = sum(segments[(s, sex)].mass_fraction for s in SEGMENTS)
        if not 0.99 <= total <= 1.01:
            raise MassFractionOutOfRange(
                f"{sex} mass fractions sum to {total:.4f}, outside [0.99, 1.01]"
            )

    reg_doc = doc.get("regression")
    if not isinstance(reg_doc, Mapping):
        raise MalformedDocument("missing 'regression' mapping")
    regression: dict = {}
    for sex in SEXES:
        entry = reg_doc.get(sex)
        if entry is None:
            raise MissingSegment(f"no regression entry for sex {sex!r}")
        try:
            regression[sex] = RegressionParams(
                lumbar_offset=np.asarray(entry["lumbar_offset"], dtype=float),
                hip_offset=np.asarray(entry["hip_offset"], dtype=float),
                cervical_ratio=float(entry["cervical_ratio"]),
                cervical_angle_deg=float(entry["cervical_angle_deg"]),
                shoulder_ratio=float(entry.get("shoulder_ratio", 0.17)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedDocument(f"regression/{sex}: {exc!r}") from exc

    rec_doc = doc.get("lcs_recipes")
    if not isinstance(rec_doc, Mapping):
        raise MalformedDocument("missing 'lcs_recipes' mapping")
    recipes: dict = {}
    for segment_id in SEGMENTS:
        if segment_id not in rec_doc:
            raise MissingSegment(f"no frame recipe for segment {segment_id!r}")
        recipes[segment_id] = _parse_recipe(segment_id, rec_doc[segment_id])

    return AnthropometricTable(segments, regression, recipes, provenance)


def load_packaged_table(name: str) -> AnthropometricTable:
    """Load one of the tables shipped with the package ('default' or
    'synthetic')."""
    path = resources.files("wheelcom.data") / f"{name}_anthropometry.json"
    with resources.as_file(path) as p:
        return load_table(p)


def packaged_table_path(name: str) -> Path:
    path = resources.files("wheelcom.data") / f"{name}_anthropometry.json"
    with resources.as_file(path) as p:
        return Path(p)


def pelvis_frame(lasis, rasis, sym) -> geometry.RigidTransform:
    """Pelvis regression frame: origin mid-ASIS, z LASIS to RASIS, y pulled
    up by the symphysis, x forward."""
    lasis = geometry.as_point(lasis, "LASIS")
    rasis = geometry.as_point(rasis, "RASIS")
    sym = geometry.as_point(sym, "SYM")
    origin = 0.5 * (lasis + rasis)
    try:
        return geometry.frame_from_vectors(origin, rasis - lasis, origin - sym, "zy")
    except DegenerateGeometry as exc:
        raise DegenerateGeometry(f"pelvis landmarks: {exc}") from exc


def lumbar_joint_centre(lasis, rasis, sym, params: RegressionParams) -> np.ndarray:
    """Lumbar joint centre from the three anterior pelvis landmarks."""
    frame = pelvis_frame(lasis, rasis, sym)
    width = float(np.linalg.norm(geometry.as_point(rasis) - geometry.as_point(lasis)))
    return frame.apply(width * params.lumbar_offset)


def hip_joint_centres(
    lasis, rasis, sym, params: RegressionParams
) -> tuple[np.ndarray, np.ndarray]:
    """Left and right hip joint centres, mirrored across the sagittal plane."""
    frame = pelvis_frame(lasis, rasis, sym)
    width = float(np.linalg.norm(geometry.as_point(rasis) - geometry.as_point(lasis)))
    fwd, up, lat = params.hip_offset
    left = frame.apply(width * np.array([fwd, up, -lat]))
    right = frame.apply(width * np.array([fwd, up, lat]))
    return left, right


def cervical_joint_centre(c7, suprasternale, lumbar_jc, params: RegressionParams) -> np.ndarray:
    """Cervical joint centre offset from C7 inside the trunk sagittal plane.

    The plane is spanned by the C7-to-notch direction and the lumbar centre;
    the offset is ``ratio * |notch - C7|`` rotated ``angle`` degrees above
    the C7-to-notch line.
    """
    c7 = geometry.as_point(c7, "C7")
    sup = geometry.as_point(suprasternale, "suprasternale")
    ljc = geometry.as_point(lumbar_jc, "lumbar_jc")
    try:
        frame = geometry.frame_from_vectors(c7, sup - c7, c7 - ljc, "xy")
    except DegenerateGeometry as exc:
        raise DegenerateGeometry(f"cervical landmarks: {exc}") from exc
    depth = float(np.linalg.norm(sup - c7))
    angle = np.deg2rad(params.cervical_angle_deg)
    local = params.cervical_ratio * depth * np.array([np.cos(angle), np.sin(angle), 0.0])
    return frame.apply(local)


def shoulder_joint_centres(
    l_acromion, r_acromion, down_direction, params: RegressionParams
) -> tuple[np.ndarray, np.ndarray]:
    """Shoulder joint centres: a fixed fraction of the inter-acromial
    distance, straight below each acromion."""
    la = geometry.as_point(l_acromion, "l_acromion")
    ra = geometry.as_point(r_acromion, "r_acromion")
    down = geometry.as_point(down_direction, "down_direction")
    norm = np.linalg.norm(down)
    if norm < 1e-12:
        raise DegenerateGeometry("down_direction has zero length")
    if abs(norm - 1.0) > 1e-6:
        raise DegenerateGeometry(f"down_direction must be unit length, |d|={norm}")
    span = float(np.linalg.norm(ra - la))
    if span < 1e-12:
        raise DegenerateGeometry("acromions are coincident")
    offset = params.shoulder_ratio * span * down
    return la + offset, ra + offset
