"""Points, rigid transforms, least-squares rigid registration and local
coordinate-system construction.

Conventions used throughout the package:

- all lengths are metres; the global frame is y-up, x-forward, z-right;
- a rotation matrix holds the frame axes as columns, so
  ``global = R @ local + t``;
- point sets are mappings from label to a length-3 array, and rigid fits
  match points by label, never by order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateAxis,
    DegenerateGeometry,
    FewerThanThreeCommonLabels,
    NonFiniteInput,
)

# Collinearity guard: second singular value of a centred point matrix below
# this fraction of the largest means the points do not span a plane.
COLLINEARITY_RTOL = 1e-12

# Minimum sine of the angle between the primary axis and the plane vector.
MIN_PLANE_ANGLE_SIN = 1e-6

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
VALID_ROLES = ("xy", "xz", "yx", "yz", "zx", "zy")


def as_point(value, name: str = "point") -> np.ndarray:
    """Coerce to a finite (3,) float array, raising NonFiniteInput otherwise."""
    p = np.asarray(value, dtype=float)
    if p.shape != (3,):
        raise NonFiniteInput(f"{name} must have shape (3,), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise NonFiniteInput(f"{name} contains non-finite components: {p}")
    return p


def unit(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Normalize along an axis; zero-norm rows raise DegenerateAxis."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=axis, keepdims=True)
    if np.any(n < 1e-15):
        raise DegenerateAxis("cannot normalize a zero-length vector")
    return v / n


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """A proper rigid transform: rotation (3x3, det +1) plus translation.

    ``apply`` maps points from the transform's source frame into its target
    frame: ``target = rotation @ source + translation``.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be (3,3) and translation (3,)")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise NonFiniteInput("transform contains non-finite values")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        """Transform one point (3,) or an array of points (..., 3)."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return self ∘ other, the transform applying ``other`` first."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def is_close(self, other: "RigidTransform", atol: float = 1e-9) -> bool:
        return (
            rotation_distance(self.rotation, other.rotation) <= atol
            and float(np.max(np.abs(self.translation - other.translation))) <= atol
        )


@dataclass(frozen=True)
class LabelledPointSet:
    """An ordered, label-unique set of 3D points.

    Thin wrapper over a dict; most functions in this package accept plain
    ``Mapping[str, array]`` and this class only adds validation where a set
    is stored long-term (cluster geometry, pelvis clouds).
    """

    points: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for label, pos in self.points.items():
            if label in clean:
                raise ValueError(f"duplicate label {label!r}")
            clean[str(label)] = as_point(pos, name=label)
        if not clean:
            raise ValueError("a point set needs at least one point")
        object.__setattr__(self, "points", clean)

    def __len__(self):
        return len(self.points)

    def __contains__(self, label):
        return label in self.points

    def __getitem__(self, label) -> np.ndarray:
        return self.points[label]

    def labels(self) -> tuple:
        return tuple(self.points)

    def array(self, labels: Sequence[str] | None = None) -> np.ndarray:
        labels = self.labels() if labels is None else labels
        return np.array([self.points[l] for l in labels], dtype=float)


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle of a rotation matrix, accurate for tiny angles.

    Uses atan2 of the skew-part magnitude against (trace-1)/2, which keeps
    precision near zero where arccos of the trace loses it.
    """
    s = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return float(np.arctan2(np.linalg.norm(s), 0.5 * (np.trace(r) - 1.0)))


def rotation_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """Geodesic angle between two rotations, in radians."""
    return rotation_angle(np.asarray(r1).T @ np.asarray(r2))


def axis_angle_rotation(axis, angle_rad: float) -> np.ndarray:
    """Rotation matrix for a rotation of ``angle_rad`` about ``axis``."""
    a = unit(as_point(axis, "axis"))
    x, y, z = a
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def midpoint(a, b) -> np.ndarray:
    """Component-wise mean of two points."""
    return 0.5 * (as_point(a, "a") + as_point(b, "b"))


def _check_planar_rank(centred: np.ndarray, what: str) -> None:
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[1] < COLLINEARITY_RTOL * max(sv[0], 1e-300):
        raise DegenerateGeometry(f"{what} points are collinear or coincident")


def fit_arrays(source: np.ndarray, target: np.ndarray) -> tuple[RigidTransform, float]:
    """Least-squares proper rigid fit between two (N,3) arrays in matching order.

    Closed-form solution via SVD of the centred cross-covariance with a
    determinant correction, so the result is always a proper rotation even
    for noisy, reflection-looking inputs.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError("source and target must both be (N,3)")
    if src.shape[0] < 3:
        raise FewerThanThreeCommonLabels(
            f"need at least 3 point pairs, got {src.shape[0]}"
        )
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(tgt))):
        raise NonFiniteInput("rigid fit received non-finite coordinates")

    sc = src.mean(axis=0)
    tc = tgt.mean(axis=0)
    xs = src - sc
    xt = tgt - tc
    _check_planar_rank(xs, "source")
    _check_planar_rank(xt, "target")

    h = xs.T @ xt
    u, _, vt = np.linalg.svd(h)
    v = vt.T
    d = np.sign(np.linalg.det(v @ u.T))
    r = v @ np.diag([1.0, 1.0, d]) @ u.T
    t = tc - r @ sc

    residuals = xs @ r.T - xt
    rms = float(np.sqrt(np.mean(np.sum(residuals**2, axis=1))))
    return RigidTransform(r, t), rms


def rigid_fit(
    source: Mapping[str, np.ndarray], target: Mapping[str, np.ndarray]
) -> tuple[RigidTransform, float]:
    """Rigid fit over the labels common to both sets.

    Returns the proper transform minimizing the summed squared distance from
    transformed source points to target points, and the RMS of the remaining
    distances. Matching is by label so per-frame occlusions simply shrink
    the fit set.
    """
    source = getattr(source, "points", source)
    target = getattr(target, "points", target)
    common = [l for l in source if l in target]
    if len(common) < 3:
        raise FewerThanThreeCommonLabels(
            f"only {len(common)} common labels between sets ({common})"
        )
    src = np.array([source[l] for l in common], dtype=float)
    tgt = np.array([target[l] for l in common], dtype=float)
    return fit_arrays(src, tgt)


def fit_poses(
    local: np.ndarray, observed: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched rigid fit of one local geometry onto T observed frames.

    Args:
        local: (M,3) local point coordinates, M >= 3.
        observed: (T,M,3) observed positions in matching point order.

    Returns:
        (rotations (T,3,3), translations (T,3), rms (T,)) such that
        ``observed ~= local @ R.T + t`` per frame.
    """
    local = np.asarray(local, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if local.ndim != 2 or local.shape[1] != 3 or observed.shape[1:] != local.shape:
        raise ValueError("local must be (M,3) and observed (T,M,3)")
    if local.shape[0] < 3:
        raise FewerThanThreeCommonLabels(
            f"need at least 3 points, got {local.shape[0]}"
        )
    if not (np.all(np.isfinite(local)) and np.all(np.isfinite(observed))):
        raise NonFiniteInput("batched fit received non-finite coordinates")

    lc = local.mean(axis=0)
    xs = local - lc
    _check_planar_rank(xs, "local")
    oc = observed.mean(axis=1)
    xt = observed - oc[:, None, :]
    sv = np.linalg.svd(xt, compute_uv=False)
    if np.any(sv[:, 1] < COLLINEARITY_RTOL * np.maximum(sv[:, 0], 1e-300)):
        raise DegenerateGeometry("observed points are collinear in some frame")

    h = np.einsum("mi,tmj->tij", xs, xt)
    u, _, vt = np.linalg.svd(h)
    v = vt.transpose(0, 2, 1)
    d = np.sign(np.linalg.det(v @ u.transpose(0, 2, 1)))
    v = v.copy()
    v[:, :, 2] *= d[:, None]
    r = v @ u.transpose(0, 2, 1)
    t = oc - np.einsum("tij,j->ti", r, lc)

    fitted = np.einsum("tij,mj->tmi", r, xs)
    rms = np.sqrt(np.mean(np.sum((fitted - xt) ** 2, axis=2), axis=1))
    return r, t, rms


def _third_axis(roles: str, primary: np.ndarray, plane: np.ndarray) -> tuple[str, np.ndarray]:
    """Complete a right-handed triad: x = y×z, y = z×x, z = x×y."""
    known = {roles[0]: primary, roles[1]: plane}
    missing = ({"x", "y", "z"} - set(roles)).pop()
    if missing == "x":
        vec = np.cross(known["y"], known["z"])
    elif missing == "y":
        vec = np.cross(known["z"], known["x"])
    else:
        vec = np.cross(known["x"], known["y"])
    return missing, vec


def frame_from_vectors(origin, primary, plane, roles: str) -> RigidTransform:
    """Orthonormal right-handed frame from a primary axis and a plane vector.

    The primary axis is the normalized ``primary`` vector, assigned the
    anatomical role ``roles[0]`` (one of x/y/z). The axis with role
    ``roles[1]`` is the Gram-Schmidt orthogonalization of ``plane`` against
    the primary axis. The remaining axis completes a right-handed triad.
    """
    if roles not in VALID_ROLES:
        raise ValueError(f"roles must be one of {VALID_ROLES}, got {roles!r}")
    origin = as_point(origin, "origin")
    primary = np.asarray(primary, dtype=float)
    plane = np.asarray(plane, dtype=float)
    pn = np.linalg.norm(primary)
    if pn < 1e-12:
        raise DegenerateAxis("primary axis vector has zero length")
    u = primary / pn

    w = plane - (plane @ u) * u
    wn = np.linalg.norm(w)
    if wn < MIN_PLANE_ANGLE_SIN * max(np.linalg.norm(plane), 1e-300):
        raise DegenerateAxis("plane vector is collinear with the primary axis")
    w = w / wn

    third_role, third = _third_axis(roles, u, w)
    rotation = np.empty((3, 3))
    rotation[:, AXIS_INDEX[roles[0]]] = u
    rotation[:, AXIS_INDEX[roles[1]]] = w
    rotation[:, AXIS_INDEX[third_role]] = third
    return RigidTransform(rotation, origin)


def build_lcs(origin, primary_axis_end, plane_point, roles: str) -> RigidTransform:
    """Frame from an origin, a point ending the primary axis and a plane point.

    ``roles`` states which anatomical axis each constructed axis maps to,
    e.g. ``"yx"`` means the origin-to-end direction is y and the plane point
    pulls the x axis.
    """
    origin = as_point(origin, "origin")
    return frame_from_vectors(
        origin,
        as_point(primary_axis_end, "primary_axis_end") - origin,
        as_point(plane_point, "plane_point") - origin,
        roles,
    )


def frames_from_vectors(
    origins: np.ndarray, primary: np.ndarray, plane: np.ndarray, roles: str
) -> tuple[np.ndarray, np.ndarray]:
    """Batched frame_from_vectors over (T,3) inputs.

    Returns (rotations (T,3,3), origins (T,3)). Raises DegenerateAxis if any
    frame is degenerate.
    """
    if roles not in VALID_ROLES:
        raise ValueError(f"roles must be one of {VALID_ROLES}, got {roles!r}")
    origins = np.asarray(origins, dtype=float)
    primary = np.asarray(primary, dtype=float)
    plane = np.asarray(plane, dtype=float)

    pn = np.linalg.norm(primary, axis=1)
    if np.any(pn < 1e-12):
        raise DegenerateAxis("primary axis vector has zero length in some frame")
    u = primary / pn[:, None]

    w = plane - np.sum(plane * u, axis=1)[:, None] * u
    wn = np.linalg.norm(w, axis=1)
    if np.any(wn < MIN_PLANE_ANGLE_SIN * np.maximum(np.linalg.norm(plane, axis=1), 1e-300)):
        raise DegenerateAxis("plane vector collinear with primary axis in some frame")
    w = w / wn[:, None]

    known = {roles[0]: u, roles[1]: w}
    missing = ({"x", "y", "z"} - set(roles)).pop()
    if missing == "x":
        third = np.cross(known["y"], known["z"])
    elif missing == "y":
        third = np.cross(known["z"], known["x"])
    else:
        third = np.cross(known["x"], known["y"])

    rot = np.empty((len(u), 3, 3))
    rot[:, :, AXIS_INDEX[roles[0]]] = u
    rot[:, :, AXIS_INDEX[roles[1]]] = w
    rot[:, :, AXIS_INDEX[missing]] = third
    return rot, origins
