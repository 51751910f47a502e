"""End-to-end orchestration: calibrate, estimate per-trial CoM, compute the
reference CoP, compare, and write the report artifacts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from . import body as body_model
from . import clusters, forceplate, reports, session as session_io, validation
from .body import CalibratedBody, Subject, WheelchairGeometry
from .forceplate import GRAVITY_M_S2, ZeroOffset
from .session import Acquisition, Session


@dataclass(frozen=True)
class CalibratedSession:
    """A session with its calibration products attached."""

    session: Session
    subject: Subject
    body: CalibratedBody
    geometry: WheelchairGeometry
    contacts_wc: np.ndarray  # (4,3) wheelchair frame, plate order f1..f4
    offsets: ZeroOffset


def mass_from_plates(session: Session, offsets: ZeroOffset) -> float:
    """Subject mass from the neutral static record: mean total zeroed
    vertical force divided by g."""
    zeroed = session.neutral.forces.forces - offsets.values
    return float(zeroed.sum(axis=1).mean() / GRAVITY_M_S2)


def calibrate_session(session: Session) -> CalibratedSession:
    offsets = forceplate.compute_zero_offset(session.empty_forces)
    mass = session.total_mass_kg
    if mass is None:
        mass = mass_from_plates(session, offsets)
    subject = Subject(session.subject_sex, mass)

    body = body_model.calibrate_body(
        session.calibration_recordings(), session.pelvis_cloud, session.table, subject
    )
    wc_cluster = body.body_clusters[session.wheelchair_cluster]
    geometry = body_model.wheelchair_geometry_from_cluster(
        wc_cluster,
        session.wheel_left_label,
        session.wheel_right_label,
        # Plate order, so contact rows match the force columns.
        session.plate_contact_labels,
    )
    static_poses = clusters.track_trial(wc_cluster, session.neutral.markers)
    contacts_wc = body_model.contacts_in_wheelchair(geometry, static_poses)
    return CalibratedSession(session, subject, body, geometry, contacts_wc, offsets)


def _trial_window(acq: Acquisition, window_s: float | None, override) -> tuple:
    if override is not None:
        return float(override[0]), float(override[1])
    t0 = float(acq.markers.times[0])
    if window_s is None:
        return t0, float(acq.markers.times[-1])
    return t0, t0 + window_s


def evaluate_trial(
    cal: CalibratedSession, acq: Acquisition, window=None
) -> tuple[validation.TrialResult, body_model.ComTrajectory]:
    """Averaged CoM projection versus averaged reference CoP for one trial."""
    traj = body_model.com_trajectory(cal.body, acq.markers, cal.geometry)
    t0, t1 = _trial_window(acq, cal.session.window_s, window)
    est = body_model.average_static(traj.samples(), (t0, t1))

    f0 = float(acq.forces.times[0])
    if window is not None:
        fw = (float(window[0]), float(window[1]))
    elif cal.session.window_s is None:
        fw = (f0, float(acq.forces.times[-1]))
    else:
        fw = (f0, f0 + cal.session.window_s)
    ref = forceplate.cop_average(acq.forces, cal.offsets, cal.contacts_wc, fw)

    ap, ml = est.ground_projection
    result = validation.TrialResult(
        posture=acq.posture,
        trial_index=acq.trial_index,
        est_ap=ap,
        est_ml=ml,
        ref_ap=ref.ap,
        ref_ml=ref.ml,
    )
    return result, traj


def run_pipeline(manifest_path, out_dir, window=None) -> tuple:
    """Load, calibrate, evaluate every trial and write all artifacts.

    Returns (ValidationReport, written file paths).
    """
    session = session_io.load_session(manifest_path)
    cal = calibrate_session(session)

    results = []
    trajectories = []
    for acq in session.trials:
        result, traj = evaluate_trial(cal, acq, window)
        results.append(result)
        trajectories.append((acq.posture, acq.trial_index, traj))

    report = validation.build_report(results)
    written = reports.write_outputs(report, trajectories, out_dir)
    return report, written


def write_calibration_summary(cal: CalibratedSession, path) -> Path:
    """Calibration products: serialized clusters, segment table, residuals."""
    path = Path(path)
    static_rms = {
        name: float(
            clusters.track_trial(c, cal.session.neutral.markers).rms.mean()
        )
        for name, c in cal.body.body_clusters.items()
    }
    doc = session_io.clusters_to_doc(cal.body.body_clusters)
    doc["subject"] = {
        "sex": cal.subject.sex,
        "total_mass_kg": cal.subject.total_mass_kg,
    }
    doc["segments"] = {
        s.segment_id: {
            "mass_kg": s.mass_kg,
            "length_m": s.length_m,
            "com_local_m": s.com_local_m.tolist(),
            "tracking_source": s.recipe.tracking_source,
        }
        for s in cal.body.segments
    }
    doc["static_tracking_rms_m"] = static_rms
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
