"""End-to-end pipeline behaviour beyond the acceptance criteria: windows,
error reporting and input immutability."""

import hashlib
import json
import shutil

import numpy as np
import pytest

from wheelcom import pipeline
from wheelcom.body import com_trajectory
from wheelcom.clusters import MarkerTrial
from wheelcom.cli import main
from wheelcom.errors import EXIT_CALIBRATION, DegenerateAxis, TrackingFailed


def _hash_tree(root):
    out = {}
    for p in sorted(root.iterdir()):
        if p.is_file():
            out[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


class TestWindows:
    def test_window_override_on_static_trial(self, small_calibrated):
        # Static, noise-free trial: any sub-window averages to the same CoP
        # and CoM.
        cal, sess, _ = small_calibrated
        acq = sess.trials[0]
        full, _ = pipeline.evaluate_trial(cal, acq)
        t0 = float(acq.markers.times[0])
        sub, _ = pipeline.evaluate_trial(cal, acq, window=(t0, t0 + 0.2))
        assert sub.est_ap == pytest.approx(full.est_ap, abs=1e-12)
        assert sub.ref_ml == pytest.approx(full.ref_ml, abs=1e-12)

    def test_cli_window_flag(self, tmp_path, small_session_dir):
        src, _ = small_session_dir
        code = main(
            ["validate", "--manifest", str(src / "manifest.json"),
             "--out", str(tmp_path), "--window", "0.0", "0.25"]
        )
        assert code == 0
        assert (tmp_path / "report.csv").exists()


class TestErrorReporting:
    def test_tracking_failure_names_cluster_and_time(self, small_calibrated):
        cal, sess, _ = small_calibrated
        trial = sess.trials[0].markers
        positions = trial.positions.copy()
        # Occlude all but two wheelchair markers in frame 3.
        wc_labels = [l for l in trial.labels if l.startswith("WC")]
        for l in wc_labels[:-2]:
            positions[3, trial.labels.index(l)] = np.nan
        broken = MarkerTrial(trial.times, trial.labels, positions)
        with pytest.raises(TrackingFailed, match="wheelchair"):
            com_trajectory(cal.body, broken, cal.geometry)

    def test_degenerate_segment_names_segment(self, small_calibrated):
        cal, sess, _ = small_calibrated
        trial = sess.trials[0].markers
        positions = trial.positions.copy()
        # Coincident metacarpal markers destroy the hand plane.
        i2 = trial.labels.index("RMeta2")
        i5 = trial.labels.index("RMeta5")
        positions[:, i5] = positions[:, i2]
        broken = MarkerTrial(trial.times, trial.labels, positions)
        with pytest.raises(DegenerateAxis, match="hand_r"):
            com_trajectory(cal.body, broken, cal.geometry)

    def test_missing_hand_marker_names_label(self, small_calibrated):
        cal, sess, _ = small_calibrated
        trial = sess.trials[0].markers
        positions = trial.positions.copy()
        positions[7, trial.labels.index("LMeta5")] = np.nan
        broken = MarkerTrial(trial.times, trial.labels, positions)
        with pytest.raises(TrackingFailed, match="LMeta5"):
            com_trajectory(cal.body, broken, cal.geometry)

    def test_missing_pelvis_cloud_exits_calibration_code(
        self, tmp_path, small_session_dir
    ):
        src, _ = small_session_dir
        work = tmp_path / "session"
        shutil.copytree(src, work)
        manifest = json.loads((work / "manifest.json").read_text())
        del manifest["pelvis_cloud"]
        (work / "manifest.json").write_text(json.dumps(manifest))
        code = main(
            ["calibrate", "--manifest", str(work / "manifest.json"),
             "--out", str(tmp_path / "out")]
        )
        assert code == EXIT_CALIBRATION


class TestInputImmutability:
    def test_pipeline_never_mutates_inputs(self, tmp_path, small_session_dir):
        src, _ = small_session_dir
        work = tmp_path / "session"
        shutil.copytree(src, work)
        before = _hash_tree(work)
        pipeline.run_pipeline(work / "manifest.json", tmp_path / "out")
        assert _hash_tree(work) == before
