"""Calibration, wheelchair frame and whole-body CoM computation.

The synthetic session fixture provides real files plus the generator's
ground truth; noise-free runs must reproduce that truth to tracking
precision.
"""

import dataclasses
import math

import numpy as np
import pytest

from conftest import SMALL_SCENARIO, uniform_table_doc
from wheelcom import body as body_model
from wheelcom import clusters, pipeline, session as session_io, synth
from wheelcom.body import (
    ComSample,
    Subject,
    WheelchairGeometry,
    average_static,
    calibrate_body,
    com_frame,
    com_trajectory,
    wheelchair_lcs,
)
from wheelcom.clusters import Frame
from wheelcom.errors import CalibrationError, DegenerateGeometry, EmptyWindow
from wheelcom.geometry import RigidTransform, axis_angle_rotation, rotation_distance


@pytest.fixture
def geometry():
    return WheelchairGeometry(
        cluster="wheelchair",
        rear_wheel_left=[0.0, 0.30, -0.28],
        rear_wheel_right=[0.0, 0.30, 0.28],
        contacts=np.array(
            [[-0.05, 0, -0.28], [-0.05, 0, 0.28], [0.45, 0, -0.28], [0.45, 0, 0.28]]
        ),
    )


class TestWheelchairLcs:
    def test_canonical_placement(self, geometry):
        lcs = wheelchair_lcs(geometry, RigidTransform.identity())
        assert np.allclose(lcs.rotation, np.eye(3), atol=1e-12)
        assert np.allclose(lcs.translation, 0.0, atol=1e-12)

    def test_yawed_wheelchair(self, geometry):
        yaw = axis_angle_rotation([0, 1, 0], np.pi / 2)
        pose = RigidTransform(yaw, np.array([1.0, 0.0, 2.0]))
        lcs = wheelchair_lcs(geometry, pose)
        assert rotation_distance(lcs.rotation, yaw) < 1e-9
        mid = pose.apply(0.5 * (geometry.rear_wheel_left + geometry.rear_wheel_right))
        assert np.allclose(lcs.translation, [mid[0], 0.0, mid[2]], atol=1e-12)

    def test_translation_equivariance(self, geometry):
        t = np.array([0.7, 0.0, -1.1])
        base = wheelchair_lcs(geometry, RigidTransform.identity())
        moved = wheelchair_lcs(geometry, RigidTransform(np.eye(3), t))
        assert np.allclose(moved.rotation, base.rotation, atol=1e-12)
        assert np.allclose(moved.translation, base.translation + t, atol=1e-12)

    def test_degenerate_wheels(self):
        with pytest.raises(DegenerateGeometry):
            WheelchairGeometry(
                "wheelchair", [0, 0.3, 0], [0, 0.3, 0],
                np.array([[0, 0, 0], [1, 0, 0], [0, 0, 1], [1, 0, 1.0]]),
            )


class TestCalibration:
    def test_extended_points_match_ground_truth(self, small_calibrated):
        # Every calibrated point, reconstructed in the static trial, must
        # land on the generator's true landmark.
        cal, sess, truth = small_calibrated
        recon = body_model._TrialReconstruction(
            cal.body.body_clusters, sess.neutral.markers
        )
        checked = 0
        for name, cluster in cal.body.body_clusters.items():
            for label in cluster.extended_points:
                expected = truth.neutral_landmarks_global[label]
                got = recon.point(label).mean(axis=0)
                assert np.max(np.abs(got - expected)) < 1e-9, label
                checked += 1
        assert checked > 30

    def test_uniform_table_masses(self, tmp_path):
        scenario = dataclasses.replace(
            SMALL_SCENARIO,
            seed=7,
            total_mass_kg=75.0,
            postures=synth.DEFAULT_POSTURES[:1],
            trials_per_posture=1,
            table=uniform_table_doc(),
        )
        synth.generate(scenario, tmp_path)
        sess = session_io.load_session(tmp_path / "manifest.json")
        cal = pipeline.calibrate_session(sess)
        masses = [s.mass_kg for s in cal.body.segments]
        assert all(m == 5.0 for m in masses)
        assert math.fsum(masses) == 75.0

    def test_missing_pelvis_cloud_annotated_step_2(self, small_session):
        sess, _ = small_session
        subject = Subject(sess.subject_sex, 68.0)
        with pytest.raises(CalibrationError, match="step 2"):
            calibrate_body(sess.calibration_recordings(), None, sess.table, subject)

    def test_mass_conservation(self, small_calibrated):
        cal, _, _ = small_calibrated
        total = math.fsum(s.mass_kg for s in cal.body.segments)
        m = cal.body.subject.total_mass_kg
        assert abs(total - m) <= 1e-12 * m

    def test_broken_masses_rejected(self, small_calibrated):
        cal, _, _ = small_calibrated
        bad = list(cal.body.segments)
        bad[0] = dataclasses.replace(bad[0], mass_kg=bad[0].mass_kg * 2)
        with pytest.raises(CalibrationError):
            dataclasses.replace(cal.body, segments=tuple(bad))


def _reweighted(body, weights):
    total = body.subject.total_mass_kg
    scale = total / math.fsum(weights)
    segments = tuple(
        dataclasses.replace(s, mass_kg=w * scale)
        for s, w in zip(body.segments, weights)
    )
    return dataclasses.replace(body, segments=segments)


class TestComFrame:
    def test_single_mass_body(self, small_calibrated):
        # All mass on one segment: the whole-body CoM is that segment's CoM,
        # so other segments' parameters must not matter.
        cal, sess, _ = small_calibrated
        frame = sess.trials[0].markers.frame(0)
        n = len(cal.body.segments)
        single = _reweighted(cal.body, [1.0] + [1e-15] * (n - 1))
        expected = com_frame(single, frame, cal.geometry)

        altered_segments = list(cal.body.segments)
        for i in range(1, n):
            altered_segments[i] = dataclasses.replace(
                altered_segments[i],
                com_local_m=altered_segments[i].com_local_m + np.array([9.9, 9.9, 9.9]),
            )
        altered = dataclasses.replace(cal.body, segments=tuple(altered_segments))
        altered_single = _reweighted(altered, [1.0] + [1e-15] * (n - 1))
        got = com_frame(altered_single, frame, cal.geometry)
        assert np.max(np.abs(got.com - expected.com)) < 1e-9

    def test_two_equal_masses_average(self, small_calibrated):
        cal, sess, _ = small_calibrated
        frame = sess.trials[0].markers.frame(0)
        n = len(cal.body.segments)
        eps = 1e-15
        only_a = _reweighted(cal.body, [1.0] + [eps] * (n - 1))
        only_b = _reweighted(cal.body, [eps, 1.0] + [eps] * (n - 2))
        both = _reweighted(cal.body, [1.0, 1.0] + [eps] * (n - 2))
        com_a = com_frame(only_a, frame, cal.geometry).com
        com_b = com_frame(only_b, frame, cal.geometry).com
        com_ab = com_frame(both, frame, cal.geometry).com
        assert np.max(np.abs(com_ab - 0.5 * (com_a + com_b))) < 1e-9

    def test_matches_ground_truth_per_trial(self, small_calibrated):
        cal, sess, truth = small_calibrated
        by_key = {(t.posture, t.trial_index): t for t in truth.trials}
        for acq in sess.trials:
            traj = com_trajectory(cal.body, acq.markers, cal.geometry)
            mean = traj.com.mean(axis=0)
            expected = by_key[(acq.posture, acq.trial_index)].com_wheelchair
            assert np.max(np.abs(mean - expected)) < 1e-9

    def test_com_frame_matches_trajectory(self, small_calibrated):
        cal, sess, _ = small_calibrated
        trial = sess.trials[0].markers
        traj = com_trajectory(cal.body, trial, cal.geometry)
        sample = com_frame(cal.body, trial.frame(5), cal.geometry)
        assert np.max(np.abs(sample.com - traj.com[5])) < 1e-12

    def test_frame_invariance_under_global_motion(self, small_calibrated):
        # Moving the whole scene rigidly moves the wheelchair frame with it.
        # The frame keeps y along gravity and its origin on the ground, so
        # the motions under which it can follow the markers are yaws about
        # the vertical plus horizontal translations.
        cal, sess, _ = small_calibrated
        rng = np.random.default_rng(55)
        frame = sess.trials[2].markers.frame(0)
        base = com_frame(cal.body, frame, cal.geometry)
        for _ in range(10):
            q = axis_angle_rotation([0, 1, 0], rng.uniform(-np.pi, np.pi))
            t = np.array([rng.uniform(-3, 3), 0.0, rng.uniform(-3, 3)])
            moved = Frame(frame.time, {k: q @ v + t for k, v in frame.markers.items()})
            got = com_frame(cal.body, moved, cal.geometry)
            assert np.max(np.abs(got.com - base.com)) < 1e-9

    def test_vertical_shift_moves_only_com_height(self, small_calibrated):
        # Lifting the scene keeps the ground projection and raises the CoM
        # by exactly the shift (the frame origin stays on the ground plane).
        cal, sess, _ = small_calibrated
        frame = sess.trials[2].markers.frame(0)
        base = com_frame(cal.body, frame, cal.geometry)
        dy = 0.37
        moved = Frame(
            frame.time, {k: v + np.array([0.0, dy, 0.0]) for k, v in frame.markers.items()}
        )
        got = com_frame(cal.body, moved, cal.geometry)
        assert np.max(np.abs(np.array(got.ground_projection) - base.ground_projection)) < 1e-9
        assert got.com[1] - base.com[1] == pytest.approx(dy, abs=1e-9)

    def test_wheelchair_bound_scene_constant(self, small_calibrated):
        # Whole scene rigid with the wheelchair: wheelchair-frame CoM must be
        # constant across frames.
        cal, sess, _ = small_calibrated
        rng = np.random.default_rng(56)
        base = sess.neutral.markers.frame(0)
        frames = []
        for i in range(8):
            q = axis_angle_rotation([0, 1, 0], rng.uniform(-np.pi, np.pi))
            t = np.array([rng.uniform(-2, 2), 0.0, rng.uniform(-2, 2)])
            frames.append(
                Frame(i / 120, {k: q @ v + t for k, v in base.markers.items()})
            )
        trial = clusters.MarkerTrial.from_frames(frames)
        traj = com_trajectory(cal.body, trial, cal.geometry)
        spread = traj.com.max(axis=0) - traj.com.min(axis=0)
        assert np.max(spread) < 1e-12

    def test_ground_projection_drops_y(self, small_calibrated):
        cal, sess, _ = small_calibrated
        sample = com_frame(cal.body, sess.trials[0].markers.frame(0), cal.geometry)
        ap, ml = sample.ground_projection
        assert ap == sample.com[0]
        assert ml == sample.com[2]


class TestAverageStatic:
    def test_constant_samples(self):
        samples = [ComSample(t / 120, [0.2, 0.5, -0.1]) for t in range(240)]
        avg = average_static(samples, (0.0, 2.0))
        assert np.allclose(avg.com, [0.2, 0.5, -0.1], atol=1e-15)
        assert avg.time == 1.0

    def test_mean_of_two(self):
        samples = [ComSample(0.0, [0.1, 0.5, 0.0]), ComSample(1.0, [0.3, 0.5, 0.2])]
        avg = average_static(samples, (0.0, 1.0))
        assert np.allclose(avg.com, [0.2, 0.5, 0.1], atol=1e-15)

    def test_sinusoid_over_integer_periods(self):
        # Zero-mean sinusoid at 2 Hz over exactly 2 s plus an offset: the
        # analytic mean is the offset.
        offset = np.array([0.21, 0.48, -0.03])
        times = np.arange(240) / 120.0
        samples = [
            ComSample(t, offset + 0.05 * np.sin(2 * np.pi * 2.0 * t) * np.ones(3))
            for t in times
        ]
        avg = average_static(samples, (0.0, times[-1]))
        assert np.max(np.abs(avg.com - offset)) < 1e-9

    def test_window_selection(self):
        samples = [ComSample(float(t), [float(t), 0.0, 0.0]) for t in range(5)]
        avg = average_static(samples, (1.0, 3.0))
        assert avg.com[0] == 2.0

    def test_empty_window(self):
        with pytest.raises(EmptyWindow):
            average_static([ComSample(0.0, [0, 0, 0])], (1.0, 2.0))


class TestContactsInWheelchair:
    def test_contacts_recovered_in_wheelchair_frame(self, small_calibrated):
        # Generator placed the contacts at the documented rectangle.
        cal, _, truth = small_calibrated
        assert np.max(np.abs(cal.contacts_wc - truth.contacts_wheelchair)) < 1e-9
