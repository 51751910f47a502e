"""Synthetic session generator: force distribution, self-consistency,
determinism and the noise model."""

import dataclasses

import numpy as np
import pytest

from conftest import SMALL_SCENARIO
from wheelcom import session as session_io, synth
from wheelcom.errors import InfeasibleCoM
from wheelcom.forceplate import GRAVITY_M_S2, compute_zero_offset

CONTACTS_XZ = np.array([[-0.05, -0.28], [-0.05, 0.28], [0.45, -0.28], [0.45, 0.28]])


class TestDistributeForces:
    def test_centroid_gives_equal_quarters(self):
        # The symmetric solution is the unique minimum-norm distribution.
        w = 68.0 * GRAVITY_M_S2
        f = synth.distribute_forces(w, CONTACTS_XZ, [0.2, 0.0])
        assert np.max(np.abs(f - w / 4)) < 1e-9

    def test_constraints_hold_for_interior_targets(self):
        rng = np.random.default_rng(2)
        w = 70.0 * GRAVITY_M_S2
        for _ in range(300):
            target = np.array(
                [rng.uniform(-0.049, 0.449), rng.uniform(-0.279, 0.279)]
            )
            f = synth.distribute_forces(w, CONTACTS_XZ, target)
            assert np.all(f >= -1e-12)
            assert f.sum() == pytest.approx(w, abs=1e-9)
            assert (f @ CONTACTS_XZ[:, 0]) / f.sum() == pytest.approx(
                target[0], abs=1e-12
            )
            assert (f @ CONTACTS_XZ[:, 1]) / f.sum() == pytest.approx(
                target[1], abs=1e-12
            )

    def test_corner_target_single_support(self):
        w = 500.0
        f = synth.distribute_forces(w, CONTACTS_XZ, [0.45, 0.28])
        assert f[3] == pytest.approx(w, abs=1e-9)
        assert np.max(np.abs(f[:3])) < 1e-9

    def test_infeasible_outside_hull(self):
        with pytest.raises(InfeasibleCoM):
            synth.distribute_forces(500.0, CONTACTS_XZ, [0.60, 0.0])
        with pytest.raises(InfeasibleCoM):
            synth.distribute_forces(500.0, CONTACTS_XZ, [0.2, 0.35])

    def test_minimum_norm_among_random_feasible_solutions(self):
        # No random feasible distribution may have a smaller norm.
        rng = np.random.default_rng(3)
        w = 650.0
        target = np.array([0.12, -0.08])
        best = synth.distribute_forces(w, CONTACTS_XZ, target)
        a = np.vstack([np.ones(4), CONTACTS_XZ[:, 0], CONTACTS_XZ[:, 1]])
        b = np.array([w, w * target[0], w * target[1]])
        null = np.linalg.svd(a)[2][-1]  # 1D null space of the 3x4 system
        for _ in range(500):
            candidate = best + rng.uniform(-200, 200) * null
            if np.all(candidate >= 0):
                assert np.linalg.norm(candidate) >= np.linalg.norm(best) - 1e-9


class TestGeneratedSessions:
    def test_same_seed_byte_identical(self, tmp_path):
        scenario = dataclasses.replace(SMALL_SCENARIO, seed=9)
        a = tmp_path / "a"
        b = tmp_path / "b"
        synth.generate(scenario, a)
        synth.generate(scenario, b)
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_different_seed_differs(self, tmp_path):
        synth.generate(dataclasses.replace(SMALL_SCENARIO, seed=1), tmp_path / "a")
        synth.generate(dataclasses.replace(SMALL_SCENARIO, seed=2), tmp_path / "b")
        assert (tmp_path / "a/manifest.json").read_bytes() != (
            tmp_path / "b/manifest.json"
        ).read_bytes() or (tmp_path / "a/neutral_markers.csv").read_bytes() != (
            tmp_path / "b/neutral_markers.csv"
        ).read_bytes()

    def test_forces_match_truth_and_weight(self, small_session_dir):
        out, truth = small_session_dir
        sess = session_io.load_session(out / "manifest.json")
        offsets = compute_zero_offset(sess.empty_forces)
        weight = truth.total_mass_kg * GRAVITY_M_S2
        by_key = {(t.posture, t.trial_index): t for t in truth.trials}
        for acq in sess.trials:
            zeroed = acq.forces.forces - offsets.values
            expected = by_key[(acq.posture, acq.trial_index)].subject_forces_n
            assert np.max(np.abs(zeroed - expected)) < 1e-9
            assert np.all(expected >= -1e-12)
            assert expected.sum() == pytest.approx(weight, abs=1e-9)

    def test_cop_of_true_forces_equals_projection(self, small_session_dir):
        _, truth = small_session_dir
        x = truth.contacts_wheelchair[:, 0]
        z = truth.contacts_wheelchair[:, 2]
        for t in truth.trials:
            f = t.subject_forces_n
            ap = (f @ x) / f.sum()
            ml = (f @ z) / f.sum()
            assert ap == pytest.approx(t.ground_projection[0], abs=1e-12)
            assert ml == pytest.approx(t.ground_projection[1], abs=1e-12)

    def test_markers_rigid_within_trial(self, small_session):
        # Noise-free static trials: every marker is constant, and pairwise
        # distances within a cluster are constant to 1e-12.
        sess, _ = small_session
        trial = sess.trials[0].markers
        for cluster, labels in sess.cluster_labels.items():
            tracks = [trial.get(l) for l in labels]
            for i in range(len(tracks)):
                for j in range(i + 1, len(tracks)):
                    d = np.linalg.norm(tracks[i] - tracks[j], axis=1)
                    assert d.max() - d.min() < 1e-12

    def test_ground_truth_round_trip(self, small_session_dir):
        out, truth = small_session_dir
        loaded = synth.load_ground_truth(out / "ground_truth.json")
        assert loaded.total_mass_kg == truth.total_mass_kg
        assert np.array_equal(loaded.contacts_wheelchair, truth.contacts_wheelchair)
        for a, b in zip(loaded.trials, truth.trials):
            assert a.posture == b.posture
            assert np.array_equal(a.com_wheelchair, b.com_wheelchair)
            assert np.array_equal(a.subject_forces_n, b.subject_forces_n)

    def test_noise_sigma_empirical(self, tmp_path):
        # Per-marker deviations from the per-marker mean must reproduce the
        # configured sigma within 5%.
        sigma = 0.002
        scenario = synth.SyntheticScenario(
            seed=42,
            postures=synth.DEFAULT_POSTURES[:1],
            trials_per_posture=1,
            trial_duration_s=4.0,
            marker_noise_m=sigma,
            posture_jitter_deg=0.0,
        )
        synth.generate(scenario, tmp_path)
        sess = session_io.load_session(tmp_path / "manifest.json")
        pos = sess.trials[0].markers.positions
        deviations = pos - pos.mean(axis=0, keepdims=True)
        est = float(np.std(deviations))
        assert abs(est - sigma) < 0.05 * sigma

    def test_zero_noise_means_constant_markers(self, small_session):
        sess, _ = small_session
        pos = sess.neutral.markers.positions
        assert np.max(pos.max(axis=0) - pos.min(axis=0)) == 0.0

    def test_infeasible_posture_raises(self, tmp_path):
        # A wheelchair with a very short wheelbase cannot support a full
        # trunk extension: the CoM projection leaves the contact polygon.
        narrow = synth.WheelchairLayout(
            wheel_centres=synth.WHEEL_CENTRES,
            contacts={
                "Contact1": np.array([0.19, 0.0, -0.28]),
                "Contact2": np.array([0.19, 0.0, 0.28]),
                "Contact3": np.array([0.26, 0.0, -0.28]),
                "Contact4": np.array([0.26, 0.0, 0.28]),
            },
            markers=synth.WHEELCHAIR_MARKERS,
            com_xz=(0.22, 0.0),
        )
        scenario = synth.SyntheticScenario(
            seed=1, postures=synth.DEFAULT_POSTURES[:1], trials_per_posture=1,
            posture_jitter_deg=0.0, trial_duration_s=0.2, wheelchair=narrow,
        )
        with pytest.raises(InfeasibleCoM):
            synth.generate(scenario, tmp_path)
