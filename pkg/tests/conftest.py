"""Shared fixtures and oracle helpers.

Synthetic sessions are expensive enough to share: the small noise-free
session is generated once per test run and reused wherever a calibrated
body or real file set is needed.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from wheelcom import anthropometry, pipeline, session as session_io, synth
from wheelcom.geometry import axis_angle_rotation


def random_rotation(rng) -> np.ndarray:
    """Uniformly random proper rotation via a random axis and angle."""
    axis = rng.normal(size=3)
    while np.linalg.norm(axis) < 1e-6:
        axis = rng.normal(size=3)
    return axis_angle_rotation(axis, rng.uniform(0.0, np.pi))


def random_cloud(rng, n_points: int, scale: float = 0.5) -> dict:
    """Labelled point cloud rejected until clearly non-degenerate."""
    while True:
        pts = rng.uniform(-scale, scale, size=(n_points, 3))
        sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if sv[1] > 0.2 * sv[0]:
            return {f"m{i}": pts[i] for i in range(n_points)}


def transform_cloud(points: dict, rotation: np.ndarray, translation) -> dict:
    t = np.asarray(translation, dtype=float)
    return {k: rotation @ v + t for k, v in points.items()}


def uniform_table_doc() -> dict:
    """The packaged synthetic table with every mass fraction forced to 1/15."""
    path = anthropometry.packaged_table_path("synthetic")
    doc = json.loads(path.read_text(encoding="utf-8"))
    for seg in doc["segments"].values():
        for sex_entry in seg.values():
            sex_entry["mass_fraction"] = 1.0 / 15.0
    doc["provenance"] = "uniform test table, 15 equal mass fractions"
    return doc


SMALL_SCENARIO = synth.SyntheticScenario(
    seed=101,
    postures=synth.DEFAULT_POSTURES[:3],
    trials_per_posture=2,
    trial_duration_s=0.5,
)


@pytest.fixture(scope="session")
def small_session_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("small_session")
    truth = synth.generate(SMALL_SCENARIO, out)
    return out, truth


@pytest.fixture(scope="session")
def small_session(small_session_dir):
    out, truth = small_session_dir
    return session_io.load_session(out / "manifest.json"), truth


@pytest.fixture(scope="session")
def small_calibrated(small_session):
    sess, truth = small_session
    return pipeline.calibrate_session(sess), sess, truth
