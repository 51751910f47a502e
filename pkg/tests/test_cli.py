"""Command-line interface: verbs, outputs and exit codes."""

import json

import pytest

from wheelcom.cli import main
from wheelcom.errors import EXIT_SCHEMA


@pytest.fixture(scope="module")
def cli_session(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_session")
    code = main(
        [
            "synth", "--out", str(out), "--seed", "21",
            "--duration", "0.4", "--trials", "1",
        ]
    )
    assert code == 0
    return out


class TestSynthVerb:
    def test_session_files_exist(self, cli_session):
        for name in ("manifest.json", "probing.json", "pelvis_cloud.json",
                     "neutral_markers.csv", "ground_truth.json"):
            assert (cli_session / name).exists()


class TestCalibrateVerb:
    def test_writes_summary(self, cli_session, tmp_path):
        code = main(
            ["calibrate", "--manifest", str(cli_session / "manifest.json"),
             "--out", str(tmp_path)]
        )
        assert code == 0
        doc = json.loads((tmp_path / "calibration.json").read_text())
        assert len(doc["segments"]) == 15
        assert "wheelchair" in doc["clusters"]
        assert "LPSIS" in doc["clusters"]["wheelchair"]["extended_points"]


class TestComVerb:
    def test_writes_trajectories(self, cli_session, tmp_path):
        code = main(
            ["com", "--manifest", str(cli_session / "manifest.json"),
             "--out", str(tmp_path)]
        )
        assert code == 0
        files = sorted(p.name for p in tmp_path.glob("com_*.csv"))
        assert len(files) == 9


class TestValidateVerb:
    def test_full_pipeline(self, cli_session, tmp_path, capsys):
        code = main(
            ["validate", "--manifest", str(cli_session / "manifest.json"),
             "--out", str(tmp_path)]
        )
        assert code == 0
        assert (tmp_path / "report.csv").exists()
        assert (tmp_path / "bland_altman_ap.svg").exists()
        out = capsys.readouterr().out
        assert "Neutral" in out

    def test_byte_identical_reruns(self, cli_session, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert main(
                ["validate", "--manifest", str(cli_session / "manifest.json"),
                 "--out", str(out)]
            ) == 0
        for pa in sorted(a.iterdir()):
            assert pa.read_bytes() == (b / pa.name).read_bytes(), pa.name


class TestReportVerb:
    def test_recompute_from_trials_csv(self, cli_session, tmp_path):
        first = tmp_path / "first"
        assert main(
            ["validate", "--manifest", str(cli_session / "manifest.json"),
             "--out", str(first)]
        ) == 0
        second = tmp_path / "second"
        assert main(
            ["report", "--trials", str(first / "trials.csv"), "--out", str(second)]
        ) == 0
        assert (second / "report.csv").read_bytes() == (first / "report.csv").read_bytes()


class TestExitCodes:
    def test_missing_manifest_is_schema_exit(self, tmp_path, capsys):
        code = main(
            ["validate", "--manifest", str(tmp_path / "nope.json"),
             "--out", str(tmp_path)]
        )
        assert code == EXIT_SCHEMA
        assert "error:" in capsys.readouterr().err

    def test_schema_violation_exit(self, cli_session, tmp_path, capsys):
        import shutil

        work = tmp_path / "session"
        shutil.copytree(cli_session, work)
        manifest = json.loads((work / "manifest.json").read_text())
        manifest["trials"][0]["posture"] = "unknown pose"
        (work / "manifest.json").write_text(json.dumps(manifest))
        code = main(
            ["validate", "--manifest", str(work / "manifest.json"),
             "--out", str(tmp_path / "out")]
        )
        assert code == EXIT_SCHEMA
