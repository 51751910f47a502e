"""Command-line interface.

Verbs: synth (generate a synthetic session), calibrate, com (per-frame CoM
trajectories), validate (full pipeline with reports) and report (recompute
statistics and plots from a per-trial results CSV).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline, reports, session as session_io, synth, validation
from .errors import EXIT_SCHEMA, WheelcomError


def _common_flags(parser: argparse.ArgumentParser, manifest: bool = True) -> None:
    if manifest:
        parser.add_argument("--manifest", required=True, help="path to manifest.json")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--window",
        nargs=2,
        type=float,
        metavar=("T0", "T1"),
        default=None,
        help="averaging window in seconds (default: full trial)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wheelcom",
        description="Whole-body CoM tracking for seated wheelchair users, "
        "with force-plate CoP validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic session")
    p.add_argument("--out", required=True, help="session output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sex", choices=("female", "male"), default="female")
    p.add_argument("--mass", type=float, default=68.0, help="subject mass in kg")
    p.add_argument("--marker-noise", type=float, default=0.0, help="marker noise sigma in m")
    p.add_argument("--force-noise", type=float, default=0.0, help="force noise sigma in N")
    p.add_argument("--duration", type=float, default=2.0, help="trial duration in s")
    p.add_argument("--trials", type=int, default=3, help="trials per posture")

    p = sub.add_parser("calibrate", help="run the calibration and save its summary")
    _common_flags(p)

    p = sub.add_parser("com", help="write per-frame CoM trajectories for all trials")
    _common_flags(p)

    p = sub.add_parser("validate", help="full pipeline: calibrate, compare, report")
    _common_flags(p)

    p = sub.add_parser("report", help="recompute reports from a trial results CSV")
    p.add_argument("--trials", required=True, help="path to trials.csv")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _cmd_synth(args) -> int:
    scenario = synth.SyntheticScenario(
        seed=args.seed,
        sex=args.sex,
        total_mass_kg=args.mass,
        marker_noise_m=args.marker_noise,
        force_noise_n=args.force_noise,
        trial_duration_s=args.duration,
        trials_per_posture=args.trials,
    )
    synth.generate(scenario, args.out)
    print(f"synthetic session written to {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    session = session_io.load_session(args.manifest)
    cal = pipeline.calibrate_session(session)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = pipeline.write_calibration_summary(cal, out / "calibration.json")
    print(f"calibration written to {path}")
    return 0


def _cmd_com(args) -> int:
    session = session_io.load_session(args.manifest)
    cal = pipeline.calibrate_session(session)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .body import com_trajectory

    written = []
    for acq in session.trials:
        traj = com_trajectory(cal.body, acq.markers, cal.geometry)
        name = f"com_{acq.posture.replace(' ', '_')}_{acq.trial_index}.csv"
        written.append(reports.write_com_trajectory(traj, out / name))
    print(f"{len(written)} trajectory files written to {out}")
    return 0


def _cmd_validate(args) -> int:
    window = tuple(args.window) if args.window else None
    report, written = pipeline.run_pipeline(args.manifest, args.out, window=window)
    for s in report.stats:
        print(
            f"{reports.format_posture(s.posture)}: "
            f"AP {1000 * s.accuracy_ap:+.1f} mm (sd {1000 * s.precision_ap:.1f}), "
            f"ML {1000 * s.accuracy_ml:+.1f} mm (sd {1000 * s.precision_ml:.1f}), "
            f"n={s.n}"
        )
    print(f"{len(written)} files written to {args.out}")
    return 0


def _cmd_report(args) -> int:
    results = reports.read_trial_results(args.trials)
    report = validation.build_report(results)
    written = reports.write_outputs(report, [], args.out)
    print(f"{len(written)} files written to {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "com": _cmd_com,
    "validate": _cmd_validate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except WheelcomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
