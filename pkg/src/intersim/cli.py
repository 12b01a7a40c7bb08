"""Command-line entry points: ``denoise``, ``build-dataset``, ``simulate``, ``evaluate``, ``export-data``.

Run ``intersim <command> --help`` (or ``python -m intersim``) for the flags.
"""

from __future__ import annotations

import argparse
import shutil
import sys
import warnings
from importlib import resources
from pathlib import Path

from .dataset import build_dataset, read_dataset, write_dataset
from .denoise import FitConfig, denoise
from .engine import SimConfig, init_simulation, read_record, read_schedule, run, write_record
from .metrics import evaluate, format_report, record_from_trajectories
from .scenario import load_scenario
from .trajectory import TRAJECTORY_FIELDS, read_trajectories, write_trajectories

BUNDLED = ("crossroad.json", "corpus_ground_truth.csv", "corpus_noisy.csv", "corpus_denoised.csv",
           "schedule_twenty_vehicles.csv", "schedule_mixed_90.csv", "mask_table.json")


def _is_trajectory_file(path) -> bool:
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
    return set(TRAJECTORY_FIELDS[:5]) <= set(header)


def _cmd_denoise(args) -> int:
    cfg = FitConfig(w1=args.w1, w2=args.w2, w3=args.w3, w4=args.w4, K=args.k, max_iterations=args.max_iterations)
    trajectories = read_trajectories(args.inp)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        fitted = denoise(trajectories, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_trajectories(fitted, args.out)
    print(f"denoised {len(fitted)} trajectories -> {args.out}")
    return 0


def _cmd_build_dataset(args) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else None
    frame_rate = args.frame_rate if args.frame_rate else (scenario.frame_rate if scenario else 30.0)
    ds = build_dataset(read_trajectories(args.inp), 1.0 / frame_rate, scenario)
    write_dataset(ds, args.out)
    print(f"{ds.size()} velocities in {len(ds.pools)} pools -> {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = SimConfig.from_scenario(scenario, workers=args.workers)
    world = init_simulation(scenario, read_dataset(args.dataset), read_schedule(args.schedule), args.seed, cfg)
    record = run(world, args.ticks)
    write_record(record, args.out)
    print(f"{record.ticks} ticks, {record.spawned} spawned, {record.arrived} arrived, {record.exited} exited, "
          f"{len(record.overlaps)} overlap events; "
          f"avg {record.mean_frame_time * 1e3:.2f} ms/frame, max {record.max_frame_time * 1e3:.2f} ms/frame")
    return 0


def _load_record(path, frame_rate: float):
    if _is_trajectory_file(path):
        return record_from_trajectories(read_trajectories(path), 1.0 / frame_rate)
    return read_record(path)


def _cmd_evaluate(args) -> int:
    kinds = args.kinds.split(",") if args.kinds else None
    report = evaluate(_load_record(args.sim, args.frame_rate), _load_record(args.gt, args.frame_rate),
                      args.vel_bin, args.ang_bin, kinds)
    text = format_report(report)
    if args.out:
        Path(args.out).write_text(text)
    print(f"velocity difference {report.velocity_score:.4f}")
    print(f"steering angle difference {report.steering_score:.4f}")
    return 0


def _cmd_export_data(args) -> int:
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    for name in BUNDLED:
        with resources.as_file(resources.files("intersim").joinpath("data", name)) as src:
            shutil.copyfile(src, dest / name)
        print(dest / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intersim", description="Hybrid data-driven intersection simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("denoise", help="fit B-splines to noisy trajectories")
    d.add_argument("--in", dest="inp", required=True, help="trajectory file")
    d.add_argument("--out", required=True)
    d.add_argument("--k", type=int, default=2, help="neighbours per side in the local centering term")
    d.add_argument("--w1", type=float, default=0.7)
    d.add_argument("--w2", type=float, default=30.0)
    d.add_argument("--w3", type=float, default=20.0)
    d.add_argument("--w4", type=float, default=30.0)
    d.add_argument("--max-iterations", type=int, default=500)
    d.set_defaults(func=_cmd_denoise)

    b = sub.add_parser("build-dataset", help="turn trajectories into candidate velocity pools")
    b.add_argument("--in", dest="inp", required=True, help="denoised trajectory file")
    b.add_argument("--out", required=True)
    b.add_argument("--scenario", help="scenario file; tags samples with the region they were recorded in")
    b.add_argument("--frame-rate", type=float, help="frames per second (default: scenario's, else 30)")
    b.set_defaults(func=_cmd_build_dataset)

    s = sub.add_parser("simulate", help="run the tick loop and write a record")
    s.add_argument("--scenario", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--schedule", required=True)
    s.add_argument("--ticks", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1, help="threads for the decision phase")
    s.set_defaults(func=_cmd_simulate)

    e = sub.add_parser("evaluate", help="velocity and steering-angle distribution differences")
    e.add_argument("--sim", required=True, help="simulation record (or trajectory file)")
    e.add_argument("--gt", required=True, help="ground-truth record or trajectory file")
    e.add_argument("--vel-bin", type=float, default=0.5, help="m/s")
    e.add_argument("--ang-bin", type=float, default=2.0, help="degrees")
    e.add_argument("--kinds", help="comma-separated agent kinds to include")
    e.add_argument("--frame-rate", type=float, default=30.0, help="for trajectory files")
    e.add_argument("--out", help="report file")
    e.set_defaults(func=_cmd_evaluate)

    x = sub.add_parser("export-data", help="copy the bundled scenario, corpus and schedules to a directory")
    x.add_argument("dest")
    x.set_defaults(func=_cmd_export_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"intersim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
