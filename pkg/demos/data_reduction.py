"""How the simulation's realism changes as the candidate dataset is thinned.

Each pool keeps a seeded random subset of its velocities; the corpus agents are
replayed through the simulator and scored against the clean recordings.

    python demos/data_reduction.py [--ticks 1200] [--seed 0]
"""

import argparse
import warnings

from intersim.corpus import bundled_scenario, bundled_trajectories, corpus_schedule, generate_corpus
from intersim.dataset import build_dataset
from intersim.engine import SpawnSchedule, init_simulation, run
from intersim.metrics import evaluate, record_from_trajectories


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ticks", type=int, default=1200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    warnings.simplefilter("ignore", RuntimeWarning)

    sc = bundled_scenario()
    corpus = generate_corpus(sc)
    full = build_dataset(bundled_trajectories("denoised"), sc.dt, sc)
    schedule = SpawnSchedule([e for e in corpus_schedule(corpus).entries if e.tick < args.ticks - 150])
    gt = record_from_trajectories([c.trajectory for c in corpus], sc.dt)
    gt.rows = [r for r in gt.rows if r[0] < args.ticks]

    print("kept   velocities   velocity diff   steering diff")
    for fraction in (1.0, 0.8, 0.6, 0.4, 0.2):
        ds = full.thinned(fraction, seed=args.seed)
        rec = run(init_simulation(sc, ds, schedule, 0), args.ticks)
        rep = evaluate(rec, gt)
        print(f"{fraction:4.0%}   {ds.size():10d}   {rep.velocity_score:13.4f}   {rep.steering_score:13.4f}")


if __name__ == "__main__":
    main()
