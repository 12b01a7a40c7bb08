"""Rebuild the files under ``src/intersim/data`` from the synthetic corpus generator.

The scenario, the clean, noisy and denoised corpus, and the two spawn schedules are all
deterministic, so rerunning this script reproduces the shipped files exactly.
"""

from pathlib import Path

from intersim.corpus import (add_noise, crossroad_scenario, generate_corpus, mixed_schedule,
                             twenty_vehicle_schedule, NOISE_SIGMA)
from intersim.denoise import denoise
from intersim.engine import write_schedule
from intersim.scenario import save_scenario
from intersim.trajectory import write_trajectories

DATA = Path(__file__).resolve().parents[1] / "src" / "intersim" / "data"


def main():
    sc = crossroad_scenario()
    save_scenario(sc, DATA / "crossroad.json")
    agents = generate_corpus(sc)
    clean = [a.trajectory for a in agents]
    write_trajectories(clean, DATA / "corpus_ground_truth.csv")
    noisy = add_noise(clean, NOISE_SIGMA)
    write_trajectories(noisy, DATA / "corpus_noisy.csv")
    write_trajectories(denoise(noisy), DATA / "corpus_denoised.csv")
    write_schedule(twenty_vehicle_schedule(), DATA / "schedule_twenty_vehicles.csv")
    write_schedule(mixed_schedule(), DATA / "schedule_mixed_90.csv")
    for p in sorted(DATA.iterdir()):
        print(f"{p.name:32s} {p.stat().st_size:>9d} bytes")


if __name__ == "__main__":
    main()
