"""A left-turning car whose dataset only knows one straight-ahead velocity.

With synthesised velocities the car finds its way round the corner and the pool
grows; without them it can only keep going straight.

    python demos/degenerate_data.py
"""

import dataclasses
import math
import warnings

from intersim.corpus import bundled_scenario, vehicle_goal
from intersim.dataset import CandidateVelocityDataset, Pool
from intersim.engine import SimConfig, SpawnSchedule, init_simulation, tick


def drive(sc, use_supplement):
    ds = CandidateVelocityDataset({("car", "in_S"): Pool([(0.0, 9.0)])})
    schedule = SpawnSchedule.from_rows([(0, "car", "in_S", tuple(vehicle_goal("S", "turn_left")), 9.0, 12.0,
                                         "turn_left")])
    world = init_simulation(sc, ds, schedule, 0, SimConfig.from_scenario(sc, use_supplement=use_supplement))
    print(f"\nsynthesised velocities {'on' if use_supplement else 'off'}")
    for t in range(300):
        tick(world)
        car = world.agents.get(0)
        if car is None:
            print(f"  tick {t}: arrived")
            break
        if t % 30 == 0:
            heading = math.degrees(math.atan2(car.velocity[1], car.velocity[0]))
            print(f"  tick {t:3d}  at ({car.position[0]:6.1f}, {car.position[1]:6.1f})  heading {heading:6.1f} deg")
    print(f"  pool size at the end: {len(world.dataset.pool('car', 'in_S'))}")


def main():
    warnings.simplefilter("ignore", RuntimeWarning)
    sc = dataclasses.replace(bundled_scenario(), lights=())
    drive(sc, True)
    drive(sc, False)


if __name__ == "__main__":
    main()
