"""One car approaching a red light from 30 m, then released on green.

Prints the car's distance to the stop line and speed once a second.

    python demos/red_light.py
"""

import dataclasses
import warnings

import numpy as np

from intersim.corpus import STOP_LINE_OFFSET, bundled_scenario, bundled_trajectories, vehicle_goal
from intersim.dataset import build_dataset
from intersim.engine import SpawnSchedule, init_simulation, tick

RED_SECONDS = 20.0


def main():
    warnings.simplefilter("ignore", RuntimeWarning)
    sc = bundled_scenario()
    lights = tuple(dataclasses.replace(light, phases=(("red", RED_SECONDS), ("green", 60.0)))
                   if "in_S" in light.applies_to else light for light in sc.lights)
    sc = dataclasses.replace(sc, lights=lights)
    ds = build_dataset(bundled_trajectories("denoised"), sc.dt, sc)
    schedule = SpawnSchedule.from_rows([(0, "car", "in_S", tuple(vehicle_goal("S", "straight")), 9.0, 12.0,
                                         "straight")])
    world = init_simulation(sc, ds, schedule, seed=0)
    tick(world)
    world.agents[0].position = np.array([2.0, -STOP_LINE_OFFSET - 30.0])

    fps = int(round(sc.frame_rate))
    for t in range(1, int((RED_SECONDS + 15) * fps)):
        tick(world)
        car = world.agents.get(0)
        if car is None:
            print(f"t={t / fps:5.1f} s  car reached its goal")
            break
        if t % fps == 0:
            light = "red" if t < RED_SECONDS * fps else "green"
            gap = -STOP_LINE_OFFSET - (car.position[1] + car.radius)
            print(f"t={t / fps:5.1f} s  {light:5s}  {gap:6.2f} m to the line  {np.hypot(*car.velocity):5.2f} m/s")


if __name__ == "__main__":
    main()
