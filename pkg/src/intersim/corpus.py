"""Bundled four-arm crossroad and a synthetic trajectory corpus recorded on it.

The corpus stands in for video-extracted trajectories: independent agents follow
smooth paths with speed profiles that respect curve speeds and the signal plan,
then Gaussian noise imitates tracking jitter. The clean paths double as ground
truth for distribution comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .engine import SpawnEntry, SpawnSchedule
from .scenario import Lane, Scenario, TrafficLight, light_color_at, load_scenario, seconds_remaining
from .trajectory import Trajectory, read_trajectories

ARMS = ("S", "E", "N", "W")
NS_PHASES = (("green", 12.0), ("yellow", 3.0), ("red", 15.0))
EW_PHASES = (("red", 15.0), ("green", 12.0), ("yellow", 3.0))
HALF_BOX = 10.0
ARM_LENGTH = 60.0
EXIT_DISTANCE = 14.0
STOP_LINE_OFFSET = 14.0
CROSSWALK_OFFSET = 12.0
NOISE_SIGMA = 0.15  # tracking jitter of the bundled noisy corpus, metres

# per-kind motion envelope used by the corpus generator
MOTION = {
    "car": dict(cruise=(8.0, 11.0), straight=None, turn_left=(6.0, 9.0), turn_right=(4.5, 7.0), accel=2.5, decel=3.5),
    "bicycle": dict(cruise=(4.0, 6.0), straight=None, turn_left=(3.5, 5.0), turn_right=(3.0, 4.5), accel=1.5, decel=2.5),
    "pedestrian": dict(cruise=(1.1, 1.6), straight=None, turn_left=None, turn_right=None, accel=1.0, decel=1.5),
}


def _rot(k: int):
    c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][k % 4]
    return np.array([[c, -s], [s, c]], dtype=float)


def _turned(points, k):
    return np.asarray(points, dtype=float) @ _rot(k).T


def _arm_phases(arm: str, pedestrian: bool = False):
    north_south = arm in ("S", "N")
    if pedestrian:
        north_south = not north_south
    return NS_PHASES if north_south else EW_PHASES


def crossroad_scenario() -> Scenario:
    """Build the bundled crossroad from its south-arm template rotated onto each arm."""
    lanes, lights = [], []
    ped = ("pedestrian",)
    veh = ("car", "bicycle")
    for k, arm in enumerate(ARMS):
        inbound = _turned([(2.0, -ARM_LENGTH), (2.0, -HALF_BOX)], k)
        outbound = _turned([(-2.0, -HALF_BOX), (-2.0, -ARM_LENGTH)], k)
        lanes.append(Lane.from_centerline(f"in_{arm}", inbound, 4.0, inbound[-1], veh))
        lanes.append(Lane.from_centerline(f"out_{arm}", outbound, 4.0, outbound[0], veh))
        stop = _turned([(0.0, -STOP_LINE_OFFSET), (4.0, -STOP_LINE_OFFSET)], k)
        lights.append(TrafficLight(stop, _arm_phases(arm), {f"in_{arm}"}))
        for tag, xs, curb in (("a", (-7.0, 7.0), -4.0), ("b", (7.0, -7.0), 4.0)):
            cw = _turned([(xs[0], -CROSSWALK_OFFSET), (xs[1], -CROSSWALK_OFFSET)], k)
            lane_id = f"cw_{arm}_{tag}"
            lanes.append(Lane.from_centerline(lane_id, cw, 2.0, cw[0], ped))
            line = _turned([(curb, -CROSSWALK_OFFSET - 1.0), (curb, -CROSSWALK_OFFSET + 1.0)], k)
            lights.append(TrafficLight(line, _arm_phases(arm, pedestrian=True), {lane_id}))
    box = [(-HALF_BOX, -HALF_BOX), (HALF_BOX, -HALF_BOX), (HALF_BOX, HALF_BOX), (-HALF_BOX, HALF_BOX)]
    return Scenario(tuple(lanes), tuple(lights), np.array(box), 10.0, 30.0, {})


def bundled_scenario() -> Scenario:
    with resources.as_file(resources.files("intersim").joinpath("data/crossroad.json")) as p:
        return load_scenario(p)


# -- paths -------------------------------------------------------------------------------

def _arc(center, radius, a0, a1, n=40):
    t = np.linspace(a0, a1, n)
    return np.column_stack((center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)))


def vehicle_path(arm: str, planning: str, exit_distance: float = EXIT_DISTANCE):
    """Centerline path, arc-length curve span and goal for a vehicle entering from ``arm``.

    The goal is the midpoint of the exit lane's boundary with the central area;
    the path runs ``exit_distance`` past the boundary so the exit lane is sampled too.
    """
    k = ARMS.index(arm)
    approach = np.array([(2.0, -ARM_LENGTH), (2.0, -HALF_BOX)])
    if planning == "straight":
        tail = np.array([(2.0, exit_distance)])
        pts = np.vstack((approach, tail))
        curve = None
        goal = (2.0, HALF_BOX)
    elif planning == "turn_left":
        arc = _arc((-HALF_BOX, -HALF_BOX), 12.0, 0.0, math.pi / 2)
        pts = np.vstack((approach, arc[1:], [(-exit_distance, 2.0)]))
        curve = (ARM_LENGTH - HALF_BOX, ARM_LENGTH - HALF_BOX + 12.0 * math.pi / 2)
        goal = (-HALF_BOX, 2.0)
    else:
        arc = _arc((HALF_BOX, -HALF_BOX), 8.0, math.pi, math.pi / 2)
        pts = np.vstack((approach, arc[1:], [(exit_distance, -2.0)]))
        curve = (ARM_LENGTH - HALF_BOX, ARM_LENGTH - HALF_BOX + 8.0 * math.pi / 2)
        goal = (HALF_BOX, -2.0)
    return _turned(pts, k), curve, _turned([goal], k)[0]


def vehicle_goal(arm: str, planning: str, exit_distance: float = EXIT_DISTANCE):
    return vehicle_path(arm, planning, exit_distance)[2]


def crosswalk_path(arm: str, tag: str):
    k = ARMS.index(arm)
    xs = (-7.0, 6.5) if tag == "a" else (7.0, -6.5)
    pts = _turned([(xs[0], -CROSSWALK_OFFSET), (xs[1], -CROSSWALK_OFFSET)], k)
    return pts, None, pts[-1].copy()


class _Polyline:
    def __init__(self, pts):
        self.pts = np.asarray(pts, dtype=float)
        seg = np.diff(self.pts, axis=0)
        self.cum = np.concatenate(([0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))))
        self.length = float(self.cum[-1])

    def at(self, s):
        s = np.clip(s, 0.0, self.length)
        x = np.interp(s, self.cum, self.pts[:, 0])
        y = np.interp(s, self.cum, self.pts[:, 1])
        return np.column_stack((x, y))

    def normal(self, s):
        eps = 0.05
        a, b = self.at(np.maximum(s - eps, 0.0)), self.at(np.minimum(s + eps, self.length))
        d = b - a
        n = np.hypot(d[:, 0], d[:, 1])[:, None]
        d = d / np.where(n > 0, n, 1.0)
        return np.column_stack((-d[:, 1], d[:, 0]))


def drive(path, curve, curve_speed, s_stop, light: TrafficLight | None, start_time: float, cruise: float,
          accel: float, decel: float, dt: float, max_frames: int = 6000) -> np.ndarray:
    """Arc-length samples of one agent obeying curve speed and the signal at ``s_stop``."""
    line = _Polyline(path)
    s, v, t = 0.0, cruise, start_time
    out = [s]
    for _ in range(max_frames):
        limit = cruise
        if curve is not None and curve_speed is not None and s < curve[1]:
            limit = min(limit, math.sqrt(curve_speed ** 2 + 2.0 * decel * max(0.0, curve[0] - s)))
        if light is not None and s < s_stop:
            color = light_color_at(light, t)
            gap = s_stop - s
            must_stop = color == "red" or (color == "yellow" and gap > v * seconds_remaining(light, t))
            if must_stop:
                limit = min(limit, math.sqrt(2.0 * decel * max(0.0, gap - 0.05)))
        v = min(v + accel * dt, max(limit, v - 2.0 * decel * dt))
        v = max(v, 0.0)
        s += v * dt
        t += dt
        out.append(s)
        if s >= line.length:
            break
    return np.asarray(out)


@dataclass
class CorpusAgent:
    trajectory: Trajectory
    planning: str
    goal: np.ndarray
    cruise: float


def _light_of(scenario: Scenario, lane_id: str):
    return scenario.light_for(lane_id)


def generate_corpus(scenario: Scenario | None = None, seed: int = 7, per_lane: dict | None = None,
                    window_s: float = 60.0, wobble: float = 0.12) -> list[CorpusAgent]:
    """Clean synthetic trajectories for every inbound lane of the bundled crossroad."""
    sc = crossroad_scenario() if scenario is None else scenario
    per_lane = per_lane or {"car": 6, "bicycle": 4, "pedestrian": 4}
    rng = np.random.default_rng(seed)
    dt = sc.dt
    out = []
    serial = 0
    plans = ("straight", "turn_left", "turn_right")
    for arm in ARMS:
        jobs = []
        for kind in ("car", "bicycle"):
            for j in range(per_lane[kind]):
                jobs.append((kind, f"in_{arm}", plans[j % 3], None))
        for tag in ("a", "b"):
            for j in range(per_lane["pedestrian"]):
                jobs.append(("pedestrian", f"cw_{arm}_{tag}", "straight", tag))
        for kind, lane_id, planning, tag in jobs:
            m = MOTION[kind]
            if kind == "pedestrian":
                path, curve, goal = crosswalk_path(arm, tag)
                s_stop = 3.0 - 0.5
                curve_speed = None
            else:
                path, curve, goal = vehicle_path(arm, planning)
                s_stop = ARM_LENGTH - STOP_LINE_OFFSET - 1.5
                curve_speed = None if m[planning] is None else float(rng.uniform(*m[planning]))
            cruise = float(rng.uniform(*m["cruise"]))
            start = float(rng.uniform(0.0, window_s))
            start_frame = int(round(start / dt))
            s = drive(path, curve, curve_speed, s_stop, _light_of(sc, lane_id), start_frame * dt, cruise,
                      m["accel"], m["decel"], dt)
            line = _Polyline(path)
            xy = line.at(s)
            # slow lateral drift inside the lane
            phase = rng.uniform(0, 2 * math.pi)
            period = rng.uniform(40.0, 80.0)
            lateral = wobble * np.sin(2 * math.pi * s / period + phase)
            xy = xy + line.normal(s) * lateral[:, None]
            frames = start_frame + np.arange(len(xy))
            traj = Trajectory(f"{kind[0]}{serial:03d}", kind, frames, xy, lane_id)
            out.append(CorpusAgent(traj, planning, goal, cruise))
            serial += 1
    return out


def add_noise(trajectories, sigma: float, seed: int = 11) -> list[Trajectory]:
    rng = np.random.default_rng(seed)
    return [tr.with_positions(tr.xy + rng.normal(0.0, sigma, tr.xy.shape)) for tr in trajectories]


def corpus_schedule(agents: list[CorpusAgent], kinds=None) -> SpawnSchedule:
    """Spawn entries mirroring corpus agents: same lane, planning, goal, start time and cruise speed."""
    entries = []
    for k, a in enumerate(agents):
        tr = a.trajectory
        if kinds is not None and tr.kind not in kinds:
            continue
        entries.append(SpawnEntry(k, int(tr.frames[0]), tr.kind, tr.departure_lane,
                                  (float(a.goal[0]), float(a.goal[1])), a.cruise, 1.3 * a.cruise, a.planning))
    return SpawnSchedule(entries)


def twenty_vehicle_schedule(spacing: int = 75) -> SpawnSchedule:
    """Five cars per arm with a mix of plannings, staggered across arms."""
    plans = ("straight", "turn_left", "turn_right", "straight", "turn_left")
    rows = []
    for j in range(5):
        for k, arm in enumerate(ARMS):
            planning = plans[(j + k) % len(plans)]
            rows.append((j * spacing + k * 10, "car", f"in_{arm}", tuple(vehicle_goal(arm, planning)),
                         9.0, 12.0, planning))
    return SpawnSchedule.from_rows(rows)


def mixed_schedule(n: int = 90, seed: int = 3, horizon_ticks: int = 1000) -> SpawnSchedule:
    """``n`` cars, bicycles and pedestrians spread over the horizon on every entry."""
    rng = np.random.default_rng(seed)
    kinds = rng.choice(["car", "bicycle", "pedestrian"], size=n, p=[0.45, 0.2, 0.35])
    ticks = np.sort(rng.integers(0, max(1, horizon_ticks // 3), size=n))
    rows = []
    for t, kind in zip(ticks, kinds):
        arm = ARMS[int(rng.integers(4))]
        lo, hi = MOTION[kind]["cruise"]
        e1 = float(rng.uniform(lo, hi))
        if kind == "pedestrian":
            tag = "ab"[int(rng.integers(2))]
            goal = crosswalk_path(arm, tag)[2]
            rows.append((int(t), kind, f"cw_{arm}_{tag}", tuple(goal), e1, 1.4 * e1, "straight"))
        else:
            planning = ("straight", "turn_left", "turn_right")[int(rng.integers(3))]
            rows.append((int(t), kind, f"in_{arm}", tuple(vehicle_goal(arm, planning)), e1, 1.3 * e1, planning))
    return SpawnSchedule.from_rows(rows)


def bundled_trajectories(name: str) -> list[Trajectory]:
    """Load the ``ground_truth``, ``noisy`` or ``denoised`` bundled corpus."""
    with resources.as_file(resources.files("intersim").joinpath(f"data/corpus_{name}.csv")) as p:
        return read_trajectories(p)
