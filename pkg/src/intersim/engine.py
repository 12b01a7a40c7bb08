"""Tick loop: spawn, decide from a frozen snapshot, commit in id order, despawn, record."""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .adaptive import (
    AdjustmentContext,
    adjust_guidance_weight,
    adjust_velocity_weights,
    apply_light_policy,
    short_term_influence,
)
from .dataset import CandidateVelocityDataset, region_of
from .energy import (
    KIND_RADIUS,
    PLANNINGS,
    AgentState,
    EnergyModel,
    MaskTable,
    Neighbor,
    default_weights,
    guidance_direction,
    pack_neighbors,
)
from .scenario import KINDS, Scenario, SpatialGrid, in_central_area, light_color_at, neighbors_of, seconds_remaining
from .selection import AgentHalted, IndicatorThresholds, SupplementConfig, commit_selection, select_velocity

SCHEDULE_FIELDS = ("agent_id", "tick", "kind", "departure_lane", "goal_x", "goal_y", "e1", "e2", "planning")
RECORD_FIELDS = ("tick", "agent_id", "kind", "x", "y", "vx", "vy", "origin")


class ConfigError(ValueError):
    pass


# -- schedule ------------------------------------------------------------------------

@dataclass(frozen=True)
class SpawnEntry:
    agent_id: int
    tick: int
    kind: str
    departure_lane: str
    goal: tuple
    e1: float
    e2: float
    planning: str


@dataclass
class SpawnSchedule:
    entries: list = field(default_factory=list)

    def __post_init__(self):
        self.entries = list(self.entries)
        ids = [e.agent_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate agent ids in schedule")
        bad = [e.agent_id for e in self.entries if e.tick < 0]
        if bad:
            raise ConfigError(f"negative spawn ticks for agents {bad}")

    @classmethod
    def from_rows(cls, rows) -> "SpawnSchedule":
        """Build from ``(tick, kind, lane, goal, e1, e2, planning)`` tuples; ids follow row order."""
        return cls([SpawnEntry(k, int(t), kind, lane, (float(g[0]), float(g[1])), float(e1), float(e2), plan)
                    for k, (t, kind, lane, g, e1, e2, plan) in enumerate(rows)])

    def __len__(self):
        return len(self.entries)


def read_schedule(path) -> SpawnSchedule:
    entries = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.DictReader(fh)):
            aid = row.get("agent_id")
            entries.append(SpawnEntry(
                int(aid) if aid not in (None, "") else k,
                int(row["tick"]), row["kind"], row["departure_lane"],
                (float(row["goal_x"]), float(row["goal_y"])),
                float(row["e1"]), float(row["e2"]), row["planning"],
            ))
    return SpawnSchedule(entries)


def write_schedule(schedule: SpawnSchedule, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCHEDULE_FIELDS)
        for e in schedule.entries:
            w.writerow((e.agent_id, e.tick, e.kind, e.departure_lane, repr(e.goal[0]), repr(e.goal[1]),
                        repr(e.e1), repr(e.e2), e.planning))


# -- configuration and world -----------------------------------------------------------

@dataclass
class SimConfig:
    thresholds: IndicatorThresholds = field(default_factory=IndicatorThresholds)
    supplement: SupplementConfig = field(default_factory=SupplementConfig)
    window: int = 200
    perception_radius: float = 20.0
    arrival_radius: float = 0.5
    exit_margin: float = 5.0
    stopped_speed: float = 0.05
    use_supplement: bool = True
    contact_guard: bool = True
    route_guard: bool = True
    contact_margin: float = 0.05
    stall_check: bool = True
    adaptive: bool = True
    regional_candidates: bool = True
    spawn_jitter: float = 0.0
    workers: int = 1
    time_interactions: bool = False
    w_g_max_factor: float = 10.0
    dis_floor: float = 0.5
    weight_overrides: dict = field(default_factory=dict)
    mask: MaskTable | None = None

    @classmethod
    def from_scenario(cls, scenario: Scenario, **overrides) -> "SimConfig":
        """Defaults overlaid with the scenario's ``config`` block, then ``overrides``."""
        doc = dict(scenario.config)
        kw = {}
        if "thresholds" in doc:
            kw["thresholds"] = IndicatorThresholds(**doc["thresholds"])
        if "supplement" in doc:
            kw["supplement"] = SupplementConfig(**doc["supplement"])
        if "mask" in doc:
            kw["mask"] = MaskTable.from_dict(doc["mask"])
        for key in ("window", "perception_radius", "arrival_radius", "exit_margin", "stopped_speed", "spawn_jitter",
                    "w_g_max_factor", "dis_floor", "weight_overrides", "use_supplement", "adaptive",
                    "regional_candidates", "contact_guard", "route_guard", "contact_margin", "stall_check"):
            if key in doc:
                kw[key] = doc[key]
        kw.update(overrides)
        return cls(**kw)


@dataclass
class SimulationRecord:
    rows: list = field(default_factory=list)
    frame_times: list = field(default_factory=list)
    interaction_times: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)
    spawned: int = 0
    arrived: int = 0
    exited: int = 0
    halted: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)  # footer values of a record read back from file

    @property
    def ticks(self) -> int:
        return len(self.frame_times) if self.frame_times else int(self.summary.get("ticks", 0))

    @property
    def max_frame_time(self) -> float:
        return max(self.frame_times) if self.frame_times else float(self.summary.get("max_seconds_per_frame", 0.0))

    @property
    def mean_frame_time(self) -> float:
        if self.frame_times:
            return float(np.mean(self.frame_times))
        return float(self.summary.get("avg_seconds_per_frame", 0.0))

    def trajectories(self) -> dict:
        """Per-agent ``(ticks, positions, velocities)`` arrays."""
        acc: dict = {}
        for t, aid, kind, x, y, vx, vy, _ in self.rows:
            acc.setdefault(aid, (kind, []))[1].append((t, x, y, vx, vy))
        out = {}
        for aid, (kind, samples) in acc.items():
            arr = np.asarray(samples, dtype=float)
            out[aid] = (kind, arr[:, 0].astype(int), arr[:, 1:3], arr[:, 3:5])
        return out


@dataclass
class World:
    scenario: Scenario
    dataset: CandidateVelocityDataset
    schedule: SpawnSchedule
    config: SimConfig
    model: EnergyModel
    rng: np.random.Generator
    tick_index: int = 0
    agents: dict = field(default_factory=dict)
    pending: list = field(default_factory=list)
    arrived: list = field(default_factory=list)
    exited: list = field(default_factory=list)
    record: SimulationRecord = field(default_factory=SimulationRecord)
    snapshot_hashes: list | None = None

    @property
    def spawned(self) -> int:
        return self.record.spawned


def _goal_lane(scenario: Scenario, goal, departure: str, kind: str):
    """Lane the goal sits on; the departure lane wins when it holds the goal itself."""
    hits = [lane.id for lane in scenario.lanes_containing(goal) if kind in lane.allowed_kinds]
    if departure in hits:
        return departure
    return hits[0] if hits else None


def init_simulation(scenario: Scenario, dataset: CandidateVelocityDataset, schedule: SpawnSchedule, seed: int = 0,
                    config: SimConfig | None = None) -> World:
    """Validate cross references and return a world at tick 0; the dataset is copied."""
    cfg = SimConfig.from_scenario(scenario) if config is None else config
    problems = []
    for e in schedule.entries:
        if e.kind not in KINDS:
            problems.append(f"agent {e.agent_id}: unknown kind {e.kind!r}")
        if e.planning not in PLANNINGS:
            problems.append(f"agent {e.agent_id}: unknown planning {e.planning!r}")
        if not scenario.has_lane(e.departure_lane):
            problems.append(f"agent {e.agent_id}: unknown lane {e.departure_lane!r}")
        elif e.kind not in scenario.lane(e.departure_lane).allowed_kinds:
            problems.append(f"agent {e.agent_id}: lane {e.departure_lane!r} does not admit {e.kind}")
        if not (scenario.lanes_containing(e.goal) or in_central_area(scenario, e.goal)):
            problems.append(f"agent {e.agent_id}: goal {e.goal} lies on no lane or central area")
        if not (0 < e.e1 <= e.e2):
            problems.append(f"agent {e.agent_id}: desired speeds must satisfy 0 < e1 <= e2")
    if problems:
        raise ConfigError("invalid schedule:\n  " + "\n  ".join(problems))
    model = EnergyModel(
        mask=cfg.mask if cfg.mask is not None else MaskTable.default(),
        dt=scenario.dt,
        perception_radius=cfg.perception_radius,
        min_speed=cfg.stopped_speed,
    )
    pending = sorted(schedule.entries, key=lambda e: (e.tick, e.agent_id))
    return World(scenario, dataset.copy(), schedule, cfg, model, np.random.default_rng(seed), pending=pending)


def _spawn(world: World) -> None:
    sc = world.scenario
    waiting = []
    for e in world.pending:
        if e.tick > world.tick_index:
            waiting.append(e)
            continue
        lane = sc.lane(e.departure_lane)
        radius = KIND_RADIUS[e.kind]
        weights = default_weights(e.kind, **world.config.weight_overrides.get(e.kind, {}))
        start = lane.start.copy()
        if world.config.spawn_jitter > 0:
            normal = np.array([-lane.direction[1], lane.direction[0]])
            start = start + normal * world.rng.uniform(-1.0, 1.0) * world.config.spawn_jitter
        clear = all(
            math.dist(start, a.position) >= radius + a.radius + weights.d_s
            for a in world.agents.values()
        )
        if not clear:
            waiting.append(e)
            continue
        agent = AgentState(
            id=e.agent_id, kind=e.kind, position=start, velocity=lane.direction * e.e1,
            guidance=lane.direction.copy(), expected_speed=e.e1, e1=e.e1, e2=e.e2,
            planning=e.planning, departure_lane=e.departure_lane, goal=np.array(e.goal, dtype=float),
            radius=radius, weights=weights, lane_direction=lane.direction.copy(),
            goal_lane=_goal_lane(sc, e.goal, e.departure_lane, e.kind),
        )
        world.agents[e.agent_id] = agent
        world.record.spawned += 1
    world.pending = waiting


# -- decision phase --------------------------------------------------------------------

@dataclass
class Decision:
    velocity: np.ndarray
    origin: str
    guidance: np.ndarray
    weights: object
    expected_speed: float
    yellow_go: bool
    boosted: bool
    region: object = None


def _light_context(world: World, agent: AgentState, t: float) -> AdjustmentContext:
    sc = world.scenario
    p = agent.position
    central = in_central_area(sc, p)
    ctx = AdjustmentContext(in_central_area=central)
    lane = sc.lane(agent.departure_lane)
    a = lane.entry_boundary_midpoint
    ctx.dis_AC = math.dist(a, agent.goal)
    ctx.dis_CD = math.dist(p, agent.goal)
    light = sc.light_for(agent.departure_lane)
    if light is None:
        return ctx
    ctx.light_color = light_color_at(light, t)
    ctx.seconds_remaining = seconds_remaining(light, t)
    q = light.nearest_point(p)
    along = float(np.dot(q - p, lane.direction))
    # the line stays ahead until the whole body has cleared it
    if along > -agent.radius:
        ctx.stop_point = q
        ctx.stop_line = light.stop_line
        ctx.G = along + agent.radius
    else:
        ctx.crossing = lane.contains(p) or central
    return ctx


def _route_test(scenario: Scenario, agent: AgentState):
    """Next positions that keep the agent's body on its departure lane, the central area or its goal lane."""
    lanes = (agent.departure_lane, agent.goal_lane)
    return lambda pts: scenario.on_route(pts, lanes, agent.radius)


def _decide(world: World, agent: AgentState, snapshot: dict, grid: SpatialGrid, t: float) -> Decision:
    sc, cfg, model = world.scenario, world.config, world.model
    a = replace(agent)
    g = guidance_direction(a, sc)
    if g is not None:
        a.guidance = g
    neighbors = [snapshot[j] for j in neighbors_of(grid, a.id)]
    ctx = _light_context(world, a, t)
    resp = apply_light_policy(a, ctx, sc.frame_rate)
    if resp.obstacle is not None:
        neighbors.append(resp.obstacle)
    a.expected_speed = resp.expected_speed
    nb = pack_neighbors(a, neighbors, model)
    if cfg.adaptive:
        ctx.E_temp_c = short_term_influence(a, neighbors, model)
        w = adjust_velocity_weights(a.weights, ctx.E_temp_c, resp.boosted)
        w_init_g = w.init["w_g"]
        w.w_g = adjust_guidance_weight(w_init_g, ctx.dis_AC, ctx.dis_CD, ctx.in_central_area,
                                       cfg.w_g_max_factor * w_init_g, cfg.dis_floor)
        a.weights = w
    region = region_of(sc, a.position, a.kind, a.departure_lane) if cfg.regional_candidates else None
    try:
        v, origin = select_velocity(a, neighbors, model, world.dataset, cfg.thresholds, cfg.supplement,
                                    cfg.window, cfg.use_supplement, packed=nb, region=region,
                                    contact_guard=cfg.contact_guard, contact_margin=cfg.contact_margin,
                                    stall_check=cfg.stall_check, road=_route_test(sc, a) if cfg.route_guard else None)
    except AgentHalted as exc:
        warnings.warn(f"agent {a.id} halted: {exc}", RuntimeWarning)
        v, origin = np.zeros(2), "halted"
    return Decision(v, origin, a.guidance, a.weights, a.expected_speed, resp.yellow_go, resp.boosted, region)


def _arrived(world: World, agent: AgentState) -> bool:
    if math.dist(agent.position, agent.goal) < world.config.arrival_radius:
        return True
    if agent.goal_lane is None:
        return False
    lane = world.scenario.lane(agent.goal_lane)
    return lane.contains(agent.position) and float(np.dot(agent.position - agent.goal, lane.direction)) >= 0.0


def detect_overlaps(world_or_agents, brute_force: bool = False, cell_size: float | None = None) -> list:
    """Pairs ``(i, j, distance)`` with ``i < j`` whose discs intersect."""
    agents = world_or_agents.agents if isinstance(world_or_agents, World) else world_or_agents
    items = sorted(agents.items())
    out = []
    if brute_force:
        for k, (i, a) in enumerate(items):
            for j, b in items[k + 1:]:
                d = math.dist(a.position, b.position)
                if d < a.radius + b.radius:
                    out.append((i, j, d))
        return out
    if not items:
        return out
    # a cell narrower than the largest radius sum would let overlapping pairs skip the 3x3 neighbourhood
    reach = max(2.0 * max(a.radius for _, a in items), 1e-6)
    grid = SpatialGrid.build(max(cell_size or reach, reach), {i: a.position for i, a in items})
    for i, a in items:
        for j in neighbors_of(grid, i):
            if j <= i:
                continue
            b = agents[j]
            d = math.dist(a.position, b.position)
            if d < a.radius + b.radius:
                out.append((i, j, d))
    out.sort()
    return out


def _snapshot_hash(snapshot: dict) -> int:
    return hash(tuple((i, tuple(n.position), tuple(n.velocity)) for i, n in sorted(snapshot.items())))


def tick(world: World, executor: ThreadPoolExecutor | None = None) -> World:
    """Advance the world by one frame in place and return it."""
    started = time.perf_counter()
    sc = world.scenario
    t = world.tick_index * sc.dt
    _spawn(world)
    ids = sorted(world.agents)
    snapshot = {
        i: Neighbor(a.position.copy(), a.velocity.copy(), a.kind, a.planning, a.lane_direction, i, radius=a.radius)
        for i, a in world.agents.items()
    }
    grid = SpatialGrid.build(sc.grid_cell_size, {i: snapshot[i].position for i in ids})
    if world.snapshot_hashes is not None:
        world.snapshot_hashes.append(_snapshot_hash(snapshot))
    timer = [] if world.config.time_interactions else None
    world.model.timer = timer

    def decide(i):
        return _decide(world, world.agents[i], snapshot, grid, t)

    if executor is not None and len(ids) > 1:
        decisions = list(executor.map(decide, ids))
    else:
        decisions = [decide(i) for i in ids]

    # serial commit in id order
    for i, dec in zip(ids, decisions):
        a = world.agents[i]
        a.guidance = dec.guidance
        a.weights = dec.weights
        a.expected_speed = dec.expected_speed
        a.yellow_go = dec.yellow_go
        a.boosted = dec.boosted
        commit_selection(a, dec.velocity, dec.origin, world.dataset, sc.dt, dec.region)
        if dec.origin == "halted":
            world.record.halted.append((world.tick_index, i))
    elapsed = time.perf_counter() - started

    rec = world.record
    for i, dec in zip(ids, decisions):
        a = world.agents[i]
        rec.rows.append((world.tick_index, i, a.kind, float(a.position[0]), float(a.position[1]),
                         float(a.velocity[0]), float(a.velocity[1]), dec.origin))
    for i, j, d in detect_overlaps(world):
        rec.overlaps.append((world.tick_index, i, j, d))
    for i in ids:
        if _arrived(world, world.agents[i]):
            del world.agents[i]
            world.arrived.append(i)
            rec.arrived += 1
        elif sc.outside(world.agents[i].position, world.config.exit_margin):
            del world.agents[i]
            world.exited.append(i)
            rec.exited += 1
    rec.frame_times.append(elapsed)
    if timer is not None:
        rec.interaction_times.append(sum(timer))
    world.tick_index += 1
    return world


def run(world: World, ticks: int) -> SimulationRecord:
    if ticks < 1:
        raise ValueError("ticks must be >= 1")
    workers = world.config.workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for _ in range(ticks):
                tick(world, pool)
    else:
        for _ in range(ticks):
            tick(world)
    return world.record


# -- record file -----------------------------------------------------------------------

def write_record(record: SimulationRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for t, aid, kind, x, y, vx, vy, origin in record.rows:
            w.writerow((t, aid, kind, repr(x), repr(y), repr(vx), repr(vy), origin))
        fh.write(f"# ticks,{record.ticks}\n")
        fh.write(f"# max_seconds_per_frame,{record.max_frame_time:.6g}\n")
        fh.write(f"# avg_seconds_per_frame,{record.mean_frame_time:.6g}\n")
        fh.write(f"# spawned,{record.spawned}\n")
        fh.write(f"# arrived,{record.arrived}\n")
        fh.write(f"# exited,{record.exited}\n")
        fh.write(f"# overlaps,{len(record.overlaps)}\n")
        if record.interaction_times:
            fh.write(f"# avg_interaction_seconds_per_frame,{float(np.mean(record.interaction_times)):.6g}\n")


def read_record(path) -> SimulationRecord:
    rec = SimulationRecord()
    summary = {}
    with open(path, newline="") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(",")
                summary[key] = val
            else:
                body.append(line)
    for row in csv.DictReader(body):
        rec.rows.append((int(row["tick"]), int(row["agent_id"]), row["kind"], float(row["x"]), float(row["y"]),
                         float(row["vx"]), float(row["vy"]), row["origin"]))
    rec.summary = summary
    rec.spawned = int(summary.get("spawned", 0))
    rec.arrived = int(summary.get("arrived", 0))
    rec.exited = int(summary.get("exited", 0))
    return rec
