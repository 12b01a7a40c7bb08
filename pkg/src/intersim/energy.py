"""Energy terms for velocity selection.

``E = w_v * E_v + w_g * E_g + w_c * E_c`` where ``E_v`` keeps the velocity
continuous and close to the expected speed, ``E_g`` pulls the heading toward the
guidance direction and ``E_c`` is a planning-aware collision term aggregated over
the perceived neighbours.

Two evaluation routes exist on purpose. The scalar functions (``velocity_energy``,
``pair_collision_energy``, ``total_energy`` ...) evaluate one candidate at a time
with plain ``math``; ``CandidateBatch`` evaluates a whole candidate window with
numpy. The selector uses the batch route and the tests check it against the
scalar one.

Angles fed to the heading sensitivity function are in degrees, positive to the
right of the candidate heading.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import NamedTuple

import numpy as np

PLANNINGS = ("straight", "turn_left", "turn_right")
SECTORS = ("same", "opposite", "left", "right")
MASK_VALUES = (0.0, 0.5, 1.0)
MAX_BEARING = 50.0
ZERO_SPEED = 1e-9


# -- parameters ------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianParams:
    sigma1_sq: float
    sigma2_sq: float
    left_bound: float
    right_bound: float


def default_gaussians() -> dict:
    """Heading sensitivity parameters keyed by (kind group, planning)."""
    vehicle_straight = GaussianParams(550.0, 200.0, 30.0, 30.0)
    out = {}
    for group in ("vehicle", "pedestrian"):
        for planning in PLANNINGS:
            if group == "pedestrian":
                out[(group, planning)] = GaussianParams(1200.0, 200.0, 35.0, 35.0)
            elif planning == "straight":
                out[(group, planning)] = vehicle_straight
            elif planning == "turn_right":
                out[(group, planning)] = GaussianParams(650.0, 250.0, 20.0, 40.0)
            else:
                out[(group, planning)] = GaussianParams(650.0, 250.0, 40.0, 20.0)
    return out


def _group(kind: str) -> str:
    return "pedestrian" if kind == "pedestrian" else "vehicle"


@dataclass
class EnergyWeights:
    w_v: float = 1.0
    w_g: float = 1.0
    w_c: float = 1.0
    w_dir: float = 1.0
    w_m: float = 1.0
    w_e: float = 1.5
    init: dict = field(default_factory=dict)
    lambda_dir: float = 2.0
    lambda_m: float = 2.0
    lambda_e: float = 2.0
    d_s: float = 4.0
    T_steps: int = 15

    def __post_init__(self):
        if not self.init:
            self.init = {k: getattr(self, k) for k in ("w_v", "w_g", "w_c", "w_dir", "w_m", "w_e")}
        if min(self.w_v, self.w_g, self.w_c, self.w_dir, self.w_m, self.w_e) < 0:
            raise ValueError("energy weights must be non-negative")
        if not self.d_s > 0 or self.T_steps < 1:
            raise ValueError("d_s must be positive and T_steps >= 1")

    def evolve(self, **changes) -> "EnergyWeights":
        return replace(self, init=dict(self.init), **changes)


# initial weights for a four-arm crossroad
KIND_DEFAULTS = {
    "car": dict(w_dir=1.0, w_m=1.0, w_e=1.5, w_g=1.0, w_c=1.0, lambda_dir=2.0, lambda_m=2.0, lambda_e=2.0, d_s=4.0),
    "pedestrian": dict(w_dir=0.5, w_m=1.0, w_e=1.5, w_g=1.3, w_c=1.0, lambda_dir=4.5, lambda_m=0.5, lambda_e=1.5, d_s=1.0),
    "bicycle": dict(w_dir=1.0, w_m=1.0, w_e=2.0, w_g=1.5, w_c=1.0, lambda_dir=2.0, lambda_m=0.5, lambda_e=1.5, d_s=2.0),
}
KIND_RADIUS = {"car": 1.0, "pedestrian": 0.3, "bicycle": 0.5}


def default_weights(kind: str, **overrides) -> EnergyWeights:
    params = dict(KIND_DEFAULTS[kind])
    params.update(overrides)
    return EnergyWeights(**params)


class MaskTable:
    """Interaction likelihood by (own planning, neighbour planning, neighbour sector)."""

    def __init__(self, table: dict):
        for key, val in table.items():
            if float(val) not in MASK_VALUES:
                raise ValueError(f"mask entry {key} = {val} is not one of {MASK_VALUES}")
        missing = [
            (a, b, s) for a in PLANNINGS for b in PLANNINGS for s in SECTORS if (a, b, s) not in table
        ]
        if missing:
            raise ValueError(f"mask table is incomplete, missing {missing[:3]}...")
        self.table = {k: float(v) for k, v in table.items()}

    def value(self, planning_i: str, planning_phi: str, sector: str) -> float:
        return self.table[(planning_i, planning_phi, sector)]

    @classmethod
    def from_dict(cls, doc: dict) -> "MaskTable":
        table = {}
        for own, rows in doc.items():
            for other, sectors in rows.items():
                for sector, val in sectors.items():
                    table[(own, other, sector)] = val
        return cls(table)

    def to_dict(self) -> dict:
        out: dict = {}
        for (own, other, sector), val in sorted(self.table.items()):
            out.setdefault(own, {}).setdefault(other, {})[sector] = val
        return out

    @classmethod
    def default(cls) -> "MaskTable":
        text = resources.files("intersim").joinpath("data/mask_table.json").read_text()
        return cls.from_dict(json.loads(text))

    @classmethod
    def uniform(cls, value: float = 1.0) -> "MaskTable":
        return cls({(a, b, s): value for a in PLANNINGS for b in PLANNINGS for s in SECTORS})


def relative_sector(dir_i, dir_phi) -> str:
    """Where ``phi`` comes from relative to ``i``, judged from their lane directions.

    A neighbour travelling rightward across ``i``'s path arrives from ``i``'s left.
    """
    if dir_i is None or dir_phi is None:
        return "same"
    cross = dir_i[0] * dir_phi[1] - dir_i[1] * dir_phi[0]
    dot = dir_i[0] * dir_phi[0] + dir_i[1] * dir_phi[1]
    ang = -math.degrees(math.atan2(cross, dot))
    if abs(ang) <= 45.0:
        return "same"
    if abs(ang) >= 135.0:
        return "opposite"
    return "left" if ang > 0 else "right"


@dataclass
class EnergyModel:
    """Scene-wide constants shared by every energy evaluation."""

    mask: MaskTable = field(default_factory=MaskTable.default)
    gaussians: dict = field(default_factory=default_gaussians)
    dt: float = 1.0 / 30.0
    perception_radius: float = 20.0
    min_speed: float = ZERO_SPEED
    timer: list | None = None  # collects seconds spent in collision-energy evaluation

    def gaussian(self, kind: str, planning: str) -> GaussianParams:
        return self.gaussians[(_group(kind), planning)]


# -- agent state -----------------------------------------------------------------

@dataclass
class AgentState:
    id: int
    kind: str
    position: np.ndarray
    velocity: np.ndarray
    guidance: np.ndarray
    expected_speed: float
    e1: float
    e2: float
    planning: str
    departure_lane: str
    goal: np.ndarray
    radius: float
    weights: EnergyWeights
    lane_direction: np.ndarray | None = None
    goal_lane: str | None = None
    heading: np.ndarray | None = None
    yellow_go: bool = False
    boosted: bool = False

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.guidance = np.asarray(self.guidance, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        if not (0 < self.e1 <= self.e2):
            raise ValueError("desired speeds must satisfy 0 < e1 <= e2")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.planning not in PLANNINGS:
            raise ValueError(f"unknown planning {self.planning!r}")
        if self.heading is None:
            self.heading = _unit_or(self.velocity, self.guidance)

    def as_neighbor(self) -> "Neighbor":
        return Neighbor(self.position, self.velocity, self.kind, self.planning, self.lane_direction, self.id,
                        radius=self.radius)


class Neighbor(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    kind: str
    planning: str
    lane_direction: np.ndarray | None
    id: object = None
    segment: np.ndarray | None = None
    radius: float = 0.0

    @property
    def virtual(self) -> bool:
        return self.kind == "obstacle"


def virtual_obstacle(point, segment=None) -> Neighbor:
    """Static stand-in for a stop line under a red light.

    With ``segment`` the obstacle is the whole line: its distance is the closest
    approach between the line and the agent's predicted path, so steering around
    the nearest point does not escape it.
    """
    seg = None if segment is None else np.asarray(segment, dtype=float).reshape(2, 2)
    return Neighbor(np.asarray(point, dtype=float), np.zeros(2), "obstacle", "straight", None, "stop_line", seg)


def _unit_or(v, fallback, eps=ZERO_SPEED):
    n = math.hypot(v[0], v[1])
    if n >= eps:
        return np.array([v[0] / n, v[1] / n])
    if fallback is None:
        return np.zeros(2)
    return np.asarray(fallback, dtype=float)


# -- scalar reference terms --------------------------------------------------------

def velocity_energy(v, prev_v, e, w_dir, w_m, w_e, min_speed=ZERO_SPEED) -> float:
    sv = math.hypot(v[0], v[1])
    sp = math.hypot(prev_v[0], prev_v[1])
    if sv < min_speed or sp < min_speed:
        dir_term = 0.0
    else:
        dir_term = math.hypot(v[0] / sv - prev_v[0] / sp, v[1] / sv - prev_v[1] / sp)
    return w_dir * dir_term + w_m * abs(sv - sp) + w_e * abs(sv - e)


def guidance_energy(v, g, min_speed=ZERO_SPEED) -> float:
    """Distance between the unit heading of ``v`` and ``g``; a zero ``v`` has zero heading."""
    sv = math.hypot(v[0], v[1])
    if sv < min_speed:
        return math.hypot(g[0], g[1])
    return math.hypot(v[0] / sv - g[0], v[1] / sv - g[1])


def guidance_direction(agent: AgentState, scenario):
    """Unit guidance vector, or ``None`` once the agent sits on its goal.

    Inside the central area the guidance points at the goal. On a lane it follows
    the lane's travel direction (goal lane first, then the departure lane). Off
    every known surface it points at the goal.
    """
    from .scenario import in_central_area

    p = agent.position
    to_goal = agent.goal - p
    dist = math.hypot(to_goal[0], to_goal[1])
    if dist == 0.0:
        return None
    if not in_central_area(scenario, p):
        for lane_id in (agent.goal_lane, agent.departure_lane):
            if lane_id is None:
                continue
            lane = scenario.lane(lane_id)
            if lane.contains(p):
                return lane.direction.copy()
    return to_goal / dist


def planning_gaussian(planning: str, kind: str, theta: float, model: EnergyModel | None = None) -> float:
    if abs(theta) > MAX_BEARING:
        raise ValueError(f"bearing {theta} deg lies outside [-{MAX_BEARING}, {MAX_BEARING}]")
    gp = (model.gaussian(kind, planning) if model is not None else default_gaussians()[(_group(kind), planning)])
    if -gp.left_bound <= theta <= gp.right_bound:
        return math.exp(-theta * theta / (2.0 * gp.sigma1_sq))
    return math.exp(-theta * theta / (2.0 * gp.sigma2_sq))


def predicted_geometry(p_i, v_i, p_phi, v_phi, horizon: float, heading) -> tuple[float, float]:
    """Closest separation over ``[0, horizon]`` under constant velocities, and the
    bearing relative to ``heading`` (degrees, right positive) of where ``phi`` will be
    at that moment, seen from ``i``'s current position.

    Seeing the predicted neighbour from the current position keeps a neighbour the
    candidate would overrun dead ahead instead of swinging it out of view.
    """
    r0x, r0y = p_phi[0] - p_i[0], p_phi[1] - p_i[1]
    wx, wy = v_phi[0] - v_i[0], v_phi[1] - v_i[1]
    w2 = wx * wx + wy * wy
    tau = 0.0
    if w2 > 0.0:
        tau = min(max(-(r0x * wx + r0y * wy) / w2, 0.0), horizon)
    d = math.hypot(r0x + wx * tau, r0y + wy * tau)
    rx, ry = r0x + v_phi[0] * tau, r0y + v_phi[1] * tau
    if math.hypot(rx, ry) < 1e-12:
        return d, 0.0
    cross = heading[0] * ry - heading[1] * rx
    dot = heading[0] * rx + heading[1] * ry
    return d, -math.degrees(math.atan2(cross, dot))


def _point_segment(px, py, ax, ay, bx, by):
    ex, ey = bx - ax, by - ay
    L2 = ex * ex + ey * ey
    u = 0.0 if L2 == 0.0 else min(max(((px - ax) * ex + (py - ay) * ey) / L2, 0.0), 1.0)
    return ax + u * ex, ay + u * ey


def _line_normal(p, segment):
    (cx, cy), (dx, dy) = segment
    ex, ey = dx - cx, dy - cy
    L = math.hypot(ex, ey)
    nx, ny = -ey / L, ex / L
    if (0.5 * (cx + dx) - p[0]) * nx + (0.5 * (cy + dy) - p[1]) * ny < 0:
        nx, ny = -nx, -ny
    return nx, ny


def line_geometry(p_i, v_i, horizon: float, segment) -> tuple[float, float]:
    """Signed gap left to a stop line after travelling ``|v| * horizon``, and its bearing.

    The line counts as a wall across the approach: the distance covered over the
    horizon is charged against the current distance to the line whatever the
    heading, and the wall is always dead ahead, so steering sideways never eases
    the energy and only slowing down does.
    """
    nx, ny = _line_normal(p_i, segment)
    (cx, cy), _ = segment
    now = (cx - p_i[0]) * nx + (cy - p_i[1]) * ny
    return now - math.hypot(v_i[0], v_i[1]) * horizon, 0.0


def _candidate_heading(agent: AgentState, v, min_speed=ZERO_SPEED):
    s = math.hypot(v[0], v[1])
    if s >= min_speed:
        return (v[0] / s, v[1] / s)
    return tuple(agent.heading)


def _mask_for(agent: AgentState, phi, model: EnergyModel) -> float:
    if phi.kind != agent.kind or agent.kind == "pedestrian":
        return 1.0
    return model.mask.value(agent.planning, phi.planning, relative_sector(agent.lane_direction, phi.lane_direction))


def pair_energy_from_geometry(d: float, theta: float, mask: float, d_s: float, planning: str, kind: str,
                              model: EnergyModel | None = None) -> float:
    if abs(theta) > MAX_BEARING:
        return 0.0
    return mask * planning_gaussian(planning, kind, theta, model) * math.exp(d_s - d)


def pair_collision_energy(agent: AgentState, phi, v_candidate, model: EnergyModel, d_s=None, T_steps=None) -> float:
    d_s = agent.weights.d_s if d_s is None else d_s
    T_steps = agent.weights.T_steps if T_steps is None else T_steps
    heading = _candidate_heading(agent, v_candidate, model.min_speed)
    horizon = T_steps * model.dt
    if getattr(phi, "segment", None) is not None:
        d, theta = line_geometry(agent.position, v_candidate, horizon, phi.segment)
    else:
        d, theta = predicted_geometry(agent.position, v_candidate, phi.position, phi.velocity, horizon, heading)
    return pair_energy_from_geometry(d, theta, _mask_for(agent, phi, model), d_s, agent.planning, agent.kind, model)


def total_collision_energy(pair_energies) -> float:
    s1 = math.fsum(pair_energies)
    if s1 < 1e-12:
        return 0.0
    return math.fsum(e * e for e in pair_energies) / s1


def in_perception(agent: AgentState, phi, model: EnergyModel) -> bool:
    px, py = float(agent.position[0]), float(agent.position[1])
    seg = getattr(phi, "segment", None)
    if seg is not None:
        qx, qy = _point_segment(px, py, seg[0][0], seg[0][1], seg[1][0], seg[1][1])
    else:
        qx, qy = phi.position[0], phi.position[1]
    return math.hypot(qx - px, qy - py) <= model.perception_radius


def total_energy(agent: AgentState, v_candidate, neighbors, model: EnergyModel, weights: EnergyWeights | None = None):
    """Return ``(E, w_g * E_g, w_c * E_c)`` for one candidate velocity."""
    w = agent.weights if weights is None else weights
    ev = velocity_energy(v_candidate, agent.velocity, agent.expected_speed, w.w_dir, w.w_m, w.w_e, model.min_speed)
    eg = guidance_energy(v_candidate, agent.guidance, model.min_speed)
    pairs = [pair_collision_energy(agent, phi, v_candidate, model, w.d_s, w.T_steps)
             for phi in neighbors if in_perception(agent, phi, model)]
    ec = total_collision_energy(pairs)
    g_term = w.w_g * eg
    c_term = w.w_c * ec
    return w.w_v * ev + g_term + c_term, g_term, c_term


# -- vectorized route ----------------------------------------------------------------

class NeighborArrays(NamedTuple):
    positions: np.ndarray
    velocities: np.ndarray
    masks: np.ndarray
    segments: np.ndarray = np.zeros((0, 2, 2))
    radii: np.ndarray = np.zeros(0)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2, 2)), np.zeros(0))

    @property
    def total(self) -> int:
        return len(self.masks) + len(self.segments)


def pack_neighbors(agent: AgentState, neighbors, model: EnergyModel) -> NeighborArrays:
    """Perceived neighbours as arrays, with their mask factors resolved."""
    kept = [phi for phi in neighbors if in_perception(agent, phi, model)]
    points = [phi for phi in kept if getattr(phi, "segment", None) is None]
    segs = [phi.segment for phi in kept if getattr(phi, "segment", None) is not None]
    if not points:
        out = NeighborArrays.empty()
    else:
        out = NeighborArrays(
            np.array([phi.position for phi in points], dtype=float),
            np.array([phi.velocity for phi in points], dtype=float),
            np.array([_mask_for(agent, phi, model) for phi in points], dtype=float),
            radii=np.array([getattr(phi, "radius", 0.0) for phi in points], dtype=float),
        )
    if segs:
        out = out._replace(segments=np.array(segs, dtype=float).reshape(-1, 2, 2))
    return out


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _batch_line_gap(p, candidates, horizon, seg):
    nx, ny = _line_normal(p, seg)
    now = (seg[0][0] - p[0]) * nx + (seg[0][1] - p[1]) * ny
    return now - np.hypot(candidates[:, 0], candidates[:, 1]) * horizon


def _pair_energies(theta, d, masks, gp, d_s):
    inner = (theta >= -gp.left_bound) & (theta <= gp.right_bound)
    sig = np.where(inner, gp.sigma1_sq, gp.sigma2_sq)
    e = masks * np.exp(-theta * theta / (2.0 * sig) + (d_s - d))
    e[np.abs(theta) > MAX_BEARING] = 0.0
    return e


def _bearing(heading, rx, ry, d):
    hx, hy = heading[:, 0:1], heading[:, 1:2]
    theta = -np.degrees(np.arctan2(hx * ry - hy * rx, hx * rx + hy * ry))
    theta[d < 1e-12] = 0.0
    return theta


class ClosestApproach(NamedTuple):
    """Constant-velocity closest approach of each candidate ``n`` to each point neighbour ``k``."""
    rel0: np.ndarray      # (k, 2) neighbour offsets now
    tau: np.ndarray       # (n, k) time of closest approach within the horizon
    distance: np.ndarray  # (n, k) centre distance at that time


def closest_approach(agent: AgentState, candidates: np.ndarray, nb: NeighborArrays, horizon: float) -> ClosestApproach:
    rel0 = nb.positions - agent.position
    w = nb.velocities[None, :, :] - candidates[:, None, :]
    w2 = np.einsum("nkj,nkj->nk", w, w)
    rw = np.einsum("kj,nkj->nk", rel0, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(w2 > 0.0, np.clip(-rw / w2, 0.0, horizon), 0.0)
    rel = rel0[None, :, :] + w * tau[:, :, None]
    return ClosestApproach(rel0, tau, np.hypot(rel[:, :, 0], rel[:, :, 1]))


def batch_collision_energy(agent: AgentState, candidates: np.ndarray, nb: NeighborArrays, model: EnergyModel,
                           d_s: float, T_steps: int, approach: ClosestApproach | None = None) -> np.ndarray:
    """Aggregated collision energy for each row of ``candidates``.

    ``approach`` may carry a precomputed closest approach for the same horizon.
    """
    n = len(candidates)
    if nb.total == 0 or n == 0:
        return np.zeros(n)
    started = time.perf_counter() if model.timer is not None else 0.0
    horizon = T_steps * model.dt
    speed = np.hypot(candidates[:, 0], candidates[:, 1])
    moving = speed >= model.min_speed
    heading = np.empty_like(candidates)
    heading[:] = agent.heading
    heading[moving] = candidates[moving] / speed[moving, None]
    gp = model.gaussian(agent.kind, agent.planning)
    parts = []

    if len(nb.masks):
        ca = approach if approach is not None else closest_approach(agent, candidates, nb, horizon)
        rel0, tau, d = ca.rel0, ca.tau, ca.distance
        seen = rel0[None, :, :] + nb.velocities[None, :, :] * tau[:, :, None]
        rx, ry = seen[:, :, 0], seen[:, :, 1]
        theta = _bearing(heading, rx, ry, np.hypot(rx, ry))
        parts.append(_pair_energies(theta, d, nb.masks[None, :], gp, d_s))

    for seg in nb.segments:
        d = _batch_line_gap(agent.position, candidates, horizon, seg)[:, None]
        parts.append(_pair_energies(np.zeros_like(d), d, 1.0, gp, d_s))

    e = np.concatenate(parts, axis=1)
    s1 = e.sum(axis=1)
    s2 = (e * e).sum(axis=1)
    out = np.zeros(n)
    ok = s1 >= 1e-12
    out[ok] = s2[ok] / s1[ok]
    if model.timer is not None:
        model.timer.append(time.perf_counter() - started)
    return out


def batch_clearance(agent: AgentState, candidates: np.ndarray, nb: NeighborArrays, horizon: float,
                    margin: float = 0.0, approach: ClosestApproach | None = None) -> np.ndarray:
    """Smallest gap between the agent's body and any neighbour over ``[0, horizon]``, per candidate.

    Point neighbours are discs swept at constant velocity, whatever their bearing;
    stop lines are walls charged with the distance covered over the horizon. A
    negative value means contact. ``margin`` pads every point neighbour's radius.
    ``inf`` without neighbours.
    """
    c = np.asarray(candidates, dtype=float).reshape(-1, 2)
    out = np.full(len(c), np.inf)
    if len(nb.masks):
        ca = approach if approach is not None else closest_approach(agent, c, nb, horizon)
        gap = ca.distance - (agent.radius + margin + nb.radii)[None, :]
        out = gap.min(axis=1)
    for seg in nb.segments:
        out = np.minimum(out, _batch_line_gap(agent.position, c, horizon, seg) - agent.radius)
    return out


@dataclass
class BatchEnergy:
    total: np.ndarray
    g_term: np.ndarray
    c_term: np.ndarray
    speed: np.ndarray


def batch_energy(agent: AgentState, candidates: np.ndarray, nb: NeighborArrays, model: EnergyModel,
                 weights: EnergyWeights | None = None, approach: ClosestApproach | None = None) -> BatchEnergy:
    w = agent.weights if weights is None else weights
    c = np.asarray(candidates, dtype=float).reshape(-1, 2)
    speed = np.hypot(c[:, 0], c[:, 1])
    moving = speed >= model.min_speed
    unit = np.zeros_like(c)
    unit[moving] = c[moving] / speed[moving, None]

    pv = agent.velocity
    sp = math.hypot(pv[0], pv[1])
    if sp >= model.min_speed:
        dir_term = np.hypot(unit[:, 0] - pv[0] / sp, unit[:, 1] - pv[1] / sp)
        dir_term[~moving] = 0.0
    else:
        dir_term = np.zeros(len(c))
    ev = w.w_dir * dir_term + w.w_m * np.abs(speed - sp) + w.w_e * np.abs(speed - agent.expected_speed)
    g = agent.guidance
    eg = np.hypot(unit[:, 0] - g[0], unit[:, 1] - g[1])
    ec = batch_collision_energy(agent, c, nb, model, w.d_s, w.T_steps, approach)
    g_term = w.w_g * eg
    c_term = w.w_c * ec
    return BatchEnergy(w.w_v * ev + g_term + c_term, g_term, c_term, speed)
