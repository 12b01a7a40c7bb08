"""Per-tick parameter adjustment: interaction-driven weights, light responses and guidance scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import AgentState, EnergyModel, EnergyWeights, batch_collision_energy, pack_neighbors, virtual_obstacle


@dataclass
class AdjustmentContext:
    E_temp_c: float = 0.0
    light_color: str | None = None
    seconds_remaining: float = math.inf
    G: float = 0.0
    in_central_area: bool = False
    crossing: bool = False
    stop_point: np.ndarray | None = None
    stop_line: np.ndarray | None = None
    dis_AC: float = 0.0
    dis_CD: float = 0.0

    def __post_init__(self):
        if self.E_temp_c < 0 or self.G < 0 or self.dis_AC < 0 or self.dis_CD < 0:
            raise ValueError("context distances and energies must be non-negative")


def short_term_influence(agent: AgentState, neighbors, model: EnergyModel) -> float:
    """Collision energy of the current velocity at half the usual lookahead."""
    nb = pack_neighbors(agent, neighbors, model)
    steps = max(1, agent.weights.T_steps // 2)
    return float(batch_collision_energy(agent, agent.velocity[None, :], nb, model, agent.weights.d_s, steps)[0])


def adjust_velocity_weights(weights: EnergyWeights, E_temp_c: float, boosted: bool = False) -> EnergyWeights:
    """Velocity sub-weights recomputed from their initial values.

    ``boosted`` doubles the base expected-speed weight (pedestrians hurrying on red).
    """
    init = weights.init
    base_e = 2.0 * init["w_e"] if boosted else init["w_e"]
    return weights.evolve(
        w_dir=init["w_dir"] + E_temp_c / weights.lambda_dir,
        w_m=max(0.0, init["w_m"] - E_temp_c / weights.lambda_m),
        w_e=max(0.0, base_e - E_temp_c / weights.lambda_e),
    )


def should_accelerate_yellow(speed: float, e2: float, s: float, frame_rate: float, G: float) -> bool:
    """Whether the agent can clear the stop line before the yellow runs out.

    ``t' = frame_rate * (s - 1)`` frames of travel at the mean of the current
    and the fast desired speed must cover ``G`` metres.
    """
    t_frames = max(0.0, frame_rate * (s - 1.0))
    return 0.5 * (speed + e2) * t_frames / frame_rate >= G


def adjust_guidance_weight(w_init_g: float, dis_AC: float, dis_CD: float, in_central_area: bool,
                           w_g_max: float | None = None, dis_floor: float = 0.5) -> float:
    if not in_central_area:
        return w_init_g
    cap = 10.0 * w_init_g if w_g_max is None else w_g_max
    return min(max(dis_AC / max(dis_CD, dis_floor) * w_init_g, 0.0), cap)


@dataclass
class LightResponse:
    obstacle: object | None
    expected_speed: float
    yellow_go: bool
    boosted: bool


def apply_light_policy(agent: AgentState, ctx: AdjustmentContext, frame_rate: float) -> LightResponse:
    """Desired-speed switching and stop-line handling for one agent.

    ``ctx.stop_point`` is set only while the stop line is still ahead of the agent.
    """
    color = ctx.light_color
    ahead = ctx.stop_point is not None
    if color is None or color == "green":
        return LightResponse(None, agent.e1, False, False)
    if color == "yellow":
        if ahead:
            go = agent.yellow_go or should_accelerate_yellow(
                float(np.hypot(*agent.velocity)), agent.e2, ctx.seconds_remaining, frame_rate, ctx.G)
            if go:
                return LightResponse(None, agent.e2, True, True)
            return LightResponse(virtual_obstacle(ctx.stop_point, ctx.stop_line), agent.e1, False, False)
        if agent.yellow_go:
            return LightResponse(None, agent.e2, True, True)
        return LightResponse(None, agent.e1, False, False)
    # red
    if ahead:
        return LightResponse(virtual_obstacle(ctx.stop_point, ctx.stop_line), agent.e1, False, False)
    if agent.kind == "pedestrian" and ctx.crossing:
        return LightResponse(None, agent.e2, False, True)
    return LightResponse(None, agent.e1, False, False)
