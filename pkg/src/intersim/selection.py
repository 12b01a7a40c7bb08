"""Hybrid velocity selection: dataset window first, supplementary grid as fallback."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import CandidateVelocityDataset, append_velocity, candidates_near
from .energy import (AgentState, EnergyModel, NeighborArrays, batch_clearance, batch_energy, closest_approach,
                     pack_neighbors)

DATASET = "dataset"
SUPPLEMENT = "supplement"


class AgentHalted(RuntimeError):
    """Raised when an agent has neither candidates nor any direction to move in."""


@dataclass(frozen=True)
class IndicatorThresholds:
    tau_m: float = 1.0
    tau_dir: float = 1.0
    tau_g: float = 2.0
    tau_c: float = 10.0

    def __post_init__(self):
        if min(self.tau_m, self.tau_dir, self.tau_g, self.tau_c) <= 0:
            raise ValueError("thresholds must be positive")


def _integer_ratio(a: float, b: float, name: str) -> int:
    if not b > 0:
        raise ValueError(f"{name}: interval must be positive")
    r = a / b
    k = round(r)
    if k < 1 or abs(r - k) > 1e-9:
        raise ValueError(f"{name}: range / interval must be an integer >= 1, got {r}")
    return int(k)


@dataclass(frozen=True)
class SupplementConfig:
    psi_m: float = 1.0
    I_m: float = 0.25
    psi_d: float = 0.9
    I_d: float = 0.3

    def __post_init__(self):
        _integer_ratio(self.psi_m, self.I_m, "magnitude")
        _integer_ratio(self.psi_d, self.I_d, "direction")

    @property
    def n_magnitude(self) -> int:
        return _integer_ratio(self.psi_m, self.I_m, "magnitude")

    @property
    def n_direction(self) -> int:
        return _integer_ratio(self.psi_d, self.I_d, "direction")


def heading_change(a, b, min_speed: float = 1e-9) -> float:
    """Angle in radians between two velocities; 0 when either is near zero."""
    sa = math.hypot(a[0], a[1])
    sb = math.hypot(b[0], b[1])
    if sa < min_speed or sb < min_speed:
        return 0.0
    c = (a[0] * b[0] + a[1] * b[1]) / (sa * sb)
    return math.acos(min(1.0, max(-1.0, c)))


def acceptable(v, agent: AgentState, g_term: float, c_term: float,
               thresholds: IndicatorThresholds = IndicatorThresholds(), min_speed: float = 1e-9) -> bool:
    prev = agent.velocity
    dm = abs(math.hypot(prev[0], prev[1]) - math.hypot(v[0], v[1]))
    return (
        dm <= thresholds.tau_m
        and heading_change(prev, v, min_speed) <= thresholds.tau_dir
        and g_term <= thresholds.tau_g
        and c_term <= thresholds.tau_c
    )


def supplement(v_prev, cfg: SupplementConfig = SupplementConfig(), guidance=None, min_speed: float = 1e-9) -> np.ndarray:
    """Grid of magnitudes around ``|v_prev|`` times rotations around its heading.

    Rows are ordered magnitude-major. A zero ``v_prev`` takes its heading from
    ``guidance``; negative magnitudes clamp to zero and repeated rows are dropped.
    """
    speed = math.hypot(v_prev[0], v_prev[1])
    if speed >= min_speed:
        base = math.atan2(v_prev[1], v_prev[0])
    elif guidance is not None and math.hypot(guidance[0], guidance[1]) > 0:
        base = math.atan2(guidance[1], guidance[0])
        speed = 0.0
    else:
        raise AgentHalted("zero previous velocity and no guidance direction to supplement around")
    P, Q = cfg.n_magnitude, cfg.n_direction
    mags = np.maximum(speed + np.arange(-P, P + 1) * cfg.I_m, 0.0)
    angles = base + np.arange(-Q, Q + 1) * cfg.I_d
    units = np.column_stack((np.cos(angles), np.sin(angles)))
    out = (mags[:, None, None] * units[None, :, :]).reshape(-1, 2)
    _, first = np.unique(out, axis=0, return_index=True)
    return out[np.sort(first)]


@dataclass
class PhaseResult:
    index: int
    velocity: np.ndarray
    energies: np.ndarray
    g_term: float
    c_term: float


def best_candidate(agent: AgentState, candidates: np.ndarray, nb: NeighborArrays, model: EnergyModel,
                   allowed: np.ndarray | None = None, approach=None) -> PhaseResult:
    """Lowest-energy row of ``candidates`` among the ``allowed`` ones; ties go to the smaller index."""
    be = batch_energy(agent, candidates, nb, model, approach=approach)
    ranked = be.total if allowed is None else np.where(allowed, be.total, np.inf)
    k = int(np.argmin(ranked))
    return PhaseResult(k, candidates[k].copy(), be.total, float(be.g_term[k]), float(be.c_term[k]))


def contact_free(agent: AgentState, candidates: np.ndarray, nb: NeighborArrays, model: EnergyModel) -> np.ndarray:
    """Rows whose constant-velocity sweep over the lookahead keeps clear of every neighbour."""
    return batch_clearance(agent, candidates, nb, agent.weights.T_steps * model.dt) >= 0.0


def _guards(agent, candidates, nb, model, contact_guard, road, margin=0.0):
    """Per-candidate (on road, clearance) arrays, ``None`` for an inactive guard, plus the
    closest-approach geometry for reuse by the energy."""
    on = None if road is None else np.asarray(road(agent.position + candidates * model.dt), dtype=bool)
    gap = approach = None
    if contact_guard:
        horizon = agent.weights.T_steps * model.dt
        if len(nb.masks):
            approach = closest_approach(agent, candidates, nb, horizon)
        gap = batch_clearance(agent, candidates, nb, horizon, margin, approach)
    return on, gap, approach


def _passing(on, gap, n) -> np.ndarray:
    ok = np.ones(n, dtype=bool)
    if on is not None:
        ok &= on
    if gap is not None:
        ok &= gap >= 0.0
    return ok


def _closest_to_passing(on, gap, n) -> np.ndarray:
    """Fallback mask: contact-free rows if any, else those coming least close to a
    neighbour; then on-road rows among them if any."""
    keep = np.ones(n, dtype=bool)
    if gap is not None:
        keep = gap >= 0.0
        if not keep.any():
            keep = gap >= gap.max() - 1e-9
    if on is not None and (keep & on).any():
        keep &= on
    return keep


def window_stalled(candidates: np.ndarray, best, agent: AgentState, step: float) -> bool:
    """True when the window cannot move the agent toward its expected speed.

    That is the case when all candidate magnitudes lie within ``step`` of each
    other while the best one still misses the expected speed by more than ``step``.
    """
    mags = np.hypot(candidates[:, 0], candidates[:, 1])
    if mags.max() - mags.min() >= step:
        return False
    return abs(math.hypot(best[0], best[1]) - agent.expected_speed) > step


def select_velocity(
    agent: AgentState,
    neighbors,
    model: EnergyModel,
    dataset: CandidateVelocityDataset,
    thresholds: IndicatorThresholds = IndicatorThresholds(),
    supplement_cfg: SupplementConfig = SupplementConfig(),
    window: int = 200,
    use_supplement: bool = True,
    packed: NeighborArrays | None = None,
    region=None,
    contact_guard: bool = False,
    road=None,
    contact_margin: float = 0.0,
    stall_check: bool = False,
):
    """Return ``(velocity, origin)`` for one agent from a read-only snapshot.

    ``region`` restricts the dataset window to samples recorded where the agent is.
    Two optional guards narrow the candidates the energy ranks: ``contact_guard``
    keeps only those clear of every neighbour (padded by ``contact_margin``) over
    the lookahead, and ``road`` maps
    next positions to a mask of those keeping the agent on the road. Dataset
    candidates must pass both; supplementary ones always yield a choice, falling
    back to those closest to passing. With ``stall_check`` a dataset choice from a
    window too narrow to change speed (see ``window_stalled``) also counts as
    unacceptable.
    """
    nb = pack_neighbors(agent, neighbors, model) if packed is None else packed
    guarded = contact_guard or road is not None
    speed = math.hypot(agent.velocity[0], agent.velocity[1])
    pool = dataset.pools.get((agent.kind, agent.departure_lane))
    if pool is not None and len(pool):
        cands = candidates_near(dataset, agent.kind, agent.departure_lane, speed, window, region)
        allowed = approach = None
        if guarded:
            on, gap, approach = _guards(agent, cands, nb, model, contact_guard, road, contact_margin)
            allowed = _passing(on, gap, len(cands))
            if not allowed.any():
                allowed = None if use_supplement else _closest_to_passing(on, gap, len(cands))
                if allowed is None:
                    cands = None
        if cands is not None:
            res = best_candidate(agent, cands, nb, model, allowed, approach)
            if not use_supplement or (
                acceptable(res.velocity, agent, res.g_term, res.c_term, thresholds, model.min_speed)
                and not (stall_check and window_stalled(cands, res.velocity, agent, supplement_cfg.I_m))
            ):
                return res.velocity, DATASET
    elif not use_supplement:
        raise AgentHalted(f"agent {agent.id}: empty pool and supplementation disabled")
    extra = supplement(agent.velocity, supplement_cfg, agent.guidance, model.min_speed)
    allowed = approach = None
    if guarded:
        on, gap, approach = _guards(agent, extra, nb, model, contact_guard, road, contact_margin)
        allowed = _passing(on, gap, len(extra))
        if not allowed.any():
            allowed = _closest_to_passing(on, gap, len(extra))
    res = best_candidate(agent, extra, nb, model, allowed, approach)
    return res.velocity, SUPPLEMENT


def commit_selection(agent: AgentState, v, origin: str, dataset: CandidateVelocityDataset, dt: float,
                     region=None) -> None:
    v = np.asarray(v, dtype=float)
    agent.velocity = v.copy()
    agent.position = agent.position + v * dt
    s = math.hypot(v[0], v[1])
    if s > 1e-9:
        agent.heading = v / s
    if origin == SUPPLEMENT:
        append_velocity(dataset, agent.kind, agent.departure_lane, v, region)
