"""Hybrid data-driven traffic intersection simulation.

Trajectories are denoised with B-splines, converted into per-lane candidate
velocity pools, and replayed by agents that minimise an energy over those pools,
falling back to a velocity-continuity grid when the best recorded velocity is
not acceptable.
"""

from .adaptive import (AdjustmentContext, adjust_guidance_weight, adjust_velocity_weights, apply_light_policy,
                       short_term_influence, should_accelerate_yellow)
from .dataset import (CandidateVelocityDataset, append_velocity, build_dataset, candidates_near, read_dataset,
                      write_dataset)
from .denoise import FitConfig, denoise, fit_trajectory, total_loss
from .energy import (AgentState, EnergyModel, EnergyWeights, MaskTable, Neighbor, default_weights,
                     pair_collision_energy, total_collision_energy, total_energy)
from .engine import (SimConfig, SimulationRecord, SpawnSchedule, detect_overlaps, init_simulation, read_record,
                     read_schedule, run, tick, write_record, write_schedule)
from .metrics import Histogram, distribution_difference, evaluate, histogram, steering_angles
from .scenario import Lane, Scenario, SpatialGrid, TrafficLight, light_color_at, load_scenario, seconds_remaining
from .selection import IndicatorThresholds, SupplementConfig, acceptable, select_velocity, supplement
from .trajectory import Trajectory, read_trajectories, write_trajectories

__version__ = "0.1.0"

__all__ = [
    "AdjustmentContext", "AgentState", "CandidateVelocityDataset", "EnergyModel", "EnergyWeights", "FitConfig",
    "Histogram", "IndicatorThresholds", "Lane", "MaskTable", "Neighbor", "Scenario", "SimConfig",
    "SimulationRecord", "SpatialGrid", "SpawnSchedule", "SupplementConfig", "TrafficLight", "Trajectory",
    "acceptable", "adjust_guidance_weight", "adjust_velocity_weights", "append_velocity", "apply_light_policy",
    "build_dataset", "candidates_near", "default_weights", "denoise", "detect_overlaps", "distribution_difference",
    "evaluate", "fit_trajectory", "histogram", "init_simulation", "light_color_at", "load_scenario",
    "pair_collision_energy", "read_dataset", "read_record", "read_schedule", "read_trajectories", "run",
    "seconds_remaining", "select_velocity", "short_term_influence", "should_accelerate_yellow", "steering_angles",
    "supplement", "tick", "total_collision_energy", "total_energy", "total_loss", "write_dataset", "write_record",
    "write_schedule", "write_trajectories",
]
