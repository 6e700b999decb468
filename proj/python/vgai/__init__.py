"""Flocking with graph aggregation and imitation-learned visual features."""

from ._core import (
    AggregationBuffer,
    CameraConfig,
    Policy,
    PolicyConfig,
    SimConfig,
    SwarmState,
    TrainConfig,
    adjacency,
    centralized_expert,
    evaluate,
    gso,
    handcrafted_state,
    init_swarm,
    local_heuristic,
    make_policy,
    relative_cost,
    render_observation,
    run_episode,
    saturate,
    step_dynamics,
    train,
    validate_initialization,
    velocity_variance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
