"""Decentralized UAV swarm placement for LoS MIMO via log-linear learning.

The main entry points are :func:`run_experiment` for multi-seed batches,
:func:`uavswarm.engine.run` for a single learning run, and
:func:`uavswarm.oracle.verify_stochastic_stability` for the exact
Markov-chain check on a tiny instance.
"""
from .baselines import run_strategy
from .config import ExperimentConfig, parse_config
from .engine import LearningSchedule, RunRecord, learning_step, make_channel, run
from .errors import (CollisionError, ConfigError, ConvergenceError, GeometryError,
                     InfeasibleError, InitError, RestrictedActionError, SwarmError)
from .experiment import emit_figure_data, load_records, run_experiment
from .geometry import AntennaArray, LosChannel, build_ura, channel_matrix
from .metrics import capacity, local_reward, neighborhood_reward, numerical_rank, potential, rewards
from .state import (ACTIONS, Action, Lattice, NeighborGraph, SwarmState, apply_action,
                    init_state, local_view, make_state, restricted_actions)

__version__ = "0.1.0"

__all__ = [
    "ACTIONS", "Action", "AntennaArray", "CollisionError", "ConfigError", "ConvergenceError",
    "ExperimentConfig", "GeometryError", "InfeasibleError", "InitError", "Lattice",
    "LearningSchedule", "LosChannel", "NeighborGraph", "RestrictedActionError", "RunRecord",
    "SwarmError", "SwarmState", "apply_action", "build_ura", "capacity", "channel_matrix",
    "emit_figure_data", "init_state", "learning_step", "load_records", "local_reward",
    "local_view", "make_channel", "make_state", "neighborhood_reward", "numerical_rank",
    "parse_config", "potential", "restricted_actions", "rewards", "run", "run_experiment",
    "run_strategy",
]
