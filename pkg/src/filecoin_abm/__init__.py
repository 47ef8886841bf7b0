"""Deterministic discrete-time agent-based model of storage-network token supply."""

from ._version import __version__
from .agents import AgentAccount, AgentSpec, Observation, PowerDecision, Strategy
from .data_io import HistoricalData, load_config, load_historical, write_trajectory
from .engine import (
    BacktestReport,
    InitialState,
    Mode,
    RateSchedule,
    Simulation,
    SimulationAborted,
    SimulationConfig,
    Trajectory,
    backtest,
    distribute_rewards,
    external_rate,
    run,
)
from .supply import ModelBreakdownError, SupplyParams, SupplyState, VestingSchedule

__all__ = [
    "__version__",
    "AgentAccount", "AgentSpec", "Observation", "PowerDecision", "Strategy",
    "HistoricalData", "load_config", "load_historical", "write_trajectory",
    "BacktestReport", "InitialState", "Mode", "RateSchedule", "Simulation", "SimulationAborted",
    "SimulationConfig", "Trajectory", "backtest", "distribute_rewards", "external_rate", "run",
    "ModelBreakdownError", "SupplyParams", "SupplyState", "VestingSchedule",
]
