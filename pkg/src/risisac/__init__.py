"""Joint transmit beamforming, receive filtering and RIS reflection design for
integrated sensing and communication."""

__version__ = "0.1.0"

from .channels import ChannelSet, generate
from .driver import SolveReport, initialize, solve, solve_baseline, solve_method
from .scenario import ConfigError, ScenarioGeometry, SystemConfig, desk_config, load_config, full_scale_config
from .sweep import SweepSpec, run_sweep

__all__ = [
    "ChannelSet", "ConfigError", "ScenarioGeometry", "SolveReport", "SweepSpec", "SystemConfig",
    "desk_config", "generate", "initialize", "load_config", "full_scale_config", "run_sweep", "solve",
    "solve_baseline", "solve_method",
]
