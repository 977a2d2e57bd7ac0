"""Supply-power-minimising scheduling for multi-user MIMO-OFDM base stations.

Two-step scheduler (RAPS) combining antenna adaptation, power control and
discontinuous transmission, plus benchmark schedulers and a Monte Carlo
harness.
"""

from .benchmarks import BenchmarkResult, ba_schedule, dtx_schedule, max_power
from .channel import ChannelGrid, EigenGrid, SystemConfig, eigen_grid, generate, representative_channel
from .harness import DropResult, RunConfig, aggregate, emit, load_config, run, tradeoff_curve
from .power_model import PowerModelParams, SlotPowerTrace, energy_efficiency, frame_supply_power, supply_power
from .step1 import Step1Problem, Step1Solution, build_problem, power_for_rate, solve, solve_mode
from .step2 import FrameAllocation, ResourcePlan, allocate_frame, iwf_allocate, quantize, rcg_assign

__version__ = "0.1.0"

__all__ = [
    "BenchmarkResult",
    "ChannelGrid",
    "DropResult",
    "EigenGrid",
    "FrameAllocation",
    "PowerModelParams",
    "ResourcePlan",
    "RunConfig",
    "SlotPowerTrace",
    "Step1Problem",
    "Step1Solution",
    "SystemConfig",
    "aggregate",
    "allocate_frame",
    "ba_schedule",
    "build_problem",
    "dtx_schedule",
    "eigen_grid",
    "emit",
    "energy_efficiency",
    "frame_supply_power",
    "generate",
    "iwf_allocate",
    "load_config",
    "max_power",
    "power_for_rate",
    "quantize",
    "rcg_assign",
    "representative_channel",
    "run",
    "solve",
    "solve_mode",
    "supply_power",
    "tradeoff_curve",
]
