"""PID gain tuning with Ziegler-Nichols baselines and Egyptian Vulture Optimization."""

__version__ = "0.1.0"

from .lti import (  # noqa: E402
    TANK_PLANT,
    PidGains,
    Polynomial,
    Stability,
    StateSpaceModel,
    TransferFunction,
    closed_loop,
    dc_gain,
    pid_loop,
    pid_transfer_function,
    routh_stable,
    to_state_space,
)
from .sim import ResponseMetrics, SimConfig, StepResponse, compute_ise, compute_metrics, simulate_step  # noqa: E402
from .zn import ControlType, UltimateParams, find_ultimate, zn_gains  # noqa: E402
from .evoa import EvoaConfig, GainRanges, decode, encode, optimize  # noqa: E402
from .tuner import ObjectiveConfig, RunStatistics, TuningReport, pid_objective, run_statistics, tune  # noqa: E402
