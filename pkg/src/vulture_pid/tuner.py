"""ISE objective, the ZN-seeded EVOA tuning pipeline, and multi-run statistics."""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .evoa import EvoaConfig, decode, encode, make_rng, optimize
from .lti import (
    PidGains,
    Stability,
    TransferFunction,
    pid_loop,
    routh_array,
    to_state_space,
)
from .sim import ResponseMetrics, SimConfig, SimulationDiverged, compute_ise, compute_metrics, simulate_step
from .zn import ControlType, UltimateParams, find_ultimate, zn_gains

# literal reference ZN row; its kd does not follow from the 3*ku*tu/40 rule
REFERENCE_ZN_GAINS = PidGains(0.038, 0.001, 0.170)
REFERENCE_EVOA_GAINS = PidGains(0.098, 0.006, 2.01)

INFEASIBLE_STEP = 1e6
OBJECTIVE_KINDS = ("ise", "ise+settling")


@dataclass(frozen=True)
class ObjectiveConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    penalty: float = 1e9
    objective_kind: str = "ise"

    def __post_init__(self):
        if self.objective_kind not in OBJECTIVE_KINDS:
            raise ValueError(f"objective_kind must be one of {OBJECTIVE_KINDS}, got {self.objective_kind!r}")
        if not (np.isfinite(self.penalty) and self.penalty > 0):
            raise ValueError("penalty must be a positive finite number")


def pid_objective(gains: PidGains, plant: TransferFunction, config: ObjectiveConfig) -> float:
    """ISE of the closed-loop unit-step response; infeasible loops map above ``penalty``.

    Unstable or marginal loops score ``penalty + 1e6 * (Routh sign changes)`` so the
    search can still rank them.  Feasible scores are capped just below the penalty.
    """
    loop = pid_loop(plant, gains)
    routh = routh_array(loop.den)[1]
    if routh.verdict is not Stability.STABLE:
        return config.penalty + INFEASIBLE_STEP * routh.sign_changes
    try:
        resp = simulate_step(to_state_space(loop), config.sim)
    except SimulationDiverged:
        return config.penalty
    if config.objective_kind == "ise":
        value = compute_ise(resp)
    else:
        m = compute_metrics(resp, config.sim)
        ts = config.sim.horizon if m.settling_time is None else m.settling_time
        # ties in ISE (to ~1e-9 relative) are broken by settling time
        value = m.ise * (1.0 + 1e-9 * ts / config.sim.horizon)
    return min(value, math.nextafter(config.penalty, 0.0))


@dataclass(frozen=True)
class GenomeObjective:
    """Picklable genome -> ISE callable for the optimizer."""

    plant: TransferFunction
    evoa: EvoaConfig
    objective: ObjectiveConfig

    def __call__(self, genome) -> float:
        gains = decode(genome, self.evoa.ranges, self.evoa.w_bits)
        return pid_objective(gains, self.plant, self.objective)


def response_metrics(gains: PidGains, plant: TransferFunction, sim: SimConfig) -> ResponseMetrics:
    resp = simulate_step(to_state_space(pid_loop(plant, gains)), sim)
    return compute_metrics(resp, sim)


@dataclass
class TuningReport:
    zn_gains: PidGains
    zn_metrics: ResponseMetrics
    best_gains: PidGains
    best_metrics: ResponseMetrics
    best_fitness: float
    history: list[float]
    ultimate: UltimateParams | None
    config: dict

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "ultimate": None if self.ultimate is None else asdict(self.ultimate),
            "zn_gains": asdict(self.zn_gains),
            "zn_metrics": self.zn_metrics.to_dict(),
            "best_gains": asdict(self.best_gains),
            "best_metrics": self.best_metrics.to_dict(),
            "best_fitness": self.best_fitness,
            "history": list(self.history),
            "config": self.config,
        }


def _clamp(gains: PidGains, evoa_config: EvoaConfig) -> PidGains:
    vals = [min(max(v, lo), hi) for v, (lo, hi) in zip(gains.as_tuple(), evoa_config.ranges.as_list())]
    return PidGains(*vals)


def config_snapshot(plant: TransferFunction, evoa_config: EvoaConfig, objective_config: ObjectiveConfig, **extra) -> dict:
    return {
        "plant": {"num": plant.num.as_floats(), "den": plant.den.as_floats()},
        "evoa": asdict(evoa_config),
        "objective": asdict(objective_config),
        **extra,
    }


def tune(
    plant: TransferFunction,
    evoa_config: EvoaConfig,
    objective_config: ObjectiveConfig,
    *,
    run_index: int | None = None,
    zn_seed: str = "recomputed",
    map_fn: Callable = map,
) -> TuningReport:
    """ZN baseline, then EVOA refinement seeded with the (clamped) ZN genome.

    ``zn_seed="reference"`` seeds with the literal reference ZN gains instead of the
    recomputed ZN rule gains.
    """
    ultimate = find_ultimate(plant)
    if zn_seed == "recomputed":
        zn = zn_gains(ultimate, ControlType.PID)
    elif zn_seed == "reference":
        zn = REFERENCE_ZN_GAINS
    else:
        raise ValueError(f"zn_seed must be 'recomputed' or 'reference', got {zn_seed!r}")
    zn = _clamp(zn, evoa_config)

    fitness = GenomeObjective(plant, evoa_config, objective_config)
    seed_genome = encode(zn, evoa_config.ranges, evoa_config.w_bits)
    rng = make_rng(evoa_config.rng_seed, run_index)
    result = optimize(evoa_config, seed_genome, fitness, rng=rng, map_fn=map_fn)

    # the unquantized ZN gains are the initial global best
    zn_fit = pid_objective(zn, plant, objective_config)
    if zn_fit <= result.best.fitness:
        best_gains, best_fit = zn, zn_fit
    else:
        best_gains = decode(result.best.genome, evoa_config.ranges, evoa_config.w_bits)
        best_fit = result.best.fitness
    history = [min(h, zn_fit) for h in result.history]

    sim = objective_config.sim
    return TuningReport(
        zn_gains=zn,
        zn_metrics=response_metrics(zn, plant, sim),
        best_gains=best_gains,
        best_metrics=response_metrics(best_gains, plant, sim),
        best_fitness=best_fit,
        history=history,
        ultimate=ultimate,
        config=config_snapshot(plant, evoa_config, objective_config, run_index=run_index, zn_seed=zn_seed),
    )


@dataclass(frozen=True)
class RunStatistics:
    runs: int
    best_values: list[float]
    mean: float
    std: float | None


def run_statistics(best_values: Sequence[float]) -> RunStatistics:
    """Mean and sample (M-1) standard deviation of per-run best values."""
    values = [float(v) for v in best_values]
    if not values:
        raise ValueError("need at least one value")
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) >= 2 else None
    return RunStatistics(len(values), values, mean, std)
