"""Egyptian Vulture Optimization over fixed-width binary genomes.

A genome is a ``uint8`` numpy array of 0/1 values holding three W-bit unsigned
fields (kp | ki | kd), most significant bit first.  Each iteration moves every
population member by pebble tossing, rolling and a change of tossing angle,
evaluates it once, and keeps the move only if fitness strictly improves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .lti import PidGains

Genome = np.ndarray
Fitness = Callable[[Genome], float]


class FitnessError(ArithmeticError):
    def __init__(self, genome: Genome, value):
        bits = "".join(map(str, np.asarray(genome, dtype=int)))
        super().__init__(f"fitness returned non-finite value {value!r} for genome {bits}")
        self.genome = genome
        self.value = value


@dataclass(frozen=True)
class GainRanges:
    kp_range: tuple[float, float] = (0.0, 0.2)
    ki_range: tuple[float, float] = (0.0, 0.02)
    kd_range: tuple[float, float] = (0.0, 4.0)

    def __post_init__(self):
        for name in ("kp_range", "ki_range", "kd_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo >= 0 and hi > lo):
                raise ValueError(f"{name} must be a finite interval with 0 <= lo < hi, got {(lo, hi)}")

    def as_list(self) -> list[tuple[float, float]]:
        return [self.kp_range, self.ki_range, self.kd_range]


def default_pebble_max(w_bits: int) -> int:
    return max(1, (3 * w_bits) // 8)


@dataclass(frozen=True)
class EvoaConfig:
    w_bits: int = 16
    population: int = 20
    max_iterations: int = 200
    pebble_max: int | None = None
    rng_seed: int = 0
    ranges: GainRanges = field(default_factory=GainRanges)

    def __post_init__(self):
        if self.pebble_max is None:
            object.__setattr__(self, "pebble_max", default_pebble_max(self.w_bits))
        if self.w_bits < 1:
            raise ValueError("w_bits must be positive")
        if self.population < 1:
            raise ValueError("population must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not 1 <= self.pebble_max <= 3 * self.w_bits:
            raise ValueError(f"pebble_max must lie in [1, 3*w_bits={3 * self.w_bits}], got {self.pebble_max}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be unsigned")

    @property
    def n_bits(self) -> int:
        return 3 * self.w_bits


@dataclass
class Candidate:
    genome: Genome
    fitness: float | None = None


@dataclass
class OptimizeResult:
    best: Candidate
    # history[0] is the best of the initial population, history[t] after iteration t
    history: list[float]
    evaluations: int


# -- codec --------------------------------------------------------------------


def _code_to_bits(code: int, w_bits: int) -> np.ndarray:
    return np.array([(code >> (w_bits - 1 - i)) & 1 for i in range(w_bits)], dtype=np.uint8)


def _bits_to_code(bits: np.ndarray) -> int:
    code = 0
    for b in bits:
        code = (code << 1) | int(b)
    return code


def encode(gains: PidGains, ranges: GainRanges, w_bits: int) -> Genome:
    top = (1 << w_bits) - 1
    fields = []
    for name, value, (lo, hi) in zip(("kp", "ki", "kd"), gains.as_tuple(), ranges.as_list()):
        if not lo <= value <= hi:
            warnings.warn(f"{name}={value:g} outside [{lo:g}, {hi:g}]; clamped", stacklevel=2)
            value = min(max(value, lo), hi)
        code = int(round((value - lo) / (hi - lo) * top))
        fields.append(_code_to_bits(code, w_bits))
    return np.concatenate(fields)


def decode(genome: Genome, ranges: GainRanges, w_bits: int) -> PidGains:
    genome = np.asarray(genome)
    if genome.shape != (3 * w_bits,):
        raise ValueError(f"genome has {genome.size} bits, expected {3 * w_bits}")
    top = (1 << w_bits) - 1
    values = []
    for k, (lo, hi) in enumerate(ranges.as_list()):
        code = _bits_to_code(genome[k * w_bits:(k + 1) * w_bits])
        values.append(lo + code / top * (hi - lo))
    return PidGains(*values)


def quantum(ranges: GainRanges, w_bits: int) -> tuple[float, float, float]:
    top = (1 << w_bits) - 1
    return tuple((hi - lo) / top for lo, hi in ranges.as_list())


# -- primitive moves ----------------------------------------------------------


def xor_segment(genome: Genome, start: int, mask: Sequence[int]) -> Genome:
    """XOR ``mask`` into the bits starting at ``start``; the mask is truncated at the genome end."""
    out = genome.copy()
    mask = np.asarray(mask, dtype=np.uint8)[: max(0, len(out) - start)]
    out[start:start + len(mask)] ^= mask
    return out


def rotate(genome: Genome, shift: int) -> Genome:
    """Circular rotation; positive ``shift`` rotates left."""
    return np.roll(genome, -shift)


def flip_bits(genome: Genome, positions: Iterable[int]) -> Genome:
    out = genome.copy()
    idx = np.fromiter(positions, dtype=np.intp)
    out[idx] ^= 1
    return out


# -- operators ----------------------------------------------------------------


def toss_pebbles(genome: Genome, rng: np.random.Generator, pebble_max: int) -> Genome:
    n = len(genome)
    start = int(rng.integers(n))
    length = int(rng.integers(1, pebble_max + 1))
    mask = rng.integers(0, 2, size=length, dtype=np.uint8)
    return xor_segment(genome, start, mask)


def roll_solution(genome: Genome, rng: np.random.Generator) -> Genome:
    n = len(genome)
    if n < 2:
        return genome.copy()
    left = bool(rng.integers(2))
    shift = int(rng.integers(1, n))
    return rotate(genome, shift if left else -shift)


def change_angle(genome: Genome, rng: np.random.Generator, pebble_max: int) -> Genome:
    count = int(rng.integers(1, pebble_max + 1))
    positions = rng.choice(len(genome), size=count, replace=False)
    return flip_bits(genome, positions)


def vulture_move(genome: Genome, rng: np.random.Generator, pebble_max: int) -> Genome:
    """Toss, roll, then change angle, as one composite move."""
    g = toss_pebbles(genome, rng, pebble_max)
    g = roll_solution(g, rng)
    return change_angle(g, rng, pebble_max)


def random_genome(n_bits: int, rng: np.random.Generator) -> Genome:
    return rng.integers(0, 2, size=n_bits, dtype=np.uint8)


# -- search loop --------------------------------------------------------------


def make_rng(seed: int, run_index: int | None = None) -> np.random.Generator:
    """PCG64 stream; run ``i`` of a batch gets the independent child ``SeedSequence(seed, spawn_key=(i,))``."""
    if run_index is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_index,)))


def _checked(genomes: list[Genome], values: Iterable[float]) -> list[float]:
    out = []
    for g, v in zip(genomes, values):
        v = float(v)
        if not np.isfinite(v):
            raise FitnessError(g, v)
        out.append(v)
    return out


def optimize(
    config: EvoaConfig,
    seed_candidate: Genome | None,
    fitness: Fitness,
    rng: np.random.Generator | None = None,
    map_fn: Callable = map,
) -> OptimizeResult:
    """Minimize ``fitness`` over 3W-bit genomes.

    ``map_fn`` may be a parallel map (e.g. ``executor.map``); random draws happen
    before evaluation and acceptance runs in member order, so results do not
    depend on it.
    """
    rng = make_rng(config.rng_seed) if rng is None else rng
    n_bits = config.n_bits
    population: list[Genome] = []
    if seed_candidate is not None:
        seed_candidate = np.asarray(seed_candidate, dtype=np.uint8)
        if seed_candidate.shape != (n_bits,):
            raise ValueError(f"seed genome has {seed_candidate.size} bits, expected {n_bits}")
        population.append(seed_candidate.copy())
    while len(population) < config.population:
        population.append(random_genome(n_bits, rng))

    scores = _checked(population, map_fn(fitness, population))
    evaluations = len(population)
    b = int(np.argmin(scores))
    best = Candidate(population[b].copy(), scores[b])
    history = [best.fitness]

    for _ in range(config.max_iterations):
        moved = [vulture_move(g, rng, config.pebble_max) for g in population]
        new_scores = _checked(moved, map_fn(fitness, moved))
        evaluations += len(moved)
        for i, (g, f) in enumerate(zip(moved, new_scores)):
            if f < scores[i]:
                population[i], scores[i] = g, f
                if f < best.fitness:
                    best = Candidate(g.copy(), f)
        history.append(best.fitness)
    return OptimizeResult(best, history, evaluations)
