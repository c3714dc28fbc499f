import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from vulture_pid.evoa import (
    EvoaConfig,
    FitnessError,
    GainRanges,
    change_angle,
    decode,
    default_pebble_max,
    encode,
    flip_bits,
    make_rng,
    optimize,
    quantum,
    roll_solution,
    rotate,
    toss_pebbles,
    xor_segment,
)
from vulture_pid.lti import PidGains

RANGES = GainRanges()
W = 16
N_BITS = 3 * W

genomes = st.lists(st.integers(0, 1), min_size=N_BITS, max_size=N_BITS).map(lambda b: np.array(b, dtype=np.uint8))


class TestConfig:
    def test_defaults(self):
        cfg = EvoaConfig()
        assert (cfg.w_bits, cfg.population, cfg.max_iterations, cfg.pebble_max) == (16, 20, 200, 6)
        assert default_pebble_max(1) == 1

    @pytest.mark.parametrize("kw", [dict(pebble_max=49), dict(pebble_max=0), dict(population=0), dict(w_bits=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            EvoaConfig(**kw)

    def test_ranges_invalid(self):
        with pytest.raises(ValueError):
            GainRanges(kp_range=(1, 1))
        with pytest.raises(ValueError):
            GainRanges(ki_range=(-1, 1))


class TestCodec:
    @pytest.mark.parametrize("w", [1, 4, 16])
    def test_extremes(self, w):
        lo = PidGains(*(r[0] for r in RANGES.as_list()))
        hi = PidGains(*(r[1] for r in RANGES.as_list()))
        assert not encode(lo, RANGES, w).any()
        assert encode(hi, RANGES, w).all()
        assert decode(np.zeros(3 * w, np.uint8), RANGES, w) == lo
        assert decode(np.ones(3 * w, np.uint8), RANGES, w) == hi

    def test_midpoint_msb_first(self):
        g = encode(PidGains(0.1, 0, 0), RANGES, W)
        assert g[:W].tolist() == [1] + [0] * 15  # round(0.5 * 65535) = 32768

    def test_round_trip_random(self, rng):
        q = quantum(RANGES, W)
        for _ in range(1000):
            g = PidGains(*(rng.uniform(lo, hi) for lo, hi in RANGES.as_list()))
            back = decode(encode(g, RANGES, W), RANGES, W)
            for a, b, dq in zip(g.as_tuple(), back.as_tuple(), q):
                assert abs(a - b) <= dq

    def test_round_trip_reference_evoa(self):
        g = PidGains(0.098, 0.006, 2.01)
        back = decode(encode(g, RANGES, W), RANGES, W)
        for a, b, dq in zip(g.as_tuple(), back.as_tuple(), quantum(RANGES, W)):
            assert abs(a - b) <= dq

    def test_clamps_with_warning(self):
        with pytest.warns(UserWarning, match="clamped"):
            g = encode(PidGains(5, 0, 0), RANGES, W)
        assert g[:W].all()

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            decode(np.zeros(47, np.uint8), RANGES, W)


class TestPrimitives:
    @given(genomes, st.integers(0, N_BITS - 1), st.lists(st.integers(0, 1), min_size=1, max_size=N_BITS))
    def test_xor_involution_and_zero_mask(self, g, start, mask):
        assert np.array_equal(xor_segment(xor_segment(g, start, mask), start, mask), g)
        assert np.array_equal(xor_segment(g, start, [0] * len(mask)), g)

    @given(genomes, st.integers(0, 200))
    def test_rotation_inverse_and_cycle(self, g, k):
        assert np.array_equal(rotate(rotate(g, k), -k), g)
        assert np.array_equal(rotate(g, N_BITS), g)
        assert np.array_equal(rotate(rotate(g, k), N_BITS - k), g)

    @given(genomes, st.sets(st.integers(0, N_BITS - 1), min_size=1, max_size=N_BITS))
    def test_flip_involution_and_distance(self, g, pos):
        f = flip_bits(g, sorted(pos))
        assert int(np.sum(f != g)) == len(pos)
        assert np.array_equal(flip_bits(f, sorted(pos)), g)

    def test_rotate_left_direction(self):
        g = np.array([1, 0, 0, 0], np.uint8)
        assert rotate(g, 1).tolist() == [0, 0, 0, 1]


class TestOperators:
    def test_length_and_change_bounds(self, rng):
        pm = 6
        for _ in range(2000):
            g = rng.integers(0, 2, N_BITS, dtype=np.uint8)
            t = toss_pebbles(g, rng, pm)
            r = roll_solution(g, rng)
            a = change_angle(g, rng, pm)
            assert len(t) == len(r) == len(a) == N_BITS
            assert np.sum(t != g) <= pm
            assert 1 <= np.sum(a != g) <= pm
            assert r.sum() == g.sum()

    def test_operators_do_not_mutate_input(self, rng):
        g = rng.integers(0, 2, N_BITS, dtype=np.uint8)
        keep = g.copy()
        toss_pebbles(g, rng, 6)
        roll_solution(g, rng)
        change_angle(g, rng, 6)
        assert np.array_equal(g, keep)

    def test_toss_segment_is_contiguous(self, rng):
        for _ in range(500):
            d = np.flatnonzero(toss_pebbles(np.zeros(N_BITS, np.uint8), rng, 6))
            if d.size:
                assert d[-1] - d[0] < 6


def toss_flip_counts(trials, seed):
    rng = np.random.default_rng(seed)
    zero = np.zeros(N_BITS, np.uint8)
    counts = np.zeros(N_BITS)
    for _ in range(trials):
        counts += toss_pebbles(zero, rng, 1)
    return counts


def angle_flip_counts(trials, seed, pebble_max=6):
    rng = np.random.default_rng(seed)
    zero = np.zeros(N_BITS, np.uint8)
    counts = np.zeros(N_BITS)
    for _ in range(trials):
        counts += change_angle(zero, rng, pebble_max)
    return counts


def check_toss_frequencies(counts, trials):
    # position uniform over 3W, mask bit is 1 with probability 1/2
    p = 1 / (2 * N_BITS)
    sigma = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(counts - trials * p) <= 4 * sigma)
    assert stats.chisquare(counts).pvalue > 0.001


@pytest.mark.parametrize("trials", [200_000, pytest.param(1_000_000, marks=pytest.mark.slow)])
def test_toss_per_bit_frequency(trials):
    check_toss_frequencies(toss_flip_counts(trials, 7), trials)


@pytest.mark.parametrize("trials", [200_000, pytest.param(1_000_000, marks=pytest.mark.slow)])
def test_change_angle_uniform(trials):
    counts = angle_flip_counts(trials, 8)
    # mean flip count is (1 + 6) / 2 per trial, spread evenly
    assert counts.sum() / trials == pytest.approx(3.5, rel=0.01)
    assert stats.chisquare(counts).pvalue > 0.001


def test_roll_shift_distribution():
    rng = np.random.default_rng(0)
    g = np.zeros(N_BITS, np.uint8)
    g[0] = 1
    seen = np.zeros(N_BITS)
    for _ in range(100_000):
        seen[np.flatnonzero(roll_solution(g, rng))[0]] += 1
    assert seen[0] == 0  # shift drawn from [1, 3W-1]
    assert stats.chisquare(seen[1:]).pvalue > 0.001


def popcount(g):
    return float(np.sum(g))


class TestOptimize:
    @pytest.mark.parametrize("seed", range(10))
    def test_popcount_reaches_zero(self, seed):
        cfg = EvoaConfig(w_bits=4, population=4, max_iterations=200, rng_seed=seed)
        res = optimize(cfg, None, popcount)
        assert res.best.fitness == 0
        assert not res.best.genome.any()

    def test_constant_fitness(self):
        cfg = EvoaConfig(w_bits=4, population=4, max_iterations=20, rng_seed=1)
        seed = np.ones(12, np.uint8)
        res = optimize(cfg, seed, lambda g: 3.0)
        assert res.history == [3.0] * 21
        assert np.array_equal(res.best.genome, seed)

    def test_zero_iterations(self):
        cfg = EvoaConfig(w_bits=4, population=5, max_iterations=0, rng_seed=3)
        res = optimize(cfg, None, popcount)
        assert len(res.history) == 1
        assert res.evaluations == 5

    def test_monotone_history_and_determinism(self):
        cfg = EvoaConfig(w_bits=8, population=6, max_iterations=100, rng_seed=99)
        target = make_rng(5).integers(0, 2, 24)
        f = lambda g: float(np.sum(g != target)) + 0.1 * float(g[0])
        a = optimize(cfg, None, f)
        b = optimize(cfg, None, f)
        assert a.history == b.history
        assert np.array_equal(a.best.genome, b.best.genome)
        assert all(x >= y for x, y in zip(a.history, a.history[1:]))

    def test_seed_is_member_zero(self):
        cfg = EvoaConfig(w_bits=4, population=3, max_iterations=0, rng_seed=0)
        seed = np.zeros(12, np.uint8)
        res = optimize(cfg, seed, popcount)
        assert res.best.fitness == 0

    def test_non_finite_fitness(self):
        cfg = EvoaConfig(w_bits=4, population=2, max_iterations=3)
        with pytest.raises(FitnessError) as exc:
            optimize(cfg, None, lambda g: float("nan"))
        assert exc.value.genome.shape == (12,)

    def test_parallel_map_is_equivalent(self):
        from concurrent.futures import ThreadPoolExecutor

        cfg = EvoaConfig(w_bits=6, population=5, max_iterations=30, rng_seed=4)
        serial = optimize(cfg, None, popcount)
        with ThreadPoolExecutor(3) as ex:
            threaded = optimize(cfg, None, popcount, map_fn=ex.map)
        assert serial.history == threaded.history

    def test_run_streams_independent(self):
        a = make_rng(42, 0).integers(0, 2**32, 4)
        b = make_rng(42, 1).integers(0, 2**32, 4)
        assert not np.array_equal(a, b)
        assert np.array_equal(a, make_rng(42, 0).integers(0, 2**32, 4))

    def test_population_of_one(self):
        cfg = EvoaConfig(w_bits=4, population=1, max_iterations=300, rng_seed=2)
        res = optimize(cfg, np.ones(12, np.uint8), popcount)
        assert res.best.fitness < 12
