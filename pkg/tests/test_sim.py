import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import expm_step_oracle
from vulture_pid.lti import TANK_PLANT, PidGains, Stability, TransferFunction, pid_loop, routh_stable, to_state_space
from vulture_pid.sim import (
    MetricsError,
    SimConfig,
    SimulationDiverged,
    StepResponse,
    compute_ise,
    compute_metrics,
    rk4_step_matrices,
    simulate_step,
)

REFERENCE = {"zn": PidGains(0.038, 0.001, 0.170), "evoa": PidGains(0.098, 0.006, 2.01)}


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(dt=0), dict(horizon=0.5), dict(settling_band=0.5), dict(settling_band=0), dict(rise_bounds=(0.9, 0.1))],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SimConfig(**kwargs)


class TestSimulateStep:
    def test_first_order_closed_form(self):
        cfg = SimConfig(dt=0.01, horizon=10)
        r = simulate_step(to_state_space(TransferFunction([1], [1, 1])), cfg)
        assert len(r.times) == 1001
        assert np.max(np.abs(r.outputs - (1 - np.exp(-r.times)))) < 1e-8

    def test_rk4_matrices_match_stagewise_rk4(self, rng):
        a = rng.normal(size=(4, 4))
        b = rng.normal(size=4)
        x = rng.normal(size=4)
        h = 0.05
        f = lambda z: a @ z + b
        k1 = f(x)
        k2 = f(x + h / 2 * k1)
        k3 = f(x + h / 2 * k2)
        k4 = f(x + h * k3)
        stagewise = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        phi, gamma = rk4_step_matrices(a, b, h)
        assert np.allclose(phi @ x + gamma, stagewise, rtol=1e-13, atol=1e-14)

    def test_unstable_diverges(self, sim_config):
        with pytest.raises(SimulationDiverged) as exc:
            simulate_step(to_state_space(TransferFunction([1], [1, -1])), sim_config)
        assert 0 < exc.value.time < sim_config.horizon

    @pytest.mark.parametrize("name", ["zn", "evoa"])
    def test_matches_matrix_exponential_oracle(self, name, sim_config):
        model = to_state_space(pid_loop(TANK_PLANT, REFERENCE[name]))
        r = simulate_step(model, sim_config)
        oracle = expm_step_oracle(model, sim_config.dt, sim_config.n_steps)
        assert np.max(np.abs(r.outputs - oracle)) < 1e-6

    def test_dt_halving_changes_ise_little(self):
        model = to_state_space(pid_loop(TANK_PLANT, REFERENCE["zn"]))
        coarse = compute_ise(simulate_step(model, SimConfig(dt=0.01)))
        fine = compute_ise(simulate_step(model, SimConfig(dt=0.005)))
        assert abs(coarse - fine) / fine < 1e-4


class TestMetrics:
    def test_ise_zero_for_perfect_tracking(self):
        t = np.linspace(0, 10, 101)
        assert compute_ise(StepResponse(t, np.ones_like(t))) == 0.0

    def test_first_order_indices(self):
        cfg = SimConfig(dt=0.01, horizon=10)
        m = compute_metrics(simulate_step(to_state_space(TransferFunction([1], [1, 1])), cfg), cfg)
        assert m.settling_time == pytest.approx(-math.log(0.02), abs=2e-3)
        assert m.overshoot_pct == 0.0
        assert m.rise_time == pytest.approx(math.log(9), abs=2e-3)
        # ISE of e^{-2t} over [0, 10]; trapezoid bias is dt^2/12 * (f'(10) - f'(0)) ~ 1.7e-5
        assert m.ise == pytest.approx((1 - math.exp(-20)) / 2 + 0.01**2 / 12 * 2, rel=1e-6)

    def test_zero_final_value(self):
        t = np.linspace(0, 10, 101)
        with pytest.raises(MetricsError):
            compute_metrics(StepResponse(t, np.zeros_like(t), dc_gain=0.0), SimConfig(dt=0.1, horizon=10))

    def test_never_settles(self):
        t = np.linspace(0, 100, 1001)
        y = 1 + 0.5 * np.sin(t)
        m = compute_metrics(StepResponse(t, y, dc_gain=1.0), SimConfig(dt=0.1, horizon=100))
        assert m.settling_time is None

    def test_overshoot_relative_to_final_value(self):
        t = np.linspace(0, 10, 1001)
        y = np.where(t <= 1, 0.6 * t, 0.5)
        m = compute_metrics(StepResponse(t, y, dc_gain=0.5), SimConfig(dt=0.01, horizon=10))
        assert m.overshoot_pct == pytest.approx(20.0, rel=1e-9)

    def test_tail_mean_fallback(self):
        t = np.linspace(0, 10, 1001)
        m = compute_metrics(StepResponse(t, np.full_like(t, 2.0)), SimConfig(dt=0.01, horizon=10))
        assert m.final_value == 2.0

    # regression values for this simulator (dt=0.01, 2% band); see the acceptance suite for the reference rows
    @pytest.mark.parametrize(
        "name, ise, ts, mp",
        [("zn", 30.780965075, 500.2351, 60.62928227), ("evoa", 6.887987150, 85.98254, 43.42791551)],
    )
    def test_reference_gain_regression(self, name, ise, ts, mp, sim_config):
        r = simulate_step(to_state_space(pid_loop(TANK_PLANT, REFERENCE[name])), sim_config)
        m = compute_metrics(r, sim_config)
        assert m.ise == pytest.approx(ise, rel=1e-8)
        assert m.settling_time == pytest.approx(ts, abs=1e-3)
        assert m.overshoot_pct == pytest.approx(mp, rel=1e-8)


gains_st = st.tuples(st.floats(0.001, 0.2), st.floats(0.0005, 0.02), st.floats(0.0, 4.0))


@settings(max_examples=40, deadline=None)
@given(gains_st)
def test_ise_non_negative_and_settling_consistent(g):
    loop = pid_loop(TANK_PLANT, PidGains(*g))
    assume(routh_stable(loop.den) is Stability.STABLE)
    cfg = SimConfig()
    r = simulate_step(to_state_space(loop), cfg)
    m = compute_metrics(r, cfg)
    assert m.ise >= 0
    assert m.overshoot_pct >= 0
    if abs(r.outputs[-1] - 1) < cfg.settling_band:
        assert m.settling_time is not None
    if m.settling_time is not None:
        tail = r.outputs[r.times > m.settling_time + cfg.dt]
        assert np.all(np.abs(tail - m.final_value) <= cfg.settling_band * m.final_value + 1e-12)
