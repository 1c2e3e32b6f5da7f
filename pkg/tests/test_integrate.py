import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from keensim.errors import StallError
from keensim.integrate import (DormandPrince, IntegratorConfig, classify_asymptotic, detect_limit_cycle,
                               dp_step, envelope_decay_rate, section_crossings, simulate, solve, step,
                               trajectory_from_arrays)
from keensim.model import SystemId
from keensim.params import basic_params, inflation_params, speculation_params


def test_config_validation():
    IntegratorConfig()
    for bad in ({"rel_tol": 0}, {"t_end": -1}, {"sample_dt": 0}, {"b_switch_threshold": 1},
                {"switch_back_ratio": 1.0}):
        with pytest.raises(ValueError):
            IntegratorConfig(**bad)


def test_dp_step_is_exact_on_quartic_time_polynomial():
    # a degree-4 right-hand side in t is integrated exactly by a fifth-order method
    y, _ = dp_step(lambda t, y: np.array([t**4]), 0.0, [0.0], 1.0)
    assert y[0] == pytest.approx(0.2, abs=1e-15)


def test_solve_exponential_and_oscillator():
    t = np.linspace(0, 5, 11)
    y = solve(lambda t, y: -y, (0, 5), [1.0], t, rel_tol=1e-11, abs_tol=1e-13)
    assert np.allclose(y[:, 0], np.exp(-t), rtol=1e-9, atol=1e-12)
    osc = solve(lambda t, y: np.array([y[1], -y[0]]), (0, 20), [1.0, 0.0], t * 4, 1e-11, 1e-13)
    assert np.allclose(osc[:, 0], np.cos(t * 4), atol=1e-8)


def test_dense_output_between_steps():
    solver = DormandPrince(lambda t, y: -y, 0.0, [1.0], 1e-10, 1e-12, max_step=0.5)
    solver.advance(10.0)
    mid = 0.5 * (solver.t_old + solver.t)
    assert solver.dense(mid)[0] == pytest.approx(math.exp(-mid), rel=1e-8)


def test_stall_on_blow_up():
    solver = DormandPrince(lambda t, y: y * y, 0.0, [1.0], 1e-9, 1e-11)
    with pytest.raises(StallError):
        for _ in range(100000):
            solver.advance(2.0)


def test_model_step_error_estimate_shrinks():
    p = inflation_params()
    _, e1 = step("Inflation3", (0.9, 0.9, 0.3), 0.0, 0.2, p)
    _, e2 = step("Inflation3", (0.9, 0.9, 0.3), 0.0, 0.1, p)
    assert e2 < e1 / 20
    with pytest.raises(ValueError):
        step("Inflation3", (0.9, 0.9, 0.3), 0.0, 0.0, p)


def _oracle_inflation(t, y, r=0.02):
    # written from the model equations independently of keensim.model
    w, lam, b = y
    phi0, phi1 = 0.04 / (1 - 0.04**2), 0.04**3 / (1 - 0.04**2)
    pi = 1 - w - r * b
    k = -0.0065 + math.exp(-5 + 20 * pi)
    g = k / 3 - 0.01
    i = 4 * (1.2 * w - 1)
    return [w * (phi1 / (1 - lam) ** 2 - phi0 - 0.025 - 0.2 * i), lam * (g - 0.045), k - pi - b * (i + g)]


def test_simulation_matches_scipy_oracle():
    cfg = IntegratorConfig(t_end=50.0)
    traj = simulate("Inflation3", (0.9, 0.9, 0.3), inflation_params(r=0.02), cfg)
    ref = solve_ivp(_oracle_inflation, (0, 50), [0.9, 0.9, 0.3], method="DOP853", rtol=1e-12, atol=1e-14,
                    t_eval=traj.times)
    assert np.max(np.abs(ref.y.T - traj.states)) < 1e-7


def test_trajectory_shape_and_observables():
    traj = simulate("Speculation4", (0.83, 0.967, 0.34, 0.004), speculation_params(), IntegratorConfig(t_end=10))
    assert traj.times.size == 201 and traj.states.shape == (201, 4)
    assert set(traj.observables) == {"pi", "i", "g", "g_nominal", "c_share", "p"}
    assert traj.observables["p"][0] == 1.0
    assert not traj.stalled and traj.stats["accepted_steps"] > 0


def test_basic_has_no_price_column():
    traj = simulate("Basic3", (0.9, 0.9, 0.3), basic_params(), IntegratorConfig(t_end=5))
    assert "p" not in traj.observables
    assert np.all(traj.observables["i"] == 0.0)


def test_invalid_initial_state():
    with pytest.raises(ValueError):
        simulate("Basic3", (0.9, 1.2, 0.3), basic_params())
    with pytest.raises(ValueError):
        simulate("Basic3", (0.9, 0.9), basic_params())


def test_debt_explosion_switches_chart():
    traj = simulate("Inflation3", (0.9, 0.9, 0.3), inflation_params(), IntegratorConfig(t_end=600))
    systems = [s for _, s in traj.system_segments]
    assert systems[0] is SystemId.Inflation3 and SystemId.InflationInverse3 in systems
    assert traj.system_at(traj.times.size - 1) is SystemId.InflationInverse3
    assert traj.primal[-1, 2] > 1e6
    assert classify_asymptotic(traj, inflation_params()).name == "ConvergedTo(Deflat3_InfDebt)"


def test_step_budget_marks_stall():
    traj = simulate("Inflation3", (0.9, 0.9, 0.3), inflation_params(), IntegratorConfig(t_end=100, max_steps=10))
    assert traj.stalled and "budget" in traj.diagnostic


def test_section_crossings_of_a_sine():
    t = np.linspace(0, 20 * math.pi, 20001)
    s = np.column_stack([np.sin(t), np.cos(t)])
    ct, cs = section_crossings(t, s, 0.0)
    assert np.allclose(np.diff(ct), 2 * math.pi, atol=1e-9)
    assert np.allclose(cs[:, 1], 1.0, atol=1e-9)


def _synthetic(values, t_end=600.0, dt=0.05):
    t = np.arange(0, t_end + dt / 2, dt)
    return trajectory_from_arrays(t, values(t), "Speculation4")


def test_limit_cycle_on_synthetic_orbit():
    traj = _synthetic(lambda t: np.column_stack([0.8 + 0.05 * np.sin(t / 5), 0.9 + 0.02 * np.cos(t / 5),
                                                 0.3 + 0.1 * np.sin(t / 5 + 1), 0.01 * np.cos(t / 5)]))
    cycle = detect_limit_cycle(traj, 100.0)
    assert cycle is not None and cycle.multiplicity == 1
    assert cycle.period == pytest.approx(10 * math.pi, rel=1e-6)
    assert cycle.amplitudes[0] == pytest.approx(0.1, rel=1e-3)


def test_period_two_orbit():
    traj = _synthetic(lambda t: np.column_stack([0.8 + 0.05 * np.sin(t) + 0.02 * np.sin(t / 2 + 0.3),
                                                 0.9 + 0.01 * np.cos(t / 2), 0.3 + 0 * t, 0 * t]))
    cycle = detect_limit_cycle(traj, 100.0)
    assert cycle is not None and cycle.period == pytest.approx(4 * math.pi, rel=1e-6)


def test_decaying_orbit_is_not_a_cycle():
    traj = _synthetic(lambda t: np.column_stack([0.8 + 0.05 * np.exp(-t / 300) * np.sin(t), 0.9 + 0 * t,
                                                 0.3 + 0 * t, 0 * t]))
    assert detect_limit_cycle(traj, 100.0) is None


def test_tiny_oscillation_is_not_a_cycle():
    traj = _synthetic(lambda t: np.column_stack([0.8 + 1e-4 * np.sin(t), 0.9 + 0 * t, 0.3 + 0 * t, 0 * t]))
    assert detect_limit_cycle(traj, 100.0) is None


def test_monotone_debt_is_diverged():
    t = np.arange(0, 100.05, 0.05)
    traj = trajectory_from_arrays(t, np.column_stack([0.5 + 0 * t, 0.5 + 0 * t, np.exp(t / 10)]), "Basic3")
    c = classify_asymptotic(traj, basic_params(), equilibria=[])
    assert c.kind == "Diverged" and c.name == "Diverged(b->+inf)"


def test_undetermined_when_nothing_fits():
    t = np.arange(0, 100.05, 0.05)
    traj = trajectory_from_arrays(t, np.column_stack([0.5 + 0.1 * np.sin(t), 0.5 + 0 * t, np.sin(t)]), "Basic3")
    assert classify_asymptotic(traj, basic_params(), equilibria=[]).name == "Undetermined"


def test_envelope_decay_rate():
    t = np.arange(0, 200, 0.05)
    assert envelope_decay_rate(t, np.exp(-0.07 * t) * np.cos(t)) == pytest.approx(0.07, rel=1e-2)
    assert math.isnan(envelope_decay_rate(t, t))
