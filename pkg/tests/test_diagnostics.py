import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inertia_lab import diagnostics as D
from inertia_lab.damping import DampingSchedule, build_h_table
from inertia_lab.forcing import ZeroSource
from inertia_lab.integrate import SolverSettings, State, integrate
from inertia_lab.potentials import Quadratic, ZeroPotential

GRID = SolverSettings(t_end=1e4).checkpoint_grid()[1:]
HALF = Quadratic([[1.0]], [0.0])


def st_(x, v, t=0.0):
    return State(t, np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(v, float)))


def test_energy_examples():
    assert D.energy_w(HALF, st_(3.0, 4.0)) == 12.5
    assert D.energy_w(HALF, st_(0.0, 0.0)) == 0.0


def test_lyapunov_examples():
    assert D.lyapunov_e(1.0, HALF, st_(1.0, 0.0), [0.0], 0.0) == 2.0
    assert D.lyapunov_e(0.7, HALF, st_(0.0, 0.0), [0.0], 0.0) == 0.0
    a = D.lyapunov_e(0.3, HALF, st_(0.4, -1.2), [0.0], 0.1)
    assert a == D.lyapunov_e(0.3, HALF, st_(0.4, -1.2), [0.0], 0.1)


def test_anchor_examples():
    z = np.zeros(2)
    assert D.anchored_momentum(0.9, st_([0, 0], [0, 0]), z) == 0.0
    assert D.anchored_momentum(3.0, st_([1, 0], [0, 0]), z) == 1.0
    assert D.anchored_momentum(0.5, st_([0, 0], [1, 0]), z) == 0.5


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_energy_nonnegative(x, v):
    assert D.energy_w(HALF, st_(x, v)) >= 0


# synthetic calibration ----------------------------------------------------

def test_envelope_examples():
    exact = D.envelope_bound_check(GRID, GRID**-1.0, 1.0)
    assert exact.passed and exact.statistic == pytest.approx(1.0)
    logged = D.envelope_bound_check(GRID, GRID**-1.0 * np.log(GRID), 1.0)
    assert logged.status == D.FAIL
    short = D.envelope_bound_check(GRID[GRID <= 10], GRID[GRID <= 10] ** -1.0, 1.0)
    assert short.status == D.NA


def test_decay_examples():
    t = SolverSettings(t_end=1e5).checkpoint_grid()[1:]
    assert D.decay_to_zero_check(t, t**-2.0, 1.5).passed
    flat = D.decay_to_zero_check(t, (1 + t) ** -1.5, 1.5)
    assert flat.status == D.FAIL and flat.statistic == pytest.approx(1.0)


def test_decay_horizon_dependence():
    # over 1e4 the reference and final decades sit one decade apart:
    # an extra t**-0.5 only buys a factor 10**-0.5
    r = D.decay_to_zero_check(GRID, GRID**-2.0, 1.5)
    assert r.statistic == pytest.approx(10**-0.5, rel=0.05)


@pytest.mark.parametrize("exponent", [0.5, 1.0, 1.5])
def test_thinning_invariance(exponent):
    rng = np.random.default_rng(3)
    t = SolverSettings(t_end=1e5).checkpoint_grid()[1:]
    w = t ** -(exponent + 0.3) * (1 + 0.2 * np.sin(3 * np.log(t))) * (1 + 0.01 * rng.random(t.size))
    for check in (D.envelope_bound_check, D.decay_to_zero_check):
        full = check(t, w, exponent).statistic
        thin = check(t[::2], w[::2], exponent).statistic
        assert abs(thin - full) <= 0.05 * full


def test_fit_power_law_examples():
    f = D.fit_power_law(GRID, GRID**-2.0)
    assert f.exponent == pytest.approx(-2.0, abs=1e-6) and f.power_law
    f = D.fit_power_law(GRID, 5 * GRID**-1.3)
    assert f.exponent == pytest.approx(-1.3, abs=1e-6)
    t = GRID[GRID <= 30]
    f = D.fit_power_law(t, np.exp(-2 * t))
    assert f.exponent < -5 and not f.power_law
    mostly_negative = -np.ones_like(GRID)
    mostly_negative[-3:] = 1.0
    assert D.fit_power_law(GRID, mostly_negative).status == D.NA


def test_opial_examples():
    t = np.linspace(0, 200, 400)
    xs = np.tile([1.0, 2.0], (t.size, 1))
    v = D.opial_distance_check(t, xs, [np.zeros(2), np.ones(2)])
    assert v.passed and all(r["oscillation"] == 0 for r in v.details["minimizers"])
    u = np.array([1.0, -1.0])
    xs = np.outer(np.exp(-t), u)
    v = D.opial_distance_check(t, xs, [np.zeros(2)])
    assert v.details["minimizers"][0]["oscillation"] < 1e-6


def test_cauchy_examples():
    t = np.linspace(0, 100, 500)
    assert D.cauchy_tail(t, np.ones((t.size, 3)), 20) == 0.0
    xs = np.outer(np.exp(-t), [1.0, 2.0]) + 5.0
    assert D.cauchy_tail(t, xs, 20) < 1e-8


def test_flatness_examples():
    t = GRID
    assert D.accumulator_flatness(t, np.zeros_like(t)).statistic == 0.0
    conv = D.accumulator_flatness(t, 1 - 1 / (1 + t))  # integral of (1+t)**-2
    T = t[-1]
    expected = (1 / (1 + T / 10) - 1 / (1 + T)) / (1 - 1 / (1 + T / 10))
    assert conv.passed and conv.statistic == pytest.approx(expected, rel=1e-3)
    log = D.accumulator_flatness(t, np.log1p(t))
    assert not log.passed


def test_running_sup():
    t = GRID
    assert D.running_sup_stable(t, 1 / (1 + t)).passed
    assert not D.running_sup_stable(t, np.log1p(t)).passed


# runs ---------------------------------------------------------------------

def _run(sched, pot, x0, v0, t_end):
    ht = build_h_table(sched, 4 * t_end)
    accs = D.standard_accumulators(sched.alpha, sched.alpha)
    bank = D.AccumulatorBank(accs, sched, pot, ZeroSource(pot.dim), ht)
    samples = integrate(sched, pot, ZeroSource(pot.dim), x0, v0, SolverSettings(t_end=t_end), bank)
    D.attach_lyapunov(samples, ht, pot, pot.canonical_minimizer)
    return samples, ht, accs


def test_descent_unforced_quadratic():
    samples, ht, _ = _run(DampingSchedule(1.0, 0.0), HALF, [1.0], [0.0], 100.0)
    v = D.lyapunov_descent_check(samples, ht)
    assert v.passed and v.details["t1"] == 0.0


def test_descent_at_minimizer_is_trivial():
    samples, ht, _ = _run(DampingSchedule(2.0, 0.5), HALF, [0.0], [0.0], 100.0)
    assert all(s.e_lyap == 0.0 for s in samples)
    v = D.lyapunov_descent_check(samples, ht)
    assert v.passed and v.details["t1"] > 0


def test_descent_short_run_not_applicable():
    samples, ht, _ = _run(DampingSchedule(0.1, 0.9), HALF, [1.0], [0.0], 0.5)
    assert D.lyapunov_descent_check(samples, ht).status == D.NA


def test_invariants_on_unforced_run():
    samples, _, accs = _run(DampingSchedule(2.0, 0.5), ZeroPotential(2), [0.0, 0.0], [1.0, -1.0], 100.0)
    t, w = D.series(samples, "w")
    assert D.energy_monotone_check(t, w).passed
    assert D.energy_balance_check(samples).passed
    assert D.accumulators_monotone(samples, accs).passed


def test_bank_validation():
    sched = DampingSchedule(1, 0.5)
    with pytest.raises(ValueError):
        D.AccumulatorBank(D.standard_accumulators(0.5, 0.5), sched, HALF, ZeroSource(1), None)
    with pytest.raises(ValueError):
        D.Accumulator("x", "cubic", "W")
    dup = [D.Accumulator("a", "one", "W"), D.Accumulator("a", "one", "vel2")]
    with pytest.raises(ValueError):
        D.AccumulatorBank(dup, sched, HALF, ZeroSource(1))


def test_report_serialization():
    rep = D.DiagnosticsReport("demo", last_t=1.0, cauchy_tail=math.nan)
    rep.verdicts.append(D.combine("T1", [D.Verdict("x", D.PASS, 0.5, 1.0, {"arr": np.arange(2)})]))
    data = json.loads(json.dumps(rep.to_dict()))
    for key in ("scenario", "verdicts", "exponent_fits", "accumulators", "oscillations", "cauchy_tail"):
        assert key in data
    assert data["verdicts"][0]["checks"][0]["details"]["arr"] == [0, 1]
    assert data["cauchy_tail"] == "nan"


def test_combine():
    p = D.Verdict("p", D.PASS, 0, 1)
    f = D.Verdict("f", D.FAIL, 2, 1)
    n = D.Verdict("n", D.NA, math.nan, 1)
    assert D.combine("T", [p, p]).status == D.PASS
    assert D.combine("T", [p, n]).status == D.NA
    assert D.combine("T", [n, f]).status == D.FAIL
    assert D.combine("T", [f], exploratory=True).status == D.EXPLORATORY
