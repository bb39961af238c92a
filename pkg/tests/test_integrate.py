import math

import numpy as np
import pytest

from inertia_lab.damping import DampingSchedule
from inertia_lab.errors import ConfigurationError, NumericFailure, StiffnessFailure
from inertia_lab.forcing import PowerDecay, ZeroSource
from inertia_lab.integrate import SolverSettings, State, integrate, integrate_reference, rhs
from inertia_lab.potentials import EvenPower, LeastSquares, Potential, Quadratic, ZeroPotential


def test_rhs_examples():
    dx, dv = rhs(DampingSchedule(1, 0), Quadratic([[1.0]], [0.0]), ZeroSource(1), State(0.0, np.array([1.0]), np.array([0.0])))
    assert dx.tolist() == [0.0] and dv.tolist() == [-1.0]
    dx, dv = rhs(DampingSchedule(1, 0), ZeroPotential(1), ZeroSource(1), State(0.0, np.array([7.0]), np.array([2.5])))
    assert dv.tolist() == [-2.5]
    _, dv = rhs(DampingSchedule(2, 0.5), ZeroPotential(2), ZeroSource(2), State(3.0, np.zeros(2), np.array([1.0, 0.0])))
    assert np.allclose(dv, [-1.0, 0.0])
    with pytest.raises(NumericFailure):
        rhs(DampingSchedule(1, 0), ZeroPotential(1), ZeroSource(1), State(0.0, np.array([np.nan]), np.array([0.0])))


def test_pure_friction_closed_form():
    samples = integrate(DampingSchedule(1, 0), ZeroPotential(1), ZeroSource(1), [0.0], [1.0], SolverSettings(t_end=10.0))
    last = samples[-1]
    assert last.t == 10.0
    assert abs(last.v[0] - math.exp(-10)) / math.exp(-10) < 1e-8
    assert abs(last.x[0] - (1 - math.exp(-10))) / (1 - math.exp(-10)) < 1e-8


def test_checkpoint_grid():
    s = SolverSettings(t_end=1e3, extra_checkpoints=(5.0, 2e3))
    grid = s.checkpoint_grid()
    assert grid[0] == 0.0 and grid[1] == pytest.approx(0.1) and grid[-1] == 1e3
    assert np.all(np.diff(grid) > 0)
    assert 5.0 in grid and 2e3 not in grid
    assert len(grid) == 1 + 4 * 60 + 1 + 1  # 0, 0.1..<1e3, 1e3 and 5.0


@pytest.mark.parametrize(
    "kwargs",
    [{"t_end": 0.0}, {"t_end": 1.0, "rel_tol": 1e-14}, {"t_end": 1.0, "abs_tol": 0.0}, {"t_end": 1.0, "max_step": -1}],
)
def test_settings_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SolverSettings(**kwargs)


def test_samples_land_on_grid():
    s = SolverSettings(t_end=50.0, extra_checkpoints=(3.3,))
    samples = integrate(DampingSchedule(2, 0.5), EvenPower(2), ZeroSource(2), [1.0, -0.5], [0.0, 0.0], s)
    assert [x.t for x in samples] == s.checkpoint_grid().tolist()
    assert all(x.w >= 0 for x in samples)


def test_adaptive_vs_reference():
    sched, pot = DampingSchedule(2.0, 0.5), LeastSquares([[1.0, 2.0], [0.0, 1.0], [1.0, 0.0]], [1.0, 0.0, 2.0])
    src = PowerDecay(np.array([0.6, 0.8]), 0.3, 1.6)
    x0, v0 = [1.0, -1.0], [0.5, 0.0]
    for tol in (1e-8, 1e-9):
        samples = integrate(sched, pot, src, x0, v0, SolverSettings(t_end=20.0, rel_tol=tol))
        ref = integrate_reference(sched, pot, src, x0, v0, 20.0, n_steps=20_000)
        y = np.concatenate((samples[-1].x, samples[-1].v))
        y_ref = np.concatenate((ref.x, ref.v))
        assert np.linalg.norm(y - y_ref) / np.linalg.norm(y_ref) < 10 * tol


def test_reference_closed_form():
    ref = integrate_reference(DampingSchedule(3.0, 0.0), Quadratic([[1.0]], [0.0]), ZeroSource(1), [1.0], [0.0], 10.0)
    r1, r2 = (-3 + math.sqrt(5)) / 2, (-3 - math.sqrt(5)) / 2
    exact = (r2 * math.exp(r1 * 10) - r1 * math.exp(r2 * 10)) / (r2 - r1)
    assert abs(ref.x[0] - exact) / abs(exact) < 1e-10


def test_reference_step_floor_and_consistency():
    with pytest.raises(ConfigurationError):
        integrate_reference(DampingSchedule(1, 0), ZeroPotential(1), ZeroSource(1), [0.0], [1.0], 1.0, n_steps=100)
    # stiff enough that 1e4 RK4 steps are far from converged
    with pytest.raises(NumericFailure), np.errstate(over="ignore", invalid="ignore"):
        integrate_reference(DampingSchedule(1, 0), Quadratic([[4e6]], [0.0]), ZeroSource(1), [1.0], [0.0], 100.0)


class _Cliff(Potential):
    """Gradient turns nonfinite past x = 1; the solver must give up cleanly."""

    kind = "Cliff"

    def __init__(self):
        self.dim, self.phi_star, self.canonical_minimizer = 1, 0.0, np.zeros(1)

    def value(self, x):
        return 0.0

    def grad(self, x):
        return np.array([np.nan]) if x[0] > 1.0 else np.zeros(1)


def test_stiffness_failure_carries_state():
    with pytest.raises(StiffnessFailure) as info:
        integrate(DampingSchedule(0.1, 0.5), _Cliff(), ZeroSource(1), [0.0], [1.0], SolverSettings(t_end=100.0))
    exc = info.value
    assert isinstance(exc, NumericFailure)
    assert exc.state is not None and exc.state.x[0] <= 1.0
    assert exc.samples and exc.samples[-1].t <= exc.state.t


def test_input_validation():
    with pytest.raises(ValueError):
        integrate(DampingSchedule(1, 0), EvenPower(2), ZeroSource(2), [1.0], [0.0], SolverSettings(t_end=1.0))
    with pytest.raises(NumericFailure):
        integrate(DampingSchedule(1, 0), EvenPower(1), ZeroSource(1), [np.inf], [0.0], SolverSettings(t_end=1.0))


class _Bank:
    names = ("one", "t")

    def __call__(self, t, x, v):
        return np.array([1.0, t])


def test_accumulators_integrate_exactly():
    samples = integrate(DampingSchedule(1, 0.5), EvenPower(1), ZeroSource(1), [1.0], [0.0], SolverSettings(t_end=30.0), _Bank())
    for s in samples:
        assert s.accumulators["one"] == pytest.approx(s.t, rel=1e-12, abs=1e-14)
        assert s.accumulators["t"] == pytest.approx(0.5 * s.t**2, rel=1e-12, abs=1e-14)


def test_deterministic():
    args = (DampingSchedule(2, 0.5), EvenPower(2), PowerDecay(np.array([1.0, 0.0]), 0.1, 1.9), [1.0, 0.2], [0.0, 0.1])
    a = integrate(*args, SolverSettings(t_end=100.0))
    b = integrate(*args, SolverSettings(t_end=100.0))
    assert all(np.array_equal(p.x, q.x) and np.array_equal(p.v, q.v) for p, q in zip(a, b))
