"""Long-horizon integration of x'' + gamma(t) x' + grad Phi(x) = g(t).

The second-order system is integrated as a first-order system in (x, v)
with the Dormand-Prince 5(4) pair and PI step-size control.  Steps are
shortened to land exactly on checkpoints, so samples carry fifth-order
values rather than the fourth-order interpolant's.  Running integrals of
user-supplied densities are carried along on accepted steps (Simpson's rule
with the dense-output midpoint), so every increment is a nonnegative
combination of density values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .damping import DampingSchedule
from .errors import ConfigurationError, NumericFailure, StiffnessFailure
from .forcing import SourceTerm
from .potentials import Potential

__all__ = [
    "State",
    "SolverSettings",
    "TrajectorySample",
    "Integrands",
    "rhs",
    "integrate",
    "integrate_reference",
]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = _A[6]
# fifth-order weights minus embedded fourth-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense output: y(t + th h) = y + h K^T P [th, th^2, th^3, th^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

# PI controller (Hairer & Wanner's DOPRI5 defaults)
_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass(frozen=True)
class State:
    t: float
    x: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances, step cap and the log-spaced checkpoint grid.

    Checkpoints are ``0``, ``t0 * 10**(k / per_decade)`` below ``t_end``,
    ``t_end`` itself and any ``extra_checkpoints``.
    """

    t_end: float
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    t0: float = 0.1
    per_decade: int = 60
    extra_checkpoints: tuple = ()

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ConfigurationError(f"t_end must be positive and finite, got {self.t_end!r}")
        if not self.rel_tol >= 1e-13:
            raise ConfigurationError(f"rel_tol must be >= 1e-13, got {self.rel_tol!r}")
        if not self.abs_tol > 0:
            raise ConfigurationError(f"abs_tol must be positive, got {self.abs_tol!r}")
        if not self.max_step > 0:
            raise ConfigurationError("max_step must be positive")
        if not (self.t0 > 0 and self.per_decade >= 1):
            raise ConfigurationError("t0 must be positive and per_decade >= 1")
        object.__setattr__(self, "extra_checkpoints", tuple(float(t) for t in self.extra_checkpoints))

    def checkpoint_grid(self) -> np.ndarray:
        n_max = int(math.floor(self.per_decade * math.log10(self.t_end / self.t0) + 1e-9))
        logs = [self.t0 * 10.0 ** (k / self.per_decade) for k in range(max(n_max, -1) + 1)]
        pts = {0.0, float(self.t_end)}
        pts.update(t for t in logs if t < self.t_end)
        pts.update(t for t in self.extra_checkpoints if 0.0 <= t <= self.t_end)
        return np.array(sorted(pts))


@dataclass
class TrajectorySample:
    t: float
    x: np.ndarray
    v: np.ndarray
    w: float
    e_lyap: float = math.nan
    accumulators: dict = field(default_factory=dict)


class Integrands(Protocol):
    """Densities of running integrals, evaluated along the trajectory."""

    names: Sequence[str]

    def __call__(self, t: float, x: np.ndarray, v: np.ndarray) -> np.ndarray: ...


def _make_rhs(sched: DampingSchedule, pot: Potential, src: SourceTerm, n: int) -> Callable:
    c, alpha = sched.c, sched.alpha
    grad = pot.grad
    forced = not src.is_zero

    def f(t, y):
        x = y[:n]
        v = y[n:]
        dv = -(c / (1.0 + t) ** alpha) * v - grad(x)
        if forced:
            dv = dv + src(t)
        return np.concatenate((v, dv))

    return f


def rhs(sched: DampingSchedule, pot: Potential, src: SourceTerm, state: State):
    """``(dx, dv) = (v, -gamma(t) v - grad Phi(x) + g(t))``."""
    x = np.asarray(state.x, dtype=float)
    v = np.asarray(state.v, dtype=float)
    if x.shape != (pot.dim,) or v.shape != x.shape or src.dim != pot.dim:
        raise ValueError("state, potential and source dimensions disagree")
    if not (math.isfinite(state.t) and np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise NumericFailure("nonfinite state passed to rhs", state)
    dv = -sched.gamma(state.t) * v - pot.grad(x) + src(state.t)
    return v.copy(), dv


def _initial_step(f, t0, y0, f0, rtol, atol, order=5):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def _check_inputs(pot, src, x0, v0):
    x0 = np.array(x0, dtype=float)
    v0 = np.array(v0, dtype=float)
    if x0.shape != (pot.dim,) or v0.shape != (pot.dim,) or src.dim != pot.dim:
        raise ValueError(
            f"dimension mismatch: potential {pot.dim}, source {src.dim}, "
            f"x0 {x0.shape}, v0 {v0.shape}"
        )
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(v0))):
        raise NumericFailure("nonfinite initial data")
    return x0, v0


def _energy(pot, x, v):
    return 0.5 * float(v @ v) + pot.excess(x)


def integrate(
    sched: DampingSchedule,
    pot: Potential,
    src: SourceTerm,
    x0,
    v0,
    settings: SolverSettings,
    integrands: Integrands | None = None,
) -> list[TrajectorySample]:
    """Adaptive DP5(4) integration sampled at ``settings.checkpoint_grid()``.

    Each sample carries the running integrals of ``integrands`` (by name).
    Raises ``StiffnessFailure`` if the step falls below ``1e-14 * max(t, 1)``;
    the exception's ``state`` is the last accepted state and ``samples`` the
    checkpoints emitted so far.
    """
    x0, v0 = _check_inputs(pot, src, x0, v0)
    n = pot.dim
    f = _make_rhs(sched, pot, src, n)
    rtol, atol = settings.rel_tol, settings.abs_tol
    t_end = float(settings.t_end)
    grid = settings.checkpoint_grid()
    names = list(integrands.names) if integrands is not None else []
    m = len(names)

    def dens(t, y):
        if not m:
            return np.zeros(0)
        q = np.asarray(integrands(t, y[:n], y[n:]), dtype=float)
        if not np.all(np.isfinite(q)):
            raise NumericFailure(f"nonfinite integrand at t={t}", State(t, y[:n].copy(), y[n:].copy()))
        return q

    def sample(t, y, acc):
        x, v = y[:n].copy(), y[n:].copy()
        return TrajectorySample(t, x, v, _energy(pot, x, v), accumulators=dict(zip(names, acc.tolist())))

    t = 0.0
    y = np.concatenate((x0, v0))
    fy = f(t, y)
    q = dens(t, y)
    acc = np.zeros(m)
    samples = []
    gi = 0
    while gi < len(grid) and grid[gi] <= 0.0:
        samples.append(sample(0.0, y, acc))
        gi += 1

    h = min(_initial_step(f, t, y, fy, rtol, atol), settings.max_step, t_end)
    err_old = 1e-4
    K = np.empty((7, 2 * n))
    while t < t_end:
        h = min(h, settings.max_step)
        if h < 1e-14 * max(t, 1.0):
            exc = StiffnessFailure(f"step size underflow at t={t} (h={h})", State(t, y[:n].copy(), y[n:].copy()))
            exc.samples = samples
            raise exc
        # land exactly on the next checkpoint rather than interpolating to it
        t_next = float(grid[gi])
        clipped = t + h >= t_next
        h_free = h
        if clipped:
            h = t_next - t
        K[0] = fy
        for i in range(1, 7):
            yi = y + h * (_A[i] @ K[:i])
            K[i] = f(t + _C[i] * h, yi)
        y_new = yi  # stage 7 evaluates at the fifth-order solution (FSAL)
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(K[6])):
            h *= _MIN_FACTOR
            continue
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((h * (_E @ K) / scale) ** 2)))
        if not math.isfinite(err):
            h *= _MIN_FACTOR
            continue
        if err > 1.0:
            h /= min(1.0 / _MIN_FACTOR, err**_EXPO / _SAFETY)
            continue

        t_new = t_next if clipped else t + h
        q_new = dens(t_new, y_new)
        if m:
            th = 0.5
            y_mid = y + h * ((K.T @ _P) @ np.array([th, th * th, th**3, th**4]))
            acc = acc + h / 6.0 * (q + 4.0 * dens(t + 0.5 * h, y_mid) + q_new)
        if clipped:
            samples.append(sample(t_new, y_new, acc))
            gi += 1

        fac = err**_EXPO / err_old**_BETA if err > 0 else 0.0
        fac = max(1.0 / _MAX_FACTOR, min(1.0 / _MIN_FACTOR, fac / _SAFETY))
        err_old = max(err, 1e-4)
        t, y, fy, q = t_new, y_new, K[6].copy(), q_new
        # a step shortened to hit a checkpoint says little about the next one
        h = max(h / fac, h_free) if clipped else h / fac
    return samples


def integrate_reference(
    sched: DampingSchedule,
    pot: Potential,
    src: SourceTerm,
    x0,
    v0,
    t_end: float,
    n_steps: int = 10_000,
    verify: bool = True,
) -> State:
    """Fixed-step classical RK4 final state at ``t_end``.

    With ``verify`` the run is repeated with ``2 n_steps`` and a
    ``NumericFailure`` is raised if the two final states differ by more than
    1e-10 relative; the finer result is returned.
    """
    if n_steps < 10_000:
        raise ConfigurationError("n_steps must be >= 1e4")
    x0, v0 = _check_inputs(pot, src, x0, v0)
    n = pot.dim
    f = _make_rhs(sched, pot, src, n)

    def run(steps):
        h = t_end / steps
        y = np.concatenate((x0, v0))
        for k in range(steps):
            t = k * h
            k1 = f(t, y)
            k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = f(t + h, y + h * k3)
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericFailure("nonfinite state in reference integration")
        return y

    y = run(n_steps)
    if verify:
        y2 = run(2 * n_steps)
        gap = np.linalg.norm(y2 - y) / max(np.linalg.norm(y2), 1e-300)
        if gap >= 1e-10:
            raise NumericFailure(f"reference run not converged: doubling n_steps changed the state by {gap:.3e}")
        y = y2
    return State(float(t_end), y[:n].copy(), y[n:].copy())
