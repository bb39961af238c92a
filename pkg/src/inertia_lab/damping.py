"""Vanishing damping schedule gamma(t) = c / (1 + t)**alpha and the auxiliary h.

``h`` is the bounded-growth solution of ``h' = gamma h - 1``,

    h(t) = exp(Gamma(t)) * integral_t^inf exp(-Gamma(s)) ds,

with ``Gamma`` the antiderivative of ``gamma``.  Forward integration of this
equation amplifies errors by ``exp(Gamma)``, so the table is filled by
integrating backward from a far seed point where ``h`` is known from its
asymptotic expansion.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, NumericFailure

__all__ = [
    "DampingSchedule",
    "HTable",
    "gamma_at",
    "big_gamma_at",
    "build_h_table",
    "h_at",
    "h_prime_at",
    "asymptotic_h",
]

NODES_PER_EFOLD = 500
SEED_FACTOR = 4.0
SEED_DAMPING = 36.0
FD_RESIDUAL_TARGET = 5e-7


@dataclass(frozen=True)
class DampingSchedule:
    """Damping magnitude ``c > 0`` and decay exponent ``0 <= alpha < 1``."""

    c: float
    alpha: float

    def __post_init__(self):
        c, alpha = float(self.c), float(self.alpha)
        if not (math.isfinite(c) and c > 0):
            raise ConfigurationError(f"damping c must be positive, got {self.c!r}")
        if not (0.0 <= alpha < 1.0):
            raise ConfigurationError(f"damping alpha must lie in [0, 1), got {self.alpha!r}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "alpha", alpha)

    def gamma(self, t: float) -> float:
        return self.c / (1.0 + t) ** self.alpha

    def gamma_prime(self, t: float) -> float:
        return -self.alpha * self.c * (1.0 + t) ** (-self.alpha - 1.0)

    def big_gamma(self, t: float) -> float:
        p = 1.0 - self.alpha
        if self.alpha == 0.0:
            return self.c * t
        # expm1/log1p keep Gamma accurate for small t
        return self.c * math.expm1(p * math.log1p(t)) / p


def _check_time(t):
    if not t >= 0.0:
        raise ValueError(f"time must be nonnegative, got {t!r}")


def gamma_at(sched: DampingSchedule, t: float) -> float:
    _check_time(t)
    return sched.gamma(t)


def big_gamma_at(sched: DampingSchedule, t: float) -> float:
    """Closed-form ``c ((1+t)^(1-alpha) - 1) / (1-alpha)``."""
    _check_time(t)
    return sched.big_gamma(t)


def asymptotic_h(sched: DampingSchedule, t: float) -> float:
    """Large-``t`` expansion of ``h``, truncated at its smallest term.

    With ``s = 1 + t`` and ``p = 1 - alpha``,
    ``h ~ sum_k a_k s**(alpha - k p)`` where ``a_0 = 1/c`` and
    ``a_{k+1} = a_k (alpha - k p) / c``.  The first two terms are
    ``(1/gamma) (1 - gamma'/gamma**2)``.  For ``alpha`` in {0, 1/2} the
    series terminates and the value is exact.
    """
    c, alpha = sched.c, sched.alpha
    s = 1.0 + t
    p = 1.0 - alpha
    term = s**alpha / c
    total = term
    ratio_base = c * s**p
    for k in range(60):
        nxt = term * (alpha - k * p) / ratio_base
        if nxt == 0.0 or abs(nxt) >= abs(term):
            break
        total += nxt
        term = nxt
        if abs(term) < 1e-17 * abs(total):
            break
    return total


@dataclass(frozen=True, eq=False)
class HTable:
    """Tabulated ``h`` on ``grid`` with cubic-spline interpolation."""

    grid: np.ndarray
    values: np.ndarray
    schedule: DampingSchedule
    _spline: CubicSpline = field(init=False, repr=False)
    _knots: list = field(init=False, repr=False)
    _coef: list = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ConfigurationError("grid and values must be 1-D arrays of equal length >= 2")
        if not np.all(np.diff(grid) > 0):
            raise ConfigurationError("grid must be strictly increasing")
        grid.setflags(write=False)
        values.setflags(write=False)
        spline = CubicSpline(grid, values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_knots", grid.tolist())
        object.__setattr__(self, "_coef", spline.c.T.tolist())

    @property
    def t_end(self) -> float:
        return float(self.grid[-1])

    def _check_range(self, t):
        lo, hi = self._knots[0], self._knots[-1]
        if np.any(np.asarray(t) < lo) or np.any(np.asarray(t) > hi):
            raise ValueError(f"t outside table range [{lo}, {hi}]")

    def __call__(self, t):
        """Interpolated ``h``; scalar fast path for solver inner loops."""
        if isinstance(t, float) or isinstance(t, int):
            knots = self._knots
            if t < knots[0] or t > knots[-1]:
                raise ValueError(f"t={t} outside table range [{knots[0]}, {knots[-1]}]")
            i = bisect.bisect_right(knots, t) - 1
            if i >= len(self._coef):
                i = len(self._coef) - 1
            a, b, c, d = self._coef[i]
            u = t - knots[i]
            return ((a * u + b) * u + c) * u + d
        self._check_range(t)
        return self._spline(t)

    def prime(self, t):
        """``h'`` from the defining relation ``h' = gamma h - 1``."""
        if isinstance(t, float) or isinstance(t, int):
            return self.schedule.gamma(t) * self(t) - 1.0
        t = np.asarray(t, dtype=float)
        gam = self.schedule.c / (1.0 + t) ** self.schedule.alpha
        return gam * self(t) - 1.0

    def fd_residual(self) -> np.ndarray:
        """``|h'_fd - gamma h + 1|`` at interior nodes, ``h'_fd`` from the grid."""
        dh = np.gradient(self.values, self.grid, edge_order=2)
        gam = self.schedule.c / (1.0 + self.grid) ** self.schedule.alpha
        return np.abs(dh - gam * self.values + 1.0)[1:-1]


def h_at(table: HTable, t: float) -> float:
    return table(t)


def h_prime_at(table: HTable, t: float) -> float:
    return table.prime(t)


def _rk4(sched, t, y, dt):
    g = sched.gamma
    k1 = g(t) * y - 1.0
    k2 = g(t + 0.5 * dt) * (y + 0.5 * dt * k1) - 1.0
    k3 = g(t + 0.5 * dt) * (y + 0.5 * dt * k2) - 1.0
    k4 = g(t + dt) * (y + dt * k3) - 1.0
    return y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _march_back(sched, t, y, t_target, dt, rtol=1e-13, atol=1e-15):
    """Adaptive step-doubling RK4 from ``t`` down to ``t_target``.

    Returns ``(y, dt)`` with ``dt > 0`` the last suggested step size.
    """
    while t > t_target:
        dt = min(dt, 2.0 / sched.gamma(max(t - dt, 0.0)))
        last = t - dt <= t_target
        step = t - t_target if last else dt
        full = _rk4(sched, t, y, -step)
        half = _rk4(sched, t, y, -0.5 * step)
        half = _rk4(sched, t - 0.5 * step, half, -0.5 * step)
        err = abs(half - full) / 15.0
        tol = atol + rtol * abs(half)
        if not math.isfinite(half):
            raise NumericFailure(f"nonfinite h while integrating backward at t={t}")
        if err <= tol:
            t = t_target if last else t - step
            y = half
            if last:
                return y, max(dt, step)
        fac = 4.0 if err == 0.0 else min(4.0, max(0.1, 0.9 * (tol / err) ** 0.2))
        dt = step * fac
    return y, dt


def build_h_table(
    sched: DampingSchedule,
    t_end: float,
    n_nodes: int = 100,
    seed_factor: float = SEED_FACTOR,
) -> HTable:
    """Tabulate ``h`` on log-spaced nodes over ``[0, t_end]``.

    ``n_nodes`` is a floor; the grid is refined to at least
    ``NODES_PER_EFOLD`` nodes per e-fold of ``1 + t``, and doubled until the
    finite-difference residual of ``h' - gamma h + 1``, divided by
    ``max(1, gamma h)``, is below ``FD_RESIDUAL_TARGET``.  The backward pass starts at ``seed_time``.
    """
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ConfigurationError(f"t_end must be positive and finite, got {t_end!r}")
    if int(n_nodes) < 100:
        raise ConfigurationError(f"n_nodes must be >= 100, got {n_nodes!r}")
    if seed_factor < 1.0:
        raise ConfigurationError("seed_factor must be >= 1")
    span = math.log1p(t_end)
    per_efold = NODES_PER_EFOLD
    while True:
        n = max(int(n_nodes), int(math.ceil(span * per_efold)) + 1)
        table = _fill_table(sched, t_end, n, seed_factor)
        # relative to the size of the terms: for tiny c, h itself is huge
        scale = np.maximum(1.0, (table.values / (1.0 + table.grid) ** sched.alpha * sched.c)[1:-1])
        if sched.alpha == 0.0 or (table.fd_residual() / scale).max() < FD_RESIDUAL_TARGET:
            return table
        if per_efold >= 64 * NODES_PER_EFOLD:
            raise NumericFailure("h table residual did not reach target under grid refinement")
        per_efold *= 2


def seed_time(sched: DampingSchedule, t_end: float, seed_factor: float = SEED_FACTOR) -> float:
    """Start of the backward pass.

    At least ``seed_factor * t_end``, pushed further out until the backward
    pass contracts the seed error by ``exp(-SEED_DAMPING)``.
    """
    t_seed = seed_factor * t_end
    if sched.alpha == 0.0:
        return t_seed
    p = 1.0 - sched.alpha
    target = sched.big_gamma(t_end) + SEED_DAMPING
    t_needed = (1.0 + target * p / sched.c) ** (1.0 / p) - 1.0
    return max(t_seed, t_needed)


def _fill_table(sched, t_end, n, seed_factor):
    grid = np.expm1(np.linspace(0.0, math.log1p(t_end), n))
    grid[0] = 0.0
    grid[-1] = t_end
    if sched.alpha == 0.0:
        return HTable(grid, np.full(n, 1.0 / sched.c), sched)

    t = seed_time(sched, t_end, seed_factor)
    y = asymptotic_h(sched, t)
    dt = 1e-3 * (1.0 + t)
    values = np.empty(n)
    for i in range(n - 1, -1, -1):
        y, dt = _march_back(sched, t, y, float(grid[i]), dt)
        t = float(grid[i])
        values[i] = y
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise NumericFailure("backward h integration produced nonpositive or nonfinite values")
    return HTable(grid, values, sched)
