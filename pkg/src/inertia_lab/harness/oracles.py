"""Closed-form solutions used to cross-check the adaptive solver."""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import special

from ..damping import DampingSchedule
from ..diagnostics import FAIL, PASS, Verdict


def damped_linear(c: float, a: float, x0: float, v0: float, t: float) -> tuple[float, float]:
    """``x(t), x'(t)`` for ``x'' + c x' + a x = 0``.

    Distinct (possibly complex) roots use the two-exponential form; a repeated
    root uses ``(A + B t) exp(r t)``.
    """
    disc = c * c - 4.0 * a
    if disc == 0.0:
        r = -0.5 * c
        B = v0 - r * x0
        e = math.exp(r * t)
        return (x0 + B * t) * e, (B + r * (x0 + B * t)) * e
    sq = cmath.sqrt(disc)
    r1, r2 = 0.5 * (-c + sq), 0.5 * (-c - sq)
    A = (v0 - r2 * x0) / (r1 - r2)
    B = (r1 * x0 - v0) / (r1 - r2)
    e1, e2 = cmath.exp(r1 * t), cmath.exp(r2 * t)
    return (A * e1 + B * e2).real, (A * r1 * e1 + B * r2 * e2).real


def friction_integral(sched: DampingSchedule, t: float) -> float:
    """``int_0^t exp(-Gamma(s)) ds``.

    For ``alpha > 0`` the substitution ``w = k (1+s)**p`` with ``p = 1-alpha``
    and ``k = c/p`` gives
    ``exp(k) k**(-1/p) / p * (Gamma(1/p, k) - Gamma(1/p, k (1+t)**p))``
    in upper incomplete gamma functions.
    """
    c, alpha = sched.c, sched.alpha
    if alpha == 0.0:
        return -math.expm1(-c * t) / c
    p = 1.0 - alpha
    k = c / p
    a = 1.0 / p
    u = k * (1.0 + t) ** p
    upper = special.gammaincc(a, k) - special.gammaincc(a, u)
    return math.exp(k + special.gammaln(a) - a * math.log(k)) / p * upper


def pure_friction(sched: DampingSchedule, x0, v0, t: float):
    """``x(t), v(t)`` for ``x'' + gamma(t) x' = 0``: ``v = v0 exp(-Gamma)``."""
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    return x0 + v0 * friction_integral(sched, t), v0 * math.exp(-sched.big_gamma(t))


def exact_state(cfg, t: float):
    """Closed-form ``(x, v)`` at ``t`` for an oracle scenario."""
    kind = cfg.oracle["kind"]
    if kind == "damped_linear":
        a = float(cfg.potential.A[0, 0])
        x, v = damped_linear(cfg.damping.c, a, float(cfg.x0[0]), float(cfg.v0[0]), t)
        return np.array([x]), np.array([v])
    return pure_friction(cfg.damping, cfg.x0, cfg.v0, t)


def _rel(num, ref):
    scale = float(np.linalg.norm(ref))
    return float(np.linalg.norm(num - ref)) / scale if scale > 0 else float(np.linalg.norm(num))


def oracle_check(cfg, samples) -> Verdict:
    """Relative error of the solver's ``x`` against the closed form at ``oracle.times``.

    Velocity errors are reported alongside but do not gate the verdict.
    """
    tol = cfg.oracle["rel_tol"]
    by_t = {float(s.t): s for s in samples}
    rows = []
    worst = 0.0
    for t in cfg.oracle["times"]:
        s = by_t.get(float(t))
        if s is None:
            return Verdict("oracle", FAIL, math.inf, tol, {"reason": f"no checkpoint at t={t}"})
        x, v = exact_state(cfg, float(t))
        ex, ev = _rel(s.x, x), _rel(s.v, v)
        worst = max(worst, ex)
        rows.append({"t": float(t), "rel_err_x": ex, "rel_err_v": ev, "x_exact": x.tolist()})
    return Verdict("oracle", PASS if worst < tol else FAIL, worst, tol, {"times": rows, "kind": cfg.oracle["kind"]})
