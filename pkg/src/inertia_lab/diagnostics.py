"""Theorem-facing quantities computed from a completed trajectory.

Checks work on plain arrays (times and values) so that synthetic series can
be fed in directly; ``series`` and ``positions`` pull those arrays out of a
list of ``TrajectorySample``.  Asymptotic statements are turned into
desk-scale proxies:

* ``O(t**-p)``: the running maximum of ``t**p W`` over the final two decades
  exceeds that over the first two post-burn-in decades by less than 1.2x;
* ``o(t**-p)``: the median of ``(1+t)**p W`` over the final decade is below
  a quarter of its median over ``[1e2, 1e3]``;
* a finite integral: the growth of its running value over the final decade
  is below 5% of the value at ``T/10``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .damping import DampingSchedule, HTable
from .forcing import SourceTerm
from .integrate import State, TrajectorySample
from .potentials import Potential

PASS = "pass"
FAIL = "fail"
NA = "not-applicable"
EXPLORATORY = "exploratory"

BURN_IN = 10.0
ENVELOPE_RATIO = 1.2
DECAY_RATIO = 0.25
FLATNESS_LIMIT = 0.05
FLATNESS_EPS = 1e-30
CAUCHY_LIMIT = 1e-3
DESCENT_TOL_RATE = 1e-6
MONOTONE_TOL_RATE = 1e-9
BALANCE_TOL_RATE = 1e-7
POWER_LAW_RESIDUAL = 0.05
T1_MARGIN = 1e-9
MIN_HORIZON = 1e3  # shortest t_end for final-decade checks

TRACE_COLUMNS = (
    "t", "W", "t2a_W", "E", "M1_anchor", "I_alphaW", "I_vel2",
    "I_gradgamma", "I_vL1", "dist_xstar",
)


# --------------------------------------------------------------------------
# accumulators

WEIGHTS = ("power", "h", "inv_gamma", "gamma", "one")
INTEGRANDS = ("W", "vel2", "grad_norm", "excess", "speed", "g_dot_v", "g_dot_anchor", "g_sqrt2W")
SIGNED = {"g_dot_v", "g_dot_anchor"}


@dataclass(frozen=True)
class Accumulator:
    """A running integral ``int_0^t weight(s) * integrand(s) ds``."""

    name: str
    weight: str
    integrand: str
    nu: float = 0.0

    def __post_init__(self):
        if self.weight not in WEIGHTS:
            raise ValueError(f"unknown weight {self.weight!r}")
        if self.integrand not in INTEGRANDS:
            raise ValueError(f"unknown integrand {self.integrand!r}")

    @property
    def nonnegative(self) -> bool:
        return self.integrand not in SIGNED


def standard_accumulators(alpha: float, nu: float) -> list[Accumulator]:
    """Integrals tracked on every run.

    ``nu`` sets the velocity weight ``(1+t)**(2 nu - alpha)``.
    """
    return [
        Accumulator("I_alphaW", "power", "W", alpha),
        Accumulator("I_vel2", "power", "vel2", 2.0 * nu - alpha),
        Accumulator("I_hPhi", "h", "excess"),
        Accumulator("I_hvel2", "h", "vel2"),
        Accumulator("I_gradgamma", "inv_gamma", "grad_norm"),
        Accumulator("I_vL1", "one", "speed"),
        Accumulator("I_dissip", "gamma", "vel2"),
        Accumulator("I_gv", "one", "g_dot_v"),
        Accumulator("I_E", "h", "g_dot_anchor"),
        Accumulator("I_Kb", "one", "g_sqrt2W"),
    ]


class AccumulatorBank:
    """Evaluates the densities of a set of accumulators at a point."""

    def __init__(
        self,
        accumulators: Sequence[Accumulator],
        sched: DampingSchedule,
        pot: Potential,
        src: SourceTerm,
        h_table: HTable | None = None,
        x_star=None,
    ):
        self.accumulators = list(accumulators)
        self.names = [a.name for a in self.accumulators]
        if len(set(self.names)) != len(self.names):
            raise ValueError("accumulator names must be unique")
        needs_h = any(a.weight == "h" or a.integrand == "g_dot_anchor" for a in self.accumulators)
        if needs_h and h_table is None:
            raise ValueError("an h table is required for h-weighted accumulators")
        self.sched, self.pot, self.src, self.h_table = sched, pot, src, h_table
        self.x_star = np.asarray(pot.canonical_minimizer if x_star is None else x_star, dtype=float)
        self._plan = [(a.weight, a.integrand, a.nu) for a in self.accumulators]

    def __call__(self, t, x, v):
        pot, src = self.pot, self.src
        gam = self.sched.gamma(t)
        h = self.h_table(t) if self.h_table is not None else math.nan
        vel2 = float(v @ v)
        excess = pot.excess(x)
        w = 0.5 * vel2 + excess
        g = src(t)
        cache = {}

        def base(name):
            if name not in cache:
                if name == "W":
                    val = w
                elif name == "vel2":
                    val = vel2
                elif name == "excess":
                    val = excess
                elif name == "speed":
                    val = math.sqrt(vel2)
                elif name == "grad_norm":
                    gr = pot.grad(x)
                    val = math.sqrt(float(gr @ gr))
                elif name == "g_dot_v":
                    val = float(g @ v)
                elif name == "g_dot_anchor":
                    val = float(g @ (x - self.x_star + h * v))
                else:  # g_sqrt2W
                    val = src.norm(t) * math.sqrt(2.0 * w)
                cache[name] = val
            return cache[name]

        out = np.empty(len(self._plan))
        for i, (weight, integrand, nu) in enumerate(self._plan):
            if weight == "power":
                wt = (1.0 + t) ** nu
            elif weight == "h":
                wt = h
            elif weight == "inv_gamma":
                wt = 1.0 / gam
            elif weight == "gamma":
                wt = gam
            else:
                wt = 1.0
            out[i] = wt * base(integrand)
        return out


# --------------------------------------------------------------------------
# pointwise quantities

def energy_w(pot: Potential, state: State) -> float:
    """``0.5 ||v||**2 + Phi(x) - Phi*``."""
    v = np.asarray(state.v, dtype=float)
    return 0.5 * float(v @ v) + pot.excess(np.asarray(state.x, dtype=float))


def lyapunov_e(h_val: float, pot: Potential, state: State, x_star, integral_term: float) -> float:
    """``2 h**2 (Phi - Phi*) + ||x - x* + h v||**2 - 2 * integral_term``."""
    x = np.asarray(state.x, dtype=float)
    anchor = x - np.asarray(x_star, dtype=float) + h_val * np.asarray(state.v, dtype=float)
    return 2.0 * h_val**2 * pot.excess(x) + float(anchor @ anchor) - 2.0 * integral_term


def anchored_momentum(h_val: float, state: State, x_star) -> float:
    """``||x - x* + h v||``."""
    anchor = np.asarray(state.x, dtype=float) - np.asarray(x_star, dtype=float) + h_val * np.asarray(state.v)
    return math.sqrt(float(anchor @ anchor))


def attach_lyapunov(samples, h_table: HTable, pot: Potential, x_star, term: str = "I_E"):
    """Fill ``e_lyap`` on each sample from its state and the ``term`` accumulator."""
    for s in samples:
        s.e_lyap = lyapunov_e(h_table(float(s.t)), pot, s, x_star, s.accumulators.get(term, 0.0))
    return samples


def series(samples, name: str):
    """``(t, values)`` arrays; ``name`` is a sample field or accumulator name."""
    t = np.array([s.t for s in samples], dtype=float)
    if name in ("w", "e_lyap", "t"):
        vals = np.array([getattr(s, name) for s in samples], dtype=float)
    else:
        vals = np.array([s.accumulators[name] for s in samples], dtype=float)
    return t, vals


def positions(samples):
    return np.array([s.t for s in samples], dtype=float), np.array([s.x for s in samples], dtype=float)


# --------------------------------------------------------------------------
# verdicts

@dataclass
class Verdict:
    name: str
    status: str
    statistic: float
    threshold: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self):
        return _jsonable(asdict(self))


@dataclass
class TheoremVerdict:
    tag: str
    status: str
    checks: list

    def to_dict(self):
        return {"tag": self.tag, "status": self.status, "checks": [c.to_dict() for c in self.checks]}


def combine(tag: str, checks: list, exploratory: bool = False) -> TheoremVerdict:
    if exploratory:
        return TheoremVerdict(tag, EXPLORATORY, checks)
    statuses = [c.status for c in checks]
    if FAIL in statuses:
        status = FAIL
    elif NA in statuses or not statuses:
        status = NA
    else:
        status = PASS
    return TheoremVerdict(tag, status, checks)


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


def _decades(t):
    pos = t[t > 0]
    if pos.size < 2:
        return 0.0
    return math.log10(pos[-1] / pos[0])


def envelope_bound_check(t, w, exponent: float, burn_in: float = BURN_IN) -> Verdict:
    """``W = O(t**-exponent)`` via bounded running maxima of ``t**exponent W``."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    name = f"envelope_t^{exponent:g}W"
    if _decades(t) < 4.0 - 1e-9 or t[-1] < MIN_HORIZON:
        return Verdict(name, NA, math.nan, ENVELOPE_RATIO, {"reason": "fewer than 4 decades of data"})
    s = t**exponent * w
    first = (t >= burn_in) & (t <= burn_in * 100.0)
    final = t >= t[-1] / 100.0
    m_first = float(np.max(s[first]))
    m_final = float(np.max(s[final]))
    ratio = m_final / m_first if m_first > 0 else (0.0 if m_final == 0 else math.inf)
    return Verdict(
        name, _status(ratio < ENVELOPE_RATIO), ratio, ENVELOPE_RATIO,
        {"max_first": m_first, "max_final": m_final, "burn_in": burn_in},
    )


def decay_to_zero_check(t, w, exponent: float) -> Verdict:
    """``W = o(t**-exponent)`` via the median of ``rho = (1+t)**exponent W``."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    name = f"decay_(1+t)^{exponent:g}W"
    if _decades(t) < 4.0 - 1e-9 or t[-1] < MIN_HORIZON:
        return Verdict(name, NA, math.nan, DECAY_RATIO, {"reason": "fewer than 4 decades of data"})
    rho = (1.0 + t) ** exponent * w
    ref = rho[(t >= 1e2) & (t <= 1e3)]
    fin = rho[t >= t[-1] / 10.0]
    med_ref = float(np.median(ref))
    med_fin = float(np.median(fin))
    ratio = med_fin / med_ref if med_ref > 0 else (0.0 if med_fin == 0 else math.inf)
    return Verdict(
        name, _status(ratio < DECAY_RATIO), ratio, DECAY_RATIO,
        {"median_reference": med_ref, "median_final": med_fin},
    )


@dataclass
class PowerLawFit:
    field: str
    status: str
    exponent: float
    residual: float
    power_law: bool
    n_used: int

    def to_dict(self):
        return _jsonable(asdict(self))


def fit_power_law(t, values, field: str = "W") -> PowerLawFit:
    """Log-log least-squares slope over the final two decades.

    ``residual`` is the RMS deviation in natural-log units; the fit is flagged
    as a power law when it is below 0.05.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if _decades(t) < 2.0 - 1e-9:
        return PowerLawFit(field, NA, math.nan, math.nan, False, 0)
    win = (t >= t[-1] / 100.0) & (t > 0)
    tw, vw = t[win], values[win]
    keep = vw > 0
    if keep.sum() < 2 or keep.sum() < 0.5 * keep.size:
        return PowerLawFit(field, NA, math.nan, math.nan, False, int(keep.sum()))
    lt, lv = np.log(tw[keep]), np.log(vw[keep])
    slope, icept = np.polyfit(lt, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * lt + icept)) ** 2)))
    return PowerLawFit(field, PASS, float(slope), resid, resid < POWER_LAW_RESIDUAL, int(keep.sum()))


def opial_distance_check(t, xs, minimizers, x0=None) -> Verdict:
    """Oscillation of ``||x(t) - z||`` over the final decade for each ``z``."""
    t = np.asarray(t, dtype=float)
    xs = np.asarray(xs, dtype=float)
    x0 = xs[0] if x0 is None else np.asarray(x0, dtype=float)
    tail = xs[t >= t[-1] / 10.0]
    rows = []
    ok = True
    worst = 0.0
    for z in minimizers:
        z = np.asarray(z, dtype=float)
        d = np.linalg.norm(tail - z, axis=1)
        osc = float(d.max() - d.min())
        limit = 1e-2 * (1.0 + float(np.linalg.norm(x0 - z)))
        ok &= osc < limit
        worst = max(worst, osc / limit)
        rows.append({"z": z.tolist(), "oscillation": osc, "limit": limit, "final_distance": float(d[-1])})
    return Verdict("opial_distance", _status(ok), worst, 1.0, {"minimizers": rows})


def cauchy_tail(t, xs, T: float) -> float:
    """``max ||x(s) - x(t)||`` over stored checkpoints with ``s, t >= T``."""
    t = np.asarray(t, dtype=float)
    pts = np.asarray(xs, dtype=float)[t >= T]
    if len(pts) < 2:
        return 0.0
    return float(pdist(pts).max())


def accumulator_flatness(t, values, name: str = "integral") -> Verdict:
    """``(I(T) - I(T/10)) / max(I(T/10), eps)``; "finite" when below 0.05."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    t_end = t[-1]
    early = float(np.interp(t_end / 10.0, t, values))
    ratio = (float(values[-1]) - early) / max(early, FLATNESS_EPS)
    return Verdict(
        f"flatness_{name}", _status(ratio < FLATNESS_LIMIT), ratio, FLATNESS_LIMIT,
        {"final": float(values[-1]), "at_T_over_10": early},
    )


def running_sup_stable(t, values, name: str = "sup") -> Verdict:
    """Running supremum attains no new maximum in the final decade."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    before = float(np.max(values[t <= t[-1] / 10.0]))
    overall = float(np.max(values))
    return Verdict(
        f"sup_stable_{name}", _status(overall <= before), overall / before if before > 0 else math.inf, 1.0,
        {"sup_before_final_decade": before, "sup_overall": overall},
    )


def lyapunov_descent_check(
    samples, h_table: HTable, t1_threshold: float = -0.5, excess_term: str = "I_hPhi"
) -> Verdict:
    """``E(t_{k+1}) - E(t_k) <= -int h (Phi - Phi*) + 1e-6 dt`` past ``t_1``.

    ``t_1`` is the first checkpoint from which ``2 h' - 1 < t1_threshold``
    holds at every later checkpoint.
    """
    t, e = series(samples, "e_lyap")
    _, ih = series(samples, excess_term)
    inside = t <= h_table.t_end
    cond = np.zeros_like(t, dtype=bool)
    # a small margin so that exact ties (c=2, alpha=1/2 at t=0) are not decided by rounding
    cond[inside] = 2.0 * np.asarray(h_table.prime(t[inside])) - 1.0 < t1_threshold - T1_MARGIN
    bad = np.nonzero(~cond)[0]
    k1 = 0 if bad.size == 0 else int(bad[-1]) + 1
    if k1 >= len(t) - 1:
        return Verdict("lyapunov_descent", NA, math.nan, DESCENT_TOL_RATE, {"reason": "run shorter than t1"})
    dt = np.diff(t[k1:])
    excess = (np.diff(e[k1:]) + np.diff(ih[k1:])) / dt
    worst = float(excess.max())
    return Verdict(
        "lyapunov_descent", _status(worst <= DESCENT_TOL_RATE), worst, DESCENT_TOL_RATE,
        {"t1": float(t[k1]), "violations": int(np.sum(excess > DESCENT_TOL_RATE))},
    )


def energy_monotone_check(t, w) -> Verdict:
    """With ``g = 0``: ``W`` nonincreasing across checkpoints up to 1e-9 per unit time."""
    t = np.asarray(t, dtype=float)
    rate = np.diff(np.asarray(w, dtype=float)) / np.diff(t)
    worst = float(rate.max()) if rate.size else 0.0
    return Verdict("energy_monotone", _status(worst <= MONOTONE_TOL_RATE), worst, MONOTONE_TOL_RATE)


def energy_balance_check(samples) -> Verdict:
    """``W(t2) - W(t1) + int gamma ||v||^2 - int <g, v> = 0`` per checkpoint interval."""
    t, w = series(samples, "w")
    _, diss = series(samples, "I_dissip")
    _, gv = series(samples, "I_gv")
    res = np.abs(np.diff(w) + np.diff(diss) - np.diff(gv)) / np.diff(t)
    worst = float(res.max()) if res.size else 0.0
    return Verdict("energy_balance", _status(worst <= BALANCE_TOL_RATE), worst, BALANCE_TOL_RATE)


def forcing_bound_check(samples) -> Verdict:
    """Per-interval ``W`` increase bounded by ``int ||g|| sqrt(2 W)``."""
    t, w = series(samples, "w")
    _, kb = series(samples, "I_Kb")
    excess = (np.diff(w) - np.diff(kb)) / np.diff(t)
    worst = float(excess.max()) if excess.size else 0.0
    return Verdict("forcing_bound", _status(worst <= BALANCE_TOL_RATE), worst, BALANCE_TOL_RATE)


def accumulators_monotone(samples, accumulators: Sequence[Accumulator]) -> Verdict:
    """Nonnegative-integrand accumulators never decrease (exact comparison)."""
    bad = []
    for acc in accumulators:
        if not acc.nonnegative:
            continue
        _, vals = series(samples, acc.name)
        if np.any(np.diff(vals) < 0):
            bad.append(acc.name)
    return Verdict("accumulators_monotone", _status(not bad), float(len(bad)), 0.0, {"decreasing": bad})


# --------------------------------------------------------------------------
# theorem verdicts

@dataclass
class RunContext:
    sched: DampingSchedule
    pot: Potential
    src: SourceTerm
    h_table: HTable
    x_star: np.ndarray
    n_minimizers: int = 3


def anchor_series(samples, ctx: RunContext):
    return np.array([anchored_momentum(ctx.h_table(float(s.t)), s, ctx.x_star) for s in samples])


def _tail_check(t, verdict: Verdict) -> Verdict:
    # final-decade comparisons say nothing before the asymptotic regime
    if t[-1] >= MIN_HORIZON:
        return verdict
    reason = f"t_end below {MIN_HORIZON:g}"
    return Verdict(verdict.name, NA, math.nan, verdict.threshold, {"reason": reason})


def theorem1_checks(samples, ctx: RunContext) -> list:
    alpha = ctx.sched.alpha
    t, w = series(samples, "w")
    _, ixs = positions(samples)
    h = np.asarray(ctx.h_table(t))
    checks = [
        envelope_bound_check(t, w, 2.0 * alpha),
        _tail_check(t, accumulator_flatness(*series(samples, "I_alphaW"), name="I_alphaW")),
        _tail_check(t, running_sup_stable(t, anchor_series(samples, ctx), name="M1_anchor")),
        _tail_check(t, running_sup_stable(t, h**2 * w, name="h2W")),
        _tail_check(t, opial_distance_check(t, ixs, ctx.pot.minimizers(ctx.n_minimizers).points)),
        lyapunov_descent_check(samples, ctx.h_table),
    ]
    return checks


def theorem2_checks(samples, ctx: RunContext, nu: float) -> list:
    t, w = series(samples, "w")
    return [
        decay_to_zero_check(t, w, 2.0 * nu),
        _tail_check(t, accumulator_flatness(*series(samples, "I_vel2"), name="I_vel2")),
    ]


def theorem3_checks(samples, ctx: RunContext) -> list:
    t, xs = positions(samples)
    tail = cauchy_tail(t, xs, t[-1] / 10.0)
    checks = [
        Verdict("cauchy_tail", _status(tail < CAUCHY_LIMIT), tail, CAUCHY_LIMIT, {"T": float(t[-1] / 10.0)}),
        accumulator_flatness(*series(samples, "I_gradgamma"), name="I_gradgamma"),
        accumulator_flatness(*series(samples, "I_vL1"), name="I_vL1"),
    ]
    return [_tail_check(t, c) for c in checks]


def theorem4_checks(samples, ctx: RunContext) -> list:
    t, xs = positions(samples)
    tail = cauchy_tail(t, xs, t[-1] / 10.0)
    norms = np.linalg.norm(xs[t >= t[-1] / 10.0], axis=1)
    osc = float(norms.max() - norms.min())
    checks = [
        Verdict("cauchy_tail", _status(tail < CAUCHY_LIMIT), tail, CAUCHY_LIMIT, {"T": float(t[-1] / 10.0)}),
        Verdict("norm_oscillation", _status(osc < CAUCHY_LIMIT), osc, CAUCHY_LIMIT, {"final_norm": float(norms[-1])}),
    ]
    return [_tail_check(t, c) for c in checks]


# --------------------------------------------------------------------------
# report

@dataclass
class DiagnosticsReport:
    scenario: str
    status: str = "ok"
    last_t: float = math.nan
    message: str = ""
    verdicts: list = field(default_factory=list)
    exponent_fits: list = field(default_factory=list)
    accumulators: list = field(default_factory=list)
    oscillations: list = field(default_factory=list)
    cauchy_tail: float = math.nan
    invariants: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def failed(self) -> bool:
        return self.status != "ok" or any(v.status == FAIL for v in self.verdicts)

    def verdict(self, tag: str) -> TheoremVerdict:
        for v in self.verdicts:
            if v.tag == tag:
                return v
        raise KeyError(tag)

    def to_dict(self) -> dict:
        return _jsonable({
            "scenario": self.scenario,
            "status": self.status,
            "last_t": self.last_t,
            "message": self.message,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "exponent_fits": [f.to_dict() for f in self.exponent_fits],
            "accumulators": self.accumulators,
            "oscillations": self.oscillations,
            "cauchy_tail": self.cauchy_tail,
            "invariants": [v.to_dict() for v in self.invariants],
            "wall_clock": self.wall_clock,
        })


def trace_rows(samples, ctx: RunContext):
    """Rows for the CSV trace, one per checkpoint, in ``TRACE_COLUMNS`` order."""
    alpha = ctx.sched.alpha
    rows = []
    for s in samples:
        t = float(s.t)
        h = ctx.h_table(t)
        acc = s.accumulators
        rows.append((
            t, s.w, t ** (2.0 * alpha) * s.w, s.e_lyap, anchored_momentum(h, s, ctx.x_star),
            acc.get("I_alphaW", math.nan), acc.get("I_vel2", math.nan),
            acc.get("I_gradgamma", math.nan), acc.get("I_vL1", math.nan),
            float(np.linalg.norm(s.x - ctx.x_star)),
        ))
    return rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else str(val)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
