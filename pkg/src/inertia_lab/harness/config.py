"""Scenario configuration: parsing, theorem tags and hypothesis validation.

A configuration is a TOML or JSON document (JSON when the first
non-blank character is ``{``)::

    name = "ls-forced"
    t_end = 1e4
    x0 = [1.0, 0.0]
    v0 = [0.0, 0.0]
    tags = ["T1", "T2(0.75)"]

    [damping]
    c = 2.0
    alpha = 0.5

    [potential]
    kind = "Quadratic"
    A = [[1, 0], [0, 1]]
    b = [0, 0]

    [source]
    kind = "Zero"

    [solver]            # optional overrides
    rel_tol = 1e-9

Tags are checked against the hypotheses they need when the config is
loaded, so a failing verdict never stems from an unmet assumption.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from ..damping import DampingSchedule
from ..errors import ConfigurationError, HypothesisError
from ..forcing import SourceTerm, satisfies_weighted_condition, source_from_spec
from ..integrate import SolverSettings
from ..potentials import Potential, potential_from_spec

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

_TAG_RE = re.compile(r"^(T1|T3|T4|ORACLE|EXPLORATORY)$|^T2\(\s*([0-9.eE+-]+)\s*\)$")
_SOLVER_KEYS = {"rel_tol", "abs_tol", "max_step", "t0", "per_decade", "extra_checkpoints"}
_TOP_KEYS = {"name", "t_end", "x0", "v0", "tags", "damping", "potential", "source", "solver", "oracle"}
ORACLE_KINDS = ("damped_linear", "pure_friction")


@dataclass(frozen=True)
class TheoremTag:
    kind: str
    nu: float | None = None

    def __str__(self):
        return f"T2({self.nu:g})" if self.kind == "T2" else self.kind

    @classmethod
    def parse(cls, text: str) -> "TheoremTag":
        m = _TAG_RE.match(str(text).strip())
        if not m:
            raise ConfigurationError(
                f"tags: unknown tag {text!r} (expected T1, T2(nu), T3, T4, ORACLE or EXPLORATORY)"
            )
        if m.group(1):
            return cls(m.group(1))
        return cls("T2", float(m.group(2)))


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario; ``raw`` keeps the document for provenance."""

    name: str
    damping: DampingSchedule
    potential: Potential
    source: SourceTerm
    x0: np.ndarray
    v0: np.ndarray
    t_end: float
    solver: dict = field(default_factory=dict)
    tags: tuple = ()
    oracle: dict | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def exploratory(self) -> bool:
        return any(t.kind == "EXPLORATORY" for t in self.tags)

    @property
    def theorem_tags(self) -> list:
        return [t for t in self.tags if t.kind in ("T1", "T2", "T3", "T4")]

    @property
    def velocity_nu(self) -> float:
        """``nu`` for the velocity accumulator: the T2 tag's, else ``alpha``."""
        for t in self.tags:
            if t.kind == "T2":
                return t.nu
        return self.damping.alpha

    def settings(self) -> SolverSettings:
        opts = dict(self.solver)
        extra = set(opts.pop("extra_checkpoints", ()))
        if self.oracle is not None:
            extra.update(self.oracle.get("times", ()))
        return SolverSettings(t_end=self.t_end, extra_checkpoints=tuple(sorted(extra)), **opts)

    def with_overrides(self, t_end: float | None = None, rel_tol: float | None = None) -> "ScenarioConfig":
        raw = json.loads(json.dumps(self.raw))
        if t_end is not None:
            raw["t_end"] = t_end
        if rel_tol is not None:
            raw.setdefault("solver", {})["rel_tol"] = rel_tol
        return config_from_dict(raw)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a TOML or JSON scenario document."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"malformed JSON config: {exc}") from None
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"malformed TOML config: {exc}") from None
    return config_from_dict(data)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_config(text)
    except ConfigurationError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def _vec(data, key):
    if key not in data:
        raise ConfigurationError(f"{key} is required")
    try:
        arr = np.array(data[key], dtype=float)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key} must be a list of numbers") from None
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{key} must be a nonempty finite 1-D list")
    return arr


def _table(data, key, required=True):
    val = data.get(key)
    if val is None:
        if required:
            raise ConfigurationError(f"{key} section is required")
        return {}
    if not isinstance(val, dict):
        raise ConfigurationError(f"{key} must be a table/object")
    return val


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a table/object at top level")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown top-level keys: {sorted(unknown)}")
    name = data.get("name")
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ConfigurationError("name is required and may only contain letters, digits, '_', '.', '-'")

    damp = _table(data, "damping")
    try:
        sched = DampingSchedule(float(damp["c"]), float(damp["alpha"]))
    except KeyError as exc:
        raise ConfigurationError(f"damping.{exc.args[0]} is required") from None
    except ConfigurationError as exc:
        # alpha outside [0, 1) breaks every theorem's standing assumption
        raise HypothesisError(f"damping: {exc}") from None
    except (TypeError, ValueError):
        raise ConfigurationError("damping.c and damping.alpha must be numbers") from None

    x0, v0 = _vec(data, "x0"), _vec(data, "v0")
    if x0.size != v0.size:
        raise ConfigurationError(f"x0 and v0 differ in length ({x0.size} vs {v0.size})")
    dim = x0.size
    pot = potential_from_spec(_table(data, "potential"), dim)
    if pot.dim != dim:
        raise ConfigurationError(f"potential dimension {pot.dim} does not match x0 length {dim}")
    src = source_from_spec(_table(data, "source", required=False) or {"kind": "Zero"}, dim)
    if src.dim != dim:
        raise ConfigurationError(f"source dimension {src.dim} does not match x0 length {dim}")

    try:
        t_end = float(data["t_end"])
    except KeyError:
        raise ConfigurationError("t_end is required") from None
    except (TypeError, ValueError):
        raise ConfigurationError("t_end must be a number") from None
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ConfigurationError(f"t_end must be positive and finite, got {t_end!r}")

    solver = dict(_table(data, "solver", required=False))
    bad = set(solver) - _SOLVER_KEYS
    if bad:
        raise ConfigurationError(f"solver: unknown keys {sorted(bad)}")

    tags_raw = data.get("tags", [])
    if isinstance(tags_raw, str) or not isinstance(tags_raw, list):
        raise ConfigurationError("tags must be a list")
    tags = tuple(TheoremTag.parse(t) for t in tags_raw)
    if len({str(t) for t in tags}) != len(tags) or sum(t.kind == "T2" for t in tags) > 1:
        raise ConfigurationError("tags: each theorem may be declared at most once")

    oracle = data.get("oracle")
    if oracle is not None:
        oracle = _check_oracle(oracle, sched, pot, src)
    if any(t.kind == "ORACLE" for t in tags) != (oracle is not None):
        raise ConfigurationError("the ORACLE tag and an [oracle] section must appear together")

    cfg = ScenarioConfig(name, sched, pot, src, x0, v0, t_end, solver, tags, oracle, raw=data)
    cfg.settings()  # surfaces bad solver overrides now
    if not cfg.exploratory:
        validate_hypotheses(cfg)
    return cfg


def _check_oracle(oracle, sched, pot, src):
    if not isinstance(oracle, dict):
        raise ConfigurationError("oracle must be a table/object")
    kind = oracle.get("kind")
    if kind not in ORACLE_KINDS:
        raise ConfigurationError(f"oracle.kind: unknown oracle {kind!r} (expected one of {ORACLE_KINDS})")
    try:
        times = [float(t) for t in oracle.get("times", [])]
        tol = float(oracle.get("rel_tol", 1e-8))
    except (TypeError, ValueError):
        raise ConfigurationError("oracle.times and oracle.rel_tol must be numbers") from None
    if not times or any(not t > 0 for t in times):
        raise ConfigurationError("oracle.times must be a nonempty list of positive times")
    if not src.is_zero:
        raise ConfigurationError("oracle scenarios need a zero source")
    if kind == "damped_linear":
        if sched.alpha != 0.0 or pot.kind != "Quadratic" or pot.dim != 1 or np.any(pot.b):
            raise ConfigurationError("damped_linear oracle needs alpha = 0 and a 1-D Quadratic with b = 0")
    elif pot.kind != "Zero":
        raise ConfigurationError("pure_friction oracle needs the Zero potential")
    return {"kind": kind, "times": times, "rel_tol": tol}


def validate_hypotheses(cfg: ScenarioConfig) -> None:
    """Raise ``HypothesisError`` if a declared tag's assumptions fail."""
    alpha = cfg.damping.alpha
    for tag in cfg.theorem_tags:
        if tag.kind in ("T1", "T3"):
            nu = alpha
        elif tag.kind == "T2":
            nu = tag.nu
            hi = 0.5 * (1.0 + alpha)
            if not (alpha - 1e-12 <= nu <= hi + 1e-12):
                raise HypothesisError(f"tag {tag}: nu must lie in [alpha, (1+alpha)/2] = [{alpha:g}, {hi:g}]")
        else:
            nu = 0.5 * (1.0 + alpha)
            if not cfg.potential.is_even:
                raise HypothesisError(f"tag {tag}: potential {cfg.potential.kind} is not even")
        if tag.kind == "T3" and not cfg.potential.has_interior_argmin:
            raise HypothesisError(f"tag {tag}: argmin of {cfg.potential.kind} has empty interior")
        cond = satisfies_weighted_condition(cfg.source, nu)
        if not cond.holds:
            raise HypothesisError(
                f"tag {tag}: source fails the weighted integrability condition with nu={nu:g} "
                f"(beta - nu - 1 = {cond.margin:g} must be positive)"
            )
