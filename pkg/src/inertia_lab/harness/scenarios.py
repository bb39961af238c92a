"""Builtin scenario suites.

``theorems``
    One scenario per convergence theorem, each satisfying that theorem's
    hypotheses with a small margin on the source exponent.
``oracles``
    Closed-form cross-checks of the solver (unforced linear problems).
``boundary``
    Sources sitting exactly on the edge of the weighted integrability
    condition.  Tagged exploratory: no outcome is predicted, so these never
    gate a suite's exit status.

Amplitudes and starting points were picked so the asymptotic regime is
visible within ``t_end = 1e4`` at the diagnostics' absolute thresholds.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .config import ScenarioConfig, config_from_dict

SUITES = ("theorems", "oracles", "boundary")

_ALPHA, _C = 0.5, 2.0
_NU = 0.5 * (1.0 + _ALPHA)

# rank-3 least squares in R^5: M = B @ C
_B = np.array([[1, 0, 1], [0, 1, 0], [1, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
_CM = np.array([[1, 0, 0, 1, 0], [0, 1, 0, 0, 1], [0, 0, 1, 1, 0]], dtype=float)
LS_MATRIX = (_B @ _CM).tolist()
LS_TARGET = [1.0, 2.0, 0.0, -1.0, 1.0]


def _damping():
    return {"c": _C, "alpha": _ALPHA}


def _unit(v):
    v = np.asarray(v, dtype=float)
    return (v / np.linalg.norm(v)).tolist()


def theorem_docs() -> list[dict]:
    return [
        {
            "name": "theorem1_least_squares",
            "damping": _damping(),
            "potential": {"kind": "LeastSquares", "M": LS_MATRIX, "y": LS_TARGET},
            "source": {"kind": "PowerDecay", "direction": _unit(np.ones(5)), "amplitude": 0.05, "beta": 1.6},
            "x0": [1.0, -1.0, 0.5, 0.0, 2.0],
            "v0": [0.0] * 5,
            "t_end": 1e4,
            "tags": ["T1"],
        },
        {
            "name": "theorem2_even_power",
            "damping": _damping(),
            "potential": {"kind": "EvenPower", "dim": 2, "p": 4, "scale": 1.0},
            "source": {"kind": "PowerDecay", "direction": _unit([1, 1]), "amplitude": 0.05, "beta": _NU + 1.1},
            "x0": [1.0, -0.5],
            "v0": [0.0, 0.0],
            "t_end": 1e4,
            "tags": [f"T2({_NU:g})"],
        },
        {
            "name": "theorem3_ball",
            "damping": _damping(),
            "potential": {"kind": "DistBallSq", "center": [0.0, 0.0, 0.0], "radius": 1.0},
            "source": {"kind": "PowerDecay", "direction": _unit([1, 1, 1]), "amplitude": 5e-4, "beta": 1.6},
            "x0": [2.0, -1.0, 0.5],
            "v0": [0.0, 0.0, 0.0],
            "t_end": 1e4,
            "tags": ["T3"],
        },
        {
            "name": "theorem4_even_power",
            "damping": _damping(),
            # a steep quartic: the trajectory creeps in like (1.5/scale)**0.5 t**-0.75
            "potential": {"kind": "EvenPower", "dim": 2, "p": 4, "scale": 400.0},
            "source": {"kind": "PowerDecay", "direction": _unit([1, 1]), "amplitude": 2e-3, "beta": _NU + 1.1},
            "x0": [1.0, -0.5],
            "v0": [0.0, 0.0],
            "t_end": 1e4,
            "tags": ["T4"],
        },
    ]


def oracle_docs() -> list[dict]:
    times = [1.0, 5.0, 10.0]
    return [
        {
            "name": "oracle_damped_linear",
            "damping": {"c": 3.0, "alpha": 0.0},
            "potential": {"kind": "Quadratic", "A": [[1.0]], "b": [0.0]},
            "source": {"kind": "Zero"},
            "x0": [1.0],
            "v0": [0.0],
            "t_end": 10.0,
            "tags": ["ORACLE"],
            "oracle": {"kind": "damped_linear", "times": times},
        },
        {
            "name": "oracle_pure_friction",
            "damping": {"c": 1.0, "alpha": 0.0},
            "potential": {"kind": "Zero", "dim": 2},
            "source": {"kind": "Zero"},
            "x0": [0.5, -1.0],
            "v0": [1.0, 2.0],
            "t_end": 100.0,
            "tags": ["ORACLE"],
            "oracle": {"kind": "pure_friction", "times": times},
        },
        {
            "name": "oracle_vanishing_friction",
            "damping": {"c": 2.0, "alpha": 0.5},
            "potential": {"kind": "Zero", "dim": 1},
            "source": {"kind": "Zero"},
            "x0": [0.0],
            "v0": [1.0],
            "t_end": 100.0,
            "tags": ["ORACLE"],
            "oracle": {"kind": "pure_friction", "times": times + [100.0]},
        },
    ]


def boundary_docs() -> list[dict]:
    return [
        {
            "name": "boundary_least_squares",
            "damping": _damping(),
            "potential": {"kind": "LeastSquares", "M": LS_MATRIX, "y": LS_TARGET},
            "source": {"kind": "PowerDecay", "direction": _unit(np.ones(5)), "amplitude": 0.05, "beta": _ALPHA + 1.0},
            "x0": [1.0, -1.0, 0.5, 0.0, 2.0],
            "v0": [0.0] * 5,
            "t_end": 1e4,
            "tags": ["EXPLORATORY", "T1"],
        },
        {
            "name": "boundary_even_power",
            "damping": _damping(),
            "potential": {"kind": "EvenPower", "dim": 2, "p": 4, "scale": 1.0},
            "source": {"kind": "PowerDecay", "direction": _unit([1, 1]), "amplitude": 0.05, "beta": _NU + 1.0},
            "x0": [1.0, -0.5],
            "v0": [0.0, 0.0],
            "t_end": 1e4,
            "tags": ["EXPLORATORY", f"T2({_NU:g})", "T4"],
        },
    ]


def builtin_scenarios(name: str) -> list[ScenarioConfig]:
    docs = {"theorems": theorem_docs, "oracles": oracle_docs, "boundary": boundary_docs}
    if name not in docs:
        raise ConfigurationError(f"unknown builtin suite {name!r} (expected one of {SUITES})")
    return [config_from_dict(d) for d in docs[name]()]
