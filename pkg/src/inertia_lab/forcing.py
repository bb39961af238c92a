"""Source terms g(t) with a scalar power-decay profile along a fixed direction.

For both power families ``||g(t)|| <= amplitude * (1 + t)**-beta``, so the
weighted integral ``int_0^inf (1 + t)**nu ||g(t)|| dt`` converges exactly
when ``beta - nu > 1``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, NumericFailure

__all__ = [
    "SourceTerm",
    "ZeroSource",
    "PowerDecay",
    "OscillatingPowerDecay",
    "WeightedCondition",
    "g_at",
    "satisfies_weighted_condition",
    "weighted_norm_partial_integral",
    "source_from_spec",
]


class WeightedCondition(NamedTuple):
    holds: bool
    integral_bound: float
    margin: float


class SourceTerm:
    kind = "abstract"
    dim: int

    def __call__(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def norm(self, t: float) -> float:
        raise NotImplementedError

    def envelope(self, t: float) -> float:
        """Upper bound on ``||g(t)||``."""
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False


class ZeroSource(SourceTerm):
    kind = "Zero"

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise ConfigurationError("dim must be positive")
        self.dim = int(dim)
        self._zero = np.zeros(self.dim)
        self._zero.setflags(write=False)

    def __call__(self, t):
        return self._zero

    def norm(self, t):
        return 0.0

    def envelope(self, t):
        return 0.0

    @property
    def is_zero(self):
        return True

    def to_spec(self):
        return {"kind": self.kind, "dim": self.dim}

    def __repr__(self):
        return f"ZeroSource(dim={self.dim})"


class PowerDecay(SourceTerm):
    """``g(t) = amplitude * (1 + t)**-beta * direction``."""

    kind = "PowerDecay"

    def __init__(self, direction, amplitude: float, beta: float):
        d = np.array(direction, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ConfigurationError("direction must be a nonempty 1-D vector")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ConfigurationError(f"direction must have unit norm, got norm {np.linalg.norm(d)!r}")
        if not amplitude > 0:
            raise ConfigurationError(f"amplitude must be positive, got {amplitude!r}")
        if not beta > 0:
            raise ConfigurationError(f"beta must be positive, got {beta!r}")
        d.setflags(write=False)
        self.direction = d
        self.amplitude = float(amplitude)
        self.beta = float(beta)
        self.dim = d.size

    def profile(self, t):
        return self.amplitude * (1.0 + t) ** -self.beta

    def __call__(self, t):
        return self.profile(t) * self.direction

    def norm(self, t):
        return self.profile(t)

    def envelope(self, t):
        return self.profile(t)

    def to_spec(self):
        return {
            "kind": self.kind,
            "direction": self.direction.tolist(),
            "amplitude": self.amplitude,
            "beta": self.beta,
        }

    def __repr__(self):
        return f"PowerDecay(amplitude={self.amplitude}, beta={self.beta}, dim={self.dim})"


class OscillatingPowerDecay(PowerDecay):
    """``g(t) = amplitude * (1 + t)**-beta * cos(frequency t) * direction``."""

    kind = "OscillatingPowerDecay"

    def __init__(self, direction, amplitude: float, beta: float, frequency: float):
        super().__init__(direction, amplitude, beta)
        if not (math.isfinite(frequency) and frequency >= 0):
            raise ConfigurationError(f"frequency must be finite and nonnegative, got {frequency!r}")
        self.frequency = float(frequency)

    def profile(self, t):
        return self.amplitude * (1.0 + t) ** -self.beta * math.cos(self.frequency * t)

    def norm(self, t):
        return abs(self.profile(t))

    def envelope(self, t):
        return self.amplitude * (1.0 + t) ** -self.beta

    def to_spec(self):
        return dict(super().to_spec(), frequency=self.frequency)

    def __repr__(self):
        return (
            f"OscillatingPowerDecay(amplitude={self.amplitude}, beta={self.beta}, "
            f"frequency={self.frequency}, dim={self.dim})"
        )


def g_at(src: SourceTerm, t: float) -> np.ndarray:
    if not t >= 0:
        raise ValueError(f"time must be nonnegative, got {t!r}")
    return src(t)


def satisfies_weighted_condition(src: SourceTerm, nu: float) -> WeightedCondition:
    """Whether ``int_0^inf (1+t)**nu ||g|| dt`` is finite, with an upper bound.

    ``margin`` is ``beta - nu - 1`` (positive inside the condition).  The
    bound ``amplitude / margin`` is exact for ``PowerDecay``.
    """
    if not nu >= 0:
        raise ValueError(f"nu must be nonnegative, got {nu!r}")
    if src.is_zero:
        return WeightedCondition(True, 0.0, math.inf)
    margin = src.beta - nu - 1.0
    if margin > 0:
        return WeightedCondition(True, src.amplitude / margin, margin)
    return WeightedCondition(False, math.inf, margin)


def _power_integral(amplitude, exponent, T):
    """``amplitude * int_0^T (1+t)**exponent dt`` in closed form."""
    k = exponent + 1.0
    if math.isinf(T):
        return amplitude / -k if k < 0 else math.inf
    if k == 0.0:
        return amplitude * math.log1p(T)
    return amplitude * math.expm1(k * math.log1p(T)) / k


def weighted_norm_partial_integral(src: SourceTerm, nu: float, T: float) -> float:
    """``int_0^T (1+t)**nu ||g(t)|| dt``.

    Closed form for ``PowerDecay``; for the oscillating family, adaptive
    quadrature between consecutive zeros of the cosine (absolute tolerance
    1e-10 overall).
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T!r}")
    if src.is_zero:
        return 0.0
    if type(src) is PowerDecay or (
        isinstance(src, OscillatingPowerDecay) and src.frequency == 0.0
    ):
        return _power_integral(src.amplitude, nu - src.beta, T)
    if not math.isfinite(T):
        raise ValueError("the oscillating family needs a finite upper limit")

    w = src.frequency
    amp, beta = src.amplitude, src.beta

    def integrand(t):
        return amp * (1.0 + t) ** (nu - beta) * abs(math.cos(w * t))

    half_period = math.pi / w
    first_zero = 0.5 * half_period
    edges = [0.0]
    k = 0
    while first_zero + k * half_period < T:
        edges.append(first_zero + k * half_period)
        k += 1
    edges.append(T)
    tol = 1e-10 / len(edges)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(integrand, a, b, epsabs=tol, epsrel=0.0, limit=200)
        if err > 10 * tol and err > 1e-12 * abs(val):
            raise NumericFailure(f"quadrature did not converge on [{a}, {b}] (error {err})")
        total += val
    return total


def source_from_spec(spec: dict, dim: int) -> SourceTerm:
    """Build a source from a configuration mapping.

    The ``direction`` entry is normalized to unit length.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "Zero":
        return ZeroSource(spec.get("dim", dim))
    if kind in ("PowerDecay", "OscillatingPowerDecay"):
        try:
            direction = np.array(spec["direction"], dtype=float)
            amplitude = float(spec["amplitude"])
            beta = float(spec["beta"])
            norm = np.linalg.norm(direction)
            if direction.ndim != 1 or norm == 0:
                raise ConfigurationError("source.direction must be a nonzero vector")
            direction = direction / norm
            if kind == "PowerDecay":
                return PowerDecay(direction, amplitude, beta)
            return OscillatingPowerDecay(direction, amplitude, beta, float(spec["frequency"]))
        except KeyError as exc:
            raise ConfigurationError(f"source.{exc.args[0]} is required for kind {kind!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"source: {exc}") from None
    raise ConfigurationError(
        f"source.kind: unknown source kind {kind!r} "
        "(expected Zero, PowerDecay or OscillatingPowerDecay)"
    )
