"""Convex test potentials with analytic values, gradients and minimizer sets.

Every catalog member is C^1 with a gradient that is Lipschitz on bounded
sets, and has a nonempty set of minimizers with known minimum value.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Potential",
    "ZeroPotential",
    "Quadratic",
    "LeastSquares",
    "EvenPower",
    "DistBallSq",
    "MinimizerSamples",
    "phi_eval",
    "grad_eval",
    "gradient_check",
    "minimizer_samples",
    "potential_from_spec",
]

RANK_TOL = 1e-10


class MinimizerSamples(NamedTuple):
    points: list
    singleton: bool


def _vector(x, name="x"):
    arr = np.array(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigurationError(f"{name} must be a nonempty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def _nullspace(mat, tol=RANK_TOL):
    _, s, vt = np.linalg.svd(mat)
    cutoff = tol * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vt[rank:].T


class Potential:
    """Base class; subclasses set ``dim``, ``phi_star``, ``canonical_minimizer``."""

    kind = "abstract"
    is_even = False
    has_interior_argmin = False

    dim: int
    phi_star: float
    canonical_minimizer: np.ndarray

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def excess(self, x: np.ndarray) -> float:
        """``Phi(x) - Phi*`` clipped at zero against roundoff."""
        return max(self.value(x) - self.phi_star, 0.0)

    def _argmin_directions(self) -> list:
        """Offsets from the canonical minimizer that stay in argmin."""
        return []

    def minimizers(self, k: int) -> MinimizerSamples:
        if k < 1:
            raise ValueError("k must be >= 1")
        base = np.array(self.canonical_minimizer)
        shifts = self._argmin_directions()
        if not shifts:
            return MinimizerSamples([base.copy() for _ in range(k)], True)
        pts = [base]
        for shift in shifts:
            if len(pts) == k:
                break
            pts.append(base + shift)
        while len(pts) < k:
            # cycle through shrunken copies of the available shifts
            j = len(pts) - 1
            scale = 0.5 ** (1 + j // len(shifts))
            pts.append(base + scale * shifts[j % len(shifts)])
        return MinimizerSamples(pts, False)

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class ZeroPotential(Potential):
    kind = "Zero"
    is_even = True
    has_interior_argmin = True

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise ConfigurationError("dim must be positive")
        self.dim = int(dim)
        self.phi_star = 0.0
        self.canonical_minimizer = np.zeros(self.dim)

    def value(self, x):
        return 0.0

    def grad(self, x):
        return np.zeros(self.dim)

    def _argmin_directions(self):
        eye = np.eye(self.dim)
        return [eye[i % self.dim] * (1 if i % 2 == 0 else -1) for i in range(2 * self.dim)]

    def to_spec(self):
        return {"kind": self.kind, "dim": self.dim}


class Quadratic(Potential):
    """``Phi(x) = 0.5 x^T A x - b^T x`` with ``A`` symmetric PSD, ``b`` in range(A)."""

    kind = "Quadratic"

    def __init__(self, A, b):
        A = np.atleast_2d(np.array(A, dtype=float))
        b = _vector(b, "b")
        if A.shape != (b.size, b.size):
            raise ConfigurationError(f"A must be {b.size}x{b.size}, got {A.shape}")
        if not np.allclose(A, A.T, atol=1e-14):
            raise ConfigurationError("A must be symmetric")
        eig = np.linalg.eigvalsh(A)
        scale = max(1.0, float(np.abs(eig).max()))
        if eig.min() < -1e-12 * scale:
            raise ConfigurationError("A must be positive semidefinite")
        xstar, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.linalg.norm(A @ xstar - b) > 1e-10 * max(1.0, np.linalg.norm(b)):
            raise ConfigurationError("b must lie in the range of A (Phi unbounded below otherwise)")
        A.setflags(write=False)
        self.A, self.b = A, b
        self.dim = b.size
        self.canonical_minimizer = xstar
        self.phi_star = float(-0.5 * b @ xstar)
        self._null = _nullspace(A)
        self.is_even = not np.any(b)
        self.has_interior_argmin = not np.any(A)

    def value(self, x):
        return float(0.5 * x @ (self.A @ x) - self.b @ x)

    def grad(self, x):
        return self.A @ x - self.b

    def _argmin_directions(self):
        cols = [self._null[:, i] for i in range(self._null.shape[1])]
        return cols + [-col for col in cols]

    def to_spec(self):
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}


class LeastSquares(Potential):
    """``Phi(x) = 0.5 ||M x - y||^2`` with ``M`` possibly rank-deficient."""

    kind = "LeastSquares"

    def __init__(self, M, y):
        M = np.atleast_2d(np.array(M, dtype=float))
        y = _vector(y, "y")
        if M.shape[0] != y.size:
            raise ConfigurationError(f"M has {M.shape[0]} rows but y has {y.size} entries")
        M.setflags(write=False)
        self.M, self.y = M, y
        self.dim = M.shape[1]
        xstar, *_ = np.linalg.lstsq(M, y, rcond=None)
        self.canonical_minimizer = xstar
        self.phi_star = float(0.5 * np.sum((M @ xstar - y) ** 2))
        self._null = _nullspace(M)
        self.rank_deficit = self._null.shape[1]
        self.is_even = bool(np.allclose(M.T @ y, 0.0, atol=1e-14))

    def value(self, x):
        r = self.M @ x - self.y
        return float(0.5 * r @ r)

    def excess(self, x):
        # residual split avoids cancellation in value - phi_star
        d = self.M @ (x - self.canonical_minimizer)
        return float(0.5 * d @ d)

    def grad(self, x):
        return self.M.T @ (self.M @ x - self.y)

    def _argmin_directions(self):
        cols = [self._null[:, i] for i in range(self._null.shape[1])]
        return cols + [-col for col in cols]

    def to_spec(self):
        return {"kind": self.kind, "M": self.M.tolist(), "y": self.y.tolist()}


class EvenPower(Potential):
    """``Phi(x) = scale * sum |x_i|**p / p`` for even ``p >= 4``; flat at 0."""

    kind = "EvenPower"
    is_even = True

    def __init__(self, dim: int, p: int = 4, scale: float = 1.0):
        if int(dim) < 1:
            raise ConfigurationError("dim must be positive")
        if int(p) != p or p < 4 or int(p) % 2:
            raise ConfigurationError(f"p must be an even integer >= 4, got {p!r}")
        if not scale > 0:
            raise ConfigurationError(f"scale must be positive, got {scale!r}")
        self.dim, self.p, self.scale = int(dim), int(p), float(scale)
        self.phi_star = 0.0
        self.canonical_minimizer = np.zeros(self.dim)

    def value(self, x):
        return float(self.scale * np.sum(x**self.p) / self.p)

    def excess(self, x):
        return self.value(x)

    def grad(self, x):
        return self.scale * x ** (self.p - 1)

    def to_spec(self):
        return {"kind": self.kind, "dim": self.dim, "p": self.p, "scale": self.scale}


class DistBallSq(Potential):
    """``Phi(x) = 0.5 dist(x, B(center, radius))**2``; argmin is the closed ball."""

    kind = "DistBallSq"
    has_interior_argmin = True

    def __init__(self, center, radius: float = 1.0):
        center = _vector(center, "center")
        if not radius > 0:
            raise ConfigurationError(f"radius must be positive, got {radius!r}")
        self.center, self.radius = center, float(radius)
        self.dim = center.size
        self.phi_star = 0.0
        self.canonical_minimizer = np.array(center)
        self.is_even = not np.any(center)

    def _gap(self, x):
        d = x - self.center
        n = math.sqrt(float(d @ d))
        return d, n

    def value(self, x):
        _, n = self._gap(x)
        return 0.5 * (n - self.radius) ** 2 if n > self.radius else 0.0

    def excess(self, x):
        return self.value(x)

    def grad(self, x):
        d, n = self._gap(x)
        if n <= self.radius:
            return np.zeros(self.dim)
        return d * (1.0 - self.radius / n)

    def _argmin_directions(self):
        eye = np.eye(self.dim)
        out = []
        for i in range(self.dim):
            out.append(0.5 * self.radius * eye[i])
            out.append(-0.3 * self.radius * eye[(i + 1) % self.dim])
        return out

    def to_spec(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


def _check_dim(pot, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (pot.dim,):
        raise ValueError(f"expected vector of shape ({pot.dim},), got {x.shape}")
    return x


def phi_eval(pot: Potential, x) -> float:
    return pot.value(_check_dim(pot, x))


def grad_eval(pot: Potential, x) -> np.ndarray:
    return pot.grad(_check_dim(pot, x))


def gradient_check(pot: Potential, x, step: float = 1e-5) -> float:
    """Worst componentwise gap between the gradient and central differences."""
    if not 1e-8 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-8, 1e-3]")
    x = _check_dim(pot, x)
    g = pot.grad(x)
    worst = 0.0
    for i in range(pot.dim):
        e = np.zeros(pot.dim)
        e[i] = step
        fd = (pot.value(x + e) - pot.value(x - e)) / (2.0 * step)
        worst = max(worst, abs(fd - g[i]))
    return worst


def minimizer_samples(pot: Potential, k: int) -> MinimizerSamples:
    """``k`` points of argmin; ``singleton`` is set when argmin is a single point."""
    return pot.minimizers(k)


def potential_from_spec(spec: dict, dim: int | None = None) -> Potential:
    """Build a potential from a configuration mapping with a ``kind`` key."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "Zero":
            return ZeroPotential(spec.get("dim", dim))
        if kind == "Quadratic":
            return Quadratic(spec["A"], spec["b"])
        if kind == "LeastSquares":
            return LeastSquares(spec["M"], spec["y"])
        if kind == "EvenPower":
            return EvenPower(spec.get("dim", dim), spec.get("p", 4), spec.get("scale", 1.0))
        if kind == "DistBallSq":
            return DistBallSq(spec["center"], spec.get("radius", 1.0))
    except KeyError as exc:
        raise ConfigurationError(f"potential.{exc.args[0]} is required for kind {kind!r}") from None
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"potential: {exc}") from None
    raise ConfigurationError(
        f"potential.kind: unknown potential kind {kind!r} "
        "(expected Zero, Quadratic, LeastSquares, EvenPower or DistBallSq)"
    )
