"""Component lifetime and repair-time distributions.

All samplers use the inverse transform of the survival function,
``t = scale * (-ln U) ** (1 / shape)``, with ``U`` drawn on the open
interval (0, 1). An Exponential with rate ``r`` is handled as a Weibull with
shape 1 and scale ``1 / r``; rate 0 maps to an infinite scale and every draw
is ``inf`` ("never fires").
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ParameterError",
    "Weibull",
    "Exponential",
    "LifetimeDist",
    "make_rng",
    "uniform_open",
    "sample",
    "sample_conditional",
    "dist_from_dict",
    "weibull_scale_arrays",
    "sample_matrix",
]

_TINY_U = 2.0**-54


class ParameterError(ValueError):
    """Raised for distribution parameters outside their domain."""


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ParameterError(f"Weibull shape must be positive, got {self.shape!r}")
        if not (self.scale > 0):
            raise ParameterError(f"Weibull scale must be positive, got {self.scale!r}")

    @property
    def kind(self) -> str:
        return "weibull"

    def inverse(self, u):
        """Inverse survival transform; ``u`` in (0, 1)."""
        return self.scale * (-np.log(u)) ** (1.0 / self.shape)

    def conditional_inverse(self, age, u):
        """Remaining life given survival to ``age``, for survival level ``u``."""
        h = (np.asarray(age) / self.scale) ** self.shape - np.log(u)
        return self.scale * h ** (1.0 / self.shape) - age

    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def variance(self) -> float:
        g1 = math.gamma(1.0 + 1.0 / self.shape)
        g2 = math.gamma(1.0 + 2.0 / self.shape)
        return self.scale**2 * (g2 - g1**2)

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return 1.0 - np.exp(-((t / self.scale) ** self.shape))

    def to_dict(self) -> dict:
        return {"kind": "weibull", "shape": float(self.shape), "scale": float(self.scale)}


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ParameterError(f"Exponential rate must be >= 0, got {self.rate!r}")

    @property
    def kind(self) -> str:
        return "exponential"

    @property
    def shape(self) -> float:
        return 1.0

    @property
    def scale(self) -> float:
        return math.inf if self.rate == 0 else 1.0 / self.rate

    def inverse(self, u):
        if self.rate == 0:
            return np.full(np.shape(u), math.inf) if np.ndim(u) else math.inf
        return -np.log(u) / self.rate

    def conditional_inverse(self, age, u):
        # memoryless: the age is irrelevant
        return self.inverse(u)

    def mean(self) -> float:
        return self.scale

    def variance(self) -> float:
        return self.scale**2

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return 1.0 - np.exp(-self.rate * t)

    def to_dict(self) -> dict:
        return {"kind": "exponential", "rate": float(self.rate)}


LifetimeDist = Union[Weibull, Exponential]


def dist_from_dict(d: dict) -> LifetimeDist:
    """Build a distribution from its file-format dictionary."""
    kind = d.get("kind")
    if kind == "weibull":
        return Weibull(float(d["shape"]), float(d["scale"]))
    if kind == "exponential":
        return Exponential(float(d["rate"]))
    raise ParameterError(f"unknown distribution kind {kind!r}")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for the stream ``(seed, *stream)``.

    Equal keys give identical sequences; distinct keys give independent
    sequences (``SeedSequence`` spawn keys).
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def uniform_open(rng: np.random.Generator, size=None):
    """Uniform draws on the open interval (0, 1)."""
    u = rng.random(size)
    if size is None:
        return u if u > 0.0 else _TINY_U
    u[u == 0.0] = _TINY_U
    return u


def sample(dist: LifetimeDist, rng: np.random.Generator, size=None):
    """Draw from ``dist``. Returns ``inf`` for a rate-0 Exponential."""
    if isinstance(dist, Exponential) and dist.rate == 0:
        return math.inf if size is None else np.full(size, math.inf)
    return dist.inverse(uniform_open(rng, size))


def sample_conditional(dist: LifetimeDist, age: float, rng: np.random.Generator, size=None):
    """Draw the remaining life ``T - age`` given ``T > age``."""
    if age < 0:
        raise ParameterError(f"age must be >= 0, got {age!r}")
    if isinstance(dist, Exponential) and dist.rate == 0:
        return math.inf if size is None else np.full(size, math.inf)
    return dist.conditional_inverse(age, uniform_open(rng, size))


def weibull_scale_arrays(dists) -> tuple[np.ndarray, np.ndarray]:
    """Per-component ``(1/shape, scale)`` arrays for vectorised sampling."""
    inv_shape = np.array([1.0 / d.shape for d in dists], dtype=float)
    scale = np.array([d.scale for d in dists], dtype=float)
    return inv_shape, scale


def sample_matrix(inv_shape: np.ndarray, scale: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """``(n, n_components)`` matrix of independent lifetimes.

    One uniform per entry, drawn row-major, so row ``i`` uses the same
    uniforms a single-vector draw would after ``i`` earlier rows.
    """
    u = uniform_open(rng, (n, scale.size))
    return scale * (-np.log(u)) ** inv_shape
