"""Seedable stable random variate generation.

Stable laws use the characteristic-function parameterization
``S_alpha(sigma, beta, mu)``; for ``beta = 0`` this is
``E exp(itY) = exp(-sigma**alpha |t|**alpha)``.  Draws use the
Chambers-Mallows-Stuck transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParameterError",
    "StableLaw",
    "RngStream",
    "cms_standard",
    "sample_stable",
    "sample_sas",
    "sample_positive_stable",
    "empirical_charfn",
]

_U64 = 2**64


class ParameterError(ValueError):
    """A distribution or process parameter is outside its domain."""


@dataclass(frozen=True)
class StableLaw:
    alpha: float
    sigma: float = 1.0
    beta: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        if not (self.sigma >= 0.0) or not math.isfinite(self.sigma):
            raise ParameterError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not (-1.0 <= self.beta <= 1.0):
            raise ParameterError(f"beta must lie in [-1, 1], got {self.beta!r}")
        if not math.isfinite(self.mu):
            raise ParameterError(f"mu must be finite, got {self.mu!r}")

    @property
    def symmetric(self) -> bool:
        return self.beta == 0.0 and self.mu == 0.0

    def charfn(self, t):
        """Characteristic function ``E exp(itY)`` evaluated at ``t``."""
        t = np.asarray(t, dtype=float)
        a, s, b = self.alpha, self.sigma, self.beta
        at = np.abs(t)
        if a != 1.0:
            skew = -1j * b * np.sign(t) * math.tan(math.pi * a / 2)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.where(at > 0, np.log(np.where(at > 0, at, 1.0)), 0.0)
            skew = 1j * b * (2 / math.pi) * np.sign(t) * logs
        return np.exp(-(s * at) ** a * (1 + skew) + 1j * self.mu * t)


@dataclass(frozen=True)
class RngStream:
    """Counter-derived random stream keyed by ``(master_seed, stream_id)``.

    ``path`` extends the key for sub-streams; every distinct key gives an
    independent Philox generator, so draws never depend on execution order.
    """

    master_seed: int
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for v in (self.master_seed, self.stream_id, *self.path):
            if not (0 <= int(v) < _U64):
                raise ParameterError(f"stream key component {v!r} is not a 64-bit unsigned integer")

    def substream(self, *keys: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_id, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(seq))

    def key(self) -> list[int]:
        return [self.master_seed, self.stream_id, *self.path]


def _uniform_angle_and_exponential(gen: np.random.Generator, size):
    # 1 - U lies in (0, 1], so the angle never reaches -pi/2 exactly
    v = math.pi * ((1.0 - gen.random(size)) - 0.5)
    w = gen.standard_exponential(size)
    return v, w


def cms_standard(alpha: float, beta: float, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Map angle ``v`` and exponential ``w`` to a standard ``S_alpha(1, beta, 0)`` draw."""
    if alpha == 1.0:
        if beta == 0.0:
            return np.tan(v)
        hb = math.pi / 2 + beta * v
        return (2 / math.pi) * (hb * np.tan(v) - beta * np.log((math.pi / 2) * w * np.cos(v) / hb))
    if beta == 0.0:
        if alpha == 2.0:
            return 2.0 * np.sqrt(w) * np.sin(v)
        return (
            np.sin(alpha * v)
            / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
        )
    zeta = beta * math.tan(math.pi * alpha / 2)
    shift = math.atan(zeta) / alpha
    scale = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
    return (
        scale
        * np.sin(alpha * (v + shift))
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * (v + shift)) / w) ** ((1.0 - alpha) / alpha)
    )


def sample_stable(law: StableLaw, stream: RngStream, count) -> np.ndarray:
    """Draw ``count`` i.i.d. values from ``law`` (``count`` may be a shape tuple).

    For ``alpha = 1`` and ``beta != 0`` the scale enters with the
    logarithmic correction ``(2/pi) beta sigma log(sigma)``.
    """
    size = (count,) if np.ndim(count) == 0 else tuple(count)
    if any(int(s) < 0 for s in size):
        raise ParameterError(f"count must be nonnegative, got {count!r}")
    v, w = _uniform_angle_and_exponential(stream.generator(), size)
    z = cms_standard(law.alpha, law.beta, v, w)
    if law.sigma == 0.0:
        return np.full(size, law.mu, dtype=float)
    out = law.sigma * z
    if law.alpha == 1.0 and law.beta != 0.0:
        out = out + (2 / math.pi) * law.beta * law.sigma * math.log(law.sigma)
    if law.mu != 0.0:
        out = out + law.mu
    return out


def sample_sas(law: StableLaw, stream: RngStream, count) -> np.ndarray:
    """Symmetric alpha-stable draws; ``alpha = 2`` gives N(0, 2 sigma^2)."""
    if law.beta != 0.0:
        raise ParameterError("sample_sas requires beta = 0")
    if np.ndim(count) == 0 and int(count) < 1:
        raise ParameterError(f"count must be positive, got {count!r}")
    return sample_stable(law, stream, count)


def sample_positive_stable(alpha_half: float, sigma: float, stream: RngStream, count) -> np.ndarray:
    """Totally right-skewed ``S_{alpha_half}(sigma, 1, 0)`` draws, supported on (0, inf)."""
    if not (0.0 < alpha_half < 1.0):
        raise ParameterError(f"alpha_half must lie in (0, 1), got {alpha_half!r}")
    if not (sigma > 0.0):
        raise ParameterError(f"sigma must be > 0, got {sigma!r}")
    return sample_stable(StableLaw(alpha_half, sigma, 1.0, 0.0), stream, count)


def empirical_charfn(sample, t: float) -> complex:
    """Empirical characteristic function ``mean(exp(i t x))``."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empirical_charfn needs a nonempty sample")
    tx = t * x
    return complex(np.mean(np.cos(tx)), np.mean(np.sin(tx)))
