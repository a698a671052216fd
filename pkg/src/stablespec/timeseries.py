"""Innovation and linear-process paths and their uncentered sample autocovariances."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .stable_rng import ParameterError, RngStream, StableLaw, sample_sas

__all__ = [
    "AlignmentError",
    "DegenerateError",
    "LinearFilter",
    "SamplePath",
    "simulate_iid",
    "simulate_linear",
    "autocovariances",
    "sample_autocov",
    "sample_autocorr",
    "write_path_csv",
    "read_path_csv",
]

# batched autocovariances use dot products for short paths or few lags, FFT otherwise
_FFT_LAG_THRESHOLD = 48
_DIRECT_MAX_N = 512


class DegenerateError(ZeroDivisionError):
    """A normalization by a zero sample quantity was requested."""


class AlignmentError(ValueError):
    """Two paths do not share the provenance an operation requires."""


@dataclass(frozen=True)
class LinearFilter:
    """Finite two-sided filter ``psi_j``; lags absent from ``coeffs`` are zero.

    ``tail`` tags the analytic continuation beyond the stored window, as
    ``("geometric", r)`` for ``psi_j = r**|j|`` or ``("power", p)`` for
    ``psi_j = |j|**-p``; ``truncation`` records the window radius used.
    """

    coeffs: Mapping[int, float]
    tail: Optional[tuple[str, float]] = None
    truncation: Optional[int] = None

    def __post_init__(self):
        clean = {int(j): float(c) for j, c in dict(self.coeffs).items() if float(c) != 0.0}
        if not clean:
            raise ParameterError("a linear filter needs at least one nonzero coefficient")
        if not all(math.isfinite(c) for c in clean.values()):
            raise ParameterError("filter coefficients must be finite")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))
        if self.tail is not None:
            kind, val = self.tail
            if kind not in ("geometric", "power"):
                raise ParameterError(f"unknown filter tail tag {kind!r}")
            object.__setattr__(self, "tail", (kind, float(val)))

    def __hash__(self):
        return hash((tuple(self.coeffs.items()), self.tail, self.truncation))

    @classmethod
    def identity(cls) -> "LinearFilter":
        return cls({0: 1.0})

    @classmethod
    def ma1(cls, theta: float) -> "LinearFilter":
        return cls({0: 1.0, 1: theta})

    @classmethod
    def geometric(cls, r: float, radius: int, two_sided: bool = False) -> "LinearFilter":
        """``psi_j = r**|j|`` for ``0 <= j <= radius`` (or ``|j| <= radius``)."""
        if not (0 < abs(r) < 1):
            raise ParameterError("geometric filter needs 0 < |r| < 1")
        lags = range(-radius if two_sided else 0, radius + 1)
        return cls({j: r ** abs(j) for j in lags}, tail=("geometric", r), truncation=radius)

    @classmethod
    def power(cls, p: float, radius: int) -> "LinearFilter":
        """``psi_0 = 1`` and ``psi_j = j**-p`` for ``1 <= j <= radius``."""
        coeffs = {0: 1.0}
        coeffs.update({j: float(j) ** -p for j in range(1, radius + 1)})
        return cls(coeffs, tail=("power", p), truncation=radius)

    @property
    def lags(self) -> np.ndarray:
        return np.fromiter(self.coeffs.keys(), dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.fromiter(self.coeffs.values(), dtype=float)

    @property
    def neg_radius(self) -> int:
        return max(0, -min(self.coeffs))

    @property
    def pos_radius(self) -> int:
        return max(0, max(self.coeffs))

    def autocov(self) -> np.ndarray:
        """``c_h = sum_j psi_j psi_{j+h}`` for ``h = 0..width``."""
        lo, hi = min(self.coeffs), max(self.coeffs)
        dense = np.zeros(hi - lo + 1)
        for j, c in self.coeffs.items():
            dense[j - lo] = c
        return np.array([dense[: dense.size - h] @ dense[h:] for h in range(dense.size)])

    def to_dict(self) -> dict:
        out = {"coeffs": {str(j): c for j, c in self.coeffs.items()}}
        if self.tail is not None:
            out["tail"] = list(self.tail)
        if self.truncation is not None:
            out["truncation"] = self.truncation
        return out


@dataclass(frozen=True, eq=False)
class SamplePath:
    """An immutable real path ``X_1..X_n`` with provenance.

    For ``origin == "linear"`` the path keeps the filter, the aligned innovation
    segment and the full padded innovation vector, whose entry ``k`` is
    ``eps_{k + 1 - pos_radius}``.
    """

    values: np.ndarray
    alpha: Optional[float] = None
    origin: str = "external"
    filter: Optional[LinearFilter] = None
    innovations: Optional["SamplePath"] = None
    padded_innovations: Optional[np.ndarray] = field(default=None, repr=False)
    seed: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size < 1:
            raise ParameterError("a sample path needs n >= 1")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("sample path values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.origin not in ("iid", "linear", "external"):
            raise ParameterError(f"unknown path origin {self.origin!r}")

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def scaled(self, c: float) -> "SamplePath":
        return SamplePath(self.values * c, self.alpha, "external")

    def sidecar(self) -> dict:
        out = {"alpha": self.alpha, "origin": self.origin, "n": self.n,
               "seed": list(self.seed) if self.seed is not None else None}
        if self.filter is not None:
            out["filter"] = self.filter.to_dict()
        return out


def _check_alpha_open(alpha: float):
    if not (0.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")


def simulate_iid(n: int, alpha: float, stream: RngStream) -> SamplePath:
    """``n`` i.i.d. ``S_alpha(1, 0, 0)`` innovations."""
    _check_alpha_open(alpha)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n!r}")
    vals = sample_sas(StableLaw(alpha), stream, n)
    return SamplePath(vals, alpha, "iid", seed=tuple(stream.key()))


def _filter_apply(padded: np.ndarray, filt: LinearFilter, n: int) -> np.ndarray:
    # X_t = sum_j psi_j eps_{t-j}; eps_{t-j} sits at padded[t - j - 1 + pos_radius]
    off = filt.pos_radius
    out = np.zeros(padded.shape[:-1] + (n,))
    for j, c in filt.coeffs.items():
        start = off - j
        out += c * padded[..., start:start + n]
    return out


def simulate_linear(n: int, filt: LinearFilter, alpha: float, stream: RngStream):
    """Simulate ``X_t = sum_j psi_j eps_{t-j}``, ``t = 1..n``, with no burn-in.

    Draws ``n + neg_radius + pos_radius`` innovations.  Returns
    ``(x_path, eps_path)``; ``eps_path`` is the segment aligned with ``t = 1..n``.
    """
    _check_alpha_open(alpha)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n!r}")
    off = filt.pos_radius
    padded = sample_sas(StableLaw(alpha), stream, n + filt.neg_radius + off)
    padded.setflags(write=False)
    eps = SamplePath(padded[off:off + n], alpha, "iid", seed=tuple(stream.key()))
    if filt.coeffs == {0: 1.0}:
        x_vals = eps.values.copy()
    else:
        x_vals = _filter_apply(padded, filt, n)
    x = SamplePath(x_vals, alpha, "linear", filter=filt, innovations=eps,
                   padded_innovations=padded, seed=tuple(stream.key()))
    return x, eps


def autocovariances(values, max_lag: int) -> np.ndarray:
    """Uncentered ``gamma_n(h) = n^-1 sum_{t<=n-h} X_t X_{t+h}`` for ``h = 0..max_lag``.

    Works on the last axis, so a 2-D array of replicate rows is handled in one
    call.  Lags ``h >= n`` give 0.
    """
    x = np.asarray(values, dtype=float)
    n = x.shape[-1]
    max_lag = int(max_lag)
    out = np.zeros(x.shape[:-1] + (max_lag + 1,))
    top = min(max_lag, n - 1)
    if top + 1 <= _FFT_LAG_THRESHOLD or n <= _DIRECT_MAX_N:
        for h in range(top + 1):
            out[..., h] = np.einsum("...i,...i->...", x[..., : n - h], x[..., h:])
    else:
        size = 1 << int(np.ceil(np.log2(2 * n)))
        spec = np.fft.rfft(x, size, axis=-1)
        full = np.fft.irfft(spec.real ** 2 + spec.imag ** 2, size, axis=-1)
        out[..., : top + 1] = full[..., : top + 1]
    return out / n


def sample_autocov(path, h: int) -> float:
    """Lag-``h`` uncentered sample autocovariance (0 once ``h >= n``)."""
    if h < 0:
        raise ParameterError(f"lag must be nonnegative, got {h!r}")
    x = path.values if isinstance(path, SamplePath) else np.asarray(path, dtype=float)
    n = x.size
    if h >= n:
        return 0.0
    return float(x[: n - h] @ x[h:]) / n


def sample_autocorr(path, h: int) -> float:
    g0 = sample_autocov(path, 0)
    if g0 == 0.0:
        raise DegenerateError("sample autocorrelation of an all-zero path is undefined")
    return sample_autocov(path, h) / g0


def write_path_csv(path: SamplePath, csv_path, extra: Optional[dict] = None) -> tuple[Path, Path]:
    """Write a single-column CSV and a ``.json`` sidecar next to it."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value"])
        for v in path.values:
            w.writerow([repr(float(v))])
    side = path.sidecar()
    if extra:
        side.update(extra)
    side_path = csv_path.with_suffix(".json")
    side_path.write_text(json.dumps(side, sort_keys=True, indent=2) + "\n")
    return csv_path, side_path


def read_path_csv(csv_path) -> SamplePath:
    csv_path = Path(csv_path)
    with csv_path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] and not _is_number(rows[0][0]):
        rows = rows[1:]
    vals = [float(r[0]) for r in rows if r]
    side_path = csv_path.with_suffix(".json")
    alpha = None
    seed = None
    if side_path.exists():
        side = json.loads(side_path.read_text())
        alpha = side.get("alpha")
        seed = tuple(side["seed"]) if side.get("seed") else None
    return SamplePath(vals, alpha, "external", seed=seed)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True
