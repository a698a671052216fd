"""Sampling the stable limits of normalized sample autocovariances.

``Y_0`` is positive ``S_{alpha/2}(sigma1, 1, 0)``, the ``Y_h`` (``h >= 1``) are
i.i.d. ``S_alpha(sigma2, 0, 0)``, all independent.  ``Y(a) = sum_k a_k Y_k``
and ``Y~(a) = Y(a) / Y_0``.  Every ``Y_h`` is drawn from its own sub-stream
``stream.substream(h)``, so a component does not depend on which others are
requested.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .function_classes import FourierCoeffs, ell_alpha_norm, ell_alpha_tail_mass
from .stable_rng import ParameterError, RngStream, StableLaw, sample_positive_stable, sample_sas

__all__ = [
    "LimitScales",
    "LimitSample",
    "sample_limit_vector",
    "sample_Y_of_a",
    "sample_Y_tilde_of_a",
    "ecf_scale",
    "calibrate_scales",
    "write_limit_csv",
]


@dataclass(frozen=True)
class LimitScales:
    sigma1: float = 1.0
    sigma2: float = 1.0
    provenance: str = "configured"

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ParameterError("limit scales must be positive")
        if self.provenance not in ("configured", "calibrated"):
            raise ParameterError(f"unknown scale provenance {self.provenance!r}")

    def to_dict(self) -> dict:
        return {"sigma1": self.sigma1, "sigma2": self.sigma2, "provenance": self.provenance}


@dataclass(frozen=True, eq=False)
class LimitSample:
    """Draws of a limit variable with the truncation that produced them."""

    values: np.ndarray
    K: int
    tail_mass: float
    degenerate: bool

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def tolist(self) -> list:
        return self.values.tolist()


def _check_alpha(alpha: float):
    if not (0.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")


def _y0(alpha: float, scales: LimitScales, stream: RngStream, count: int) -> np.ndarray:
    return sample_positive_stable(alpha / 2.0, scales.sigma1, stream.substream(0), count)


def _yh(alpha: float, scales: LimitScales, stream: RngStream, h: int, count: int) -> np.ndarray:
    return sample_sas(StableLaw(alpha, scales.sigma2), stream.substream(h), count)


def sample_limit_vector(alpha: float, scales: LimitScales, m: int, stream: RngStream, count: int):
    """Return ``(Y_0, Y)`` with ``Y_0`` of shape ``(count,)`` and ``Y`` of shape ``(count, m)``."""
    _check_alpha(alpha)
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m!r}")
    y0 = _y0(alpha, scales, stream, count)
    ys = np.column_stack([_yh(alpha, scales, stream, h, count) for h in range(1, m + 1)])
    return y0, ys


def _lag_coeffs(a, K: Optional[int]) -> np.ndarray:
    # a FourierCoeffs carries a_0 first; a raw sequence starts at a_1
    seq = a.a[1:] if isinstance(a, FourierCoeffs) else np.asarray(a, dtype=float).ravel()
    if K is not None:
        if K < 0:
            raise ParameterError(f"K must be >= 0, got {K!r}")
        seq = seq[:K]
    return seq


def sample_Y_of_a(a, alpha: float, scales: LimitScales, K: Optional[int], stream: RngStream,
                  count: int) -> LimitSample:
    """Draws of ``sum_{k=1}^K a_k Y_k``.

    ``K`` defaults to the length of ``a``.  The attached ``tail_mass``
    estimates ``sum_{k>K} |a_k|^alpha`` from the decay of the retained terms.
    """
    _check_alpha(alpha)
    seq = _lag_coeffs(a, K)
    full = _lag_coeffs(a, None)
    out = np.zeros(count)
    for k in np.flatnonzero(seq):
        out += seq[k] * _yh(alpha, scales, stream, int(k) + 1, count)
    if K is not None and full.size > K:
        tail = float(ell_alpha_norm(full[K:], alpha).value)
    else:
        tail = ell_alpha_tail_mass(seq, alpha) if seq.size else 0.0
    return LimitSample(out, int(seq.size), tail, not np.any(seq))


def sample_Y_tilde_of_a(a, alpha: float, scales: LimitScales, K: Optional[int], stream: RngStream,
                        count: int) -> LimitSample:
    """Draws of ``Y(a) / Y_0`` with ``Y_0`` independent of the ``Y_k``."""
    num = sample_Y_of_a(a, alpha, scales, K, stream, count)
    vals = num.values / _y0(alpha, scales, stream, count)
    return LimitSample(vals, num.K, num.tail_mass, num.degenerate)


def ecf_scale(sample, index: float, multipliers: Sequence[float] = (0.25, 0.5, 1.0, 2.0)) -> float:
    """Scale of a strictly stable sample from ``|phi(t)| = exp(-(sigma t)^index)``.

    The log-log relation is regressed with known slope over frequencies
    ``t = c / median|x|``; points whose ``-log|phi|`` sits within the Monte
    Carlo noise of 0 or beyond 5 are dropped.
    """
    x = np.asarray(sample, dtype=float).ravel()
    med = float(np.median(np.abs(x)))
    if med == 0.0:
        raise ParameterError("cannot estimate the scale of a sample concentrated at 0")
    noise = 3.0 / math.sqrt(x.size)
    logs = []
    for c in multipliers:
        t = c / med
        mod = abs(complex(np.mean(np.cos(t * x)), np.mean(np.sin(t * x))))
        y = -math.log(mod) if mod > 0 else math.inf
        if noise < y < 5.0:
            logs.append(math.log(y) / index - math.log(t))
    if not logs:
        raise ParameterError("no usable frequency for the characteristic-function scale fit")
    return float(math.exp(np.mean(logs)))


def calibrate_scales(alpha: float, stream: RngStream, n_ref: int = 2**20, replicates: int = 500) -> LimitScales:
    """Estimate ``sigma1, sigma2`` from i.i.d. innovation paths of length ``n_ref``.

    ``sigma1`` from ``n gamma_n(0) / n^{2/alpha}`` and ``sigma2`` from
    ``n gamma_n(1) / (n log n)^{1/alpha}``.
    """
    _check_alpha(alpha)
    if n_ref < 2 or replicates < 8:
        raise ParameterError("calibration needs n_ref >= 2 and at least 8 replicates")
    s0 = np.empty(replicates)
    s1 = np.empty(replicates)
    for r in range(replicates):
        eps = sample_sas(StableLaw(alpha), stream.substream(r), n_ref)
        s0[r] = float(eps @ eps) / n_ref ** (2.0 / alpha)
        s1[r] = float(eps[:-1] @ eps[1:]) / (n_ref * math.log(n_ref)) ** (1.0 / alpha)
    return LimitScales(ecf_scale(s0, alpha / 2.0), ecf_scale(s1, alpha), "calibrated")


def write_limit_csv(sample, csv_path, alpha: float, scales: LimitScales, K: int, seed) -> tuple[Path, Path]:
    """Single-column CSV plus a ``.json`` sidecar with alpha, scales, K and seed."""
    csv_path = Path(csv_path)
    vals = np.asarray(sample, dtype=float).ravel()
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value"])
        for v in vals:
            w.writerow([repr(float(v))])
    side = {"alpha": alpha, "scales": scales.to_dict(), "K": int(K),
            "seed": list(seed) if seed is not None else None}
    if isinstance(sample, LimitSample):
        side["tail_mass"] = sample.tail_mass
        side["degenerate"] = sample.degenerate
    side_path = csv_path.with_suffix(".json")
    side_path.write_text(json.dumps(side, sort_keys=True, indent=2) + "\n")
    return csv_path, side_path
