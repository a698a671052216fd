"""Monte Carlo checks of the stable limit theory for sample autocovariances.

Each experiment draws independent replicates keyed by ``(seed, replicate)``
and summarizes them per sample size.  Verdicts are scale-free: tail indices,
self-normalized statistics, standardized two-sample KS distances and trends
judged against a band of twice the bootstrap standard error.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .function_classes import (
    FourierCoeffs,
    FunctionSpec,
    ell_alpha_log_norm,
    ell_alpha_norm,
    filter_condition_check,
    fourier_coeffs,
    modulated_coeffs,
)
from .limit_process import LimitScales, sample_Y_of_a, sample_Y_tilde_of_a
from .stable_rng import ParameterError, RngStream, StableLaw, sample_sas
from .timeseries import DegenerateError, LinearFilter, SamplePath, _filter_apply, autocovariances

__all__ = [
    "ExperimentReport",
    "QuadraticFormSpec",
    "ks_distance",
    "hill_tail_index",
    "standardize",
    "bootstrap_se",
    "band_trend",
    "normalized_statistic_Xn",
    "implied_constant_ratio",
    "fidi_experiment",
    "autocov_scaling_experiment",
    "quadratic_form_tail_check",
    "remainder_negligibility_experiment",
]

BOOTSTRAP_RESAMPLES = 200
BAND_WIDTH = 2.0
HILL_FRACTION = 0.1
CHUNK_ELEMENTS = 1 << 21

# sub-stream roles under RngStream(seed, replicate)
_ROLE_PATH = 0
_ROLE_AUX = 1
# stream ids reserved for whole-sample draws
_LIMIT_STREAM = 2**63
_BOOT_STREAM = 2**63 + 1


# ---------------------------------------------------------------------------
# Reports


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


@dataclass
class ExperimentReport:
    """Result of one experiment.

    ``per_n`` holds one row per sample size (or grid point); every row
    carries ``replicates`` and ``seed``.
    """

    kind: str
    config: dict
    per_n: list = field(default_factory=list)
    replicates: int = 0
    seeds: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return _clean({"kind": self.kind, "config": self.config, "per_n": self.per_n,
                       "replicates": self.replicates, "seeds": self.seeds,
                       "verdicts": self.verdicts, "diagnostics": self.diagnostics})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    def write_summary_csv(self, path) -> Path:
        """Long-format table: one ``(row, column, value)`` triple per entry of ``per_n``."""
        path = Path(path)
        rows = _clean(self.per_n)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "key", "value"])
            for i, row in enumerate(rows):
                for key in sorted(row):
                    val = row[key]
                    if isinstance(val, (dict, list)):
                        val = json.dumps(val, sort_keys=True)
                    elif isinstance(val, float):
                        val = repr(val)
                    w.writerow([i, key, val])
        return path

    def write_samples_csv(self, path) -> Path:
        """Raw replicate samples in long format ``(sample, index, value)``."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "index", "value"])
            for name in sorted(self.samples):
                for i, v in enumerate(np.asarray(self.samples[name], dtype=float).ravel()):
                    w.writerow([name, i, repr(float(v))])
        return path


# ---------------------------------------------------------------------------
# Statistics


def ks_distance(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup_x |F_a(x) - F_b(x)|``."""
    a = np.sort(np.asarray(sample_a, dtype=float).ravel())
    b = np.sort(np.asarray(sample_b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ParameterError("KS distance needs two nonempty samples")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def hill_tail_index(sample, top_fraction: float = HILL_FRACTION) -> float:
    """Hill estimator from the ``k = floor(top_fraction * N)`` largest ``|X|``.

    Returns ``1 / mean(log X_(i) - log X_(k+1))`` over ``i = 1..k``.
    """
    if not (0.0 < top_fraction <= 0.1):
        raise ParameterError(f"top_fraction must lie in (0, 0.1], got {top_fraction!r}")
    x = np.sort(np.abs(np.asarray(sample, dtype=float).ravel()))[::-1]
    if x.size < 2:
        raise ParameterError("Hill estimator needs at least two observations")
    k = max(1, int(math.floor(top_fraction * x.size)))
    k = min(k, x.size - 1)
    if x[k] <= 0.0:
        raise DegenerateError("Hill estimator: threshold order statistic is not positive")
    spacing = float(np.mean(np.log(x[:k]) - math.log(x[k])))
    if spacing <= 0.0:
        raise DegenerateError("Hill estimator: nonpositive log-spacings")
    return 1.0 / spacing


def _iqr(x: np.ndarray) -> float:
    q1, q3 = np.quantile(x, [0.25, 0.75])
    return float(q3 - q1)


def standardize(sample) -> np.ndarray:
    """Center at the median and divide by the IQR (left unscaled when the IQR is 0)."""
    x = np.asarray(sample, dtype=float).ravel()
    centered = x - np.median(x)
    iqr = _iqr(x)
    return centered / iqr if iqr > 0 else centered


def bootstrap_se(stat: Callable, samples: Sequence[np.ndarray], stream: RngStream,
                 resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    """Bootstrap standard error of ``stat(*samples)``, resampling each sample independently."""
    samples = [np.asarray(s, dtype=float).ravel() for s in samples]
    gen = stream.generator()
    vals = np.empty(resamples)
    for b in range(resamples):
        picks = [s[gen.integers(0, s.size, s.size)] for s in samples]
        vals[b] = stat(*picks)
    return float(np.std(vals, ddof=1))


def band_trend(values: Sequence[float], ses: Sequence[float], width: float = BAND_WIDTH) -> dict:
    """Trend verdicts for a statistic tracked over increasing ``n``.

    ``nonincreasing``: no step up by more than ``width * sqrt(se_i^2 + se_{i+1}^2)``.
    ``shrinks`` / ``grows``: last value below / above the first beyond the same band.
    """
    v = np.asarray(values, dtype=float)
    s = np.asarray(ses, dtype=float)
    steps = [bool(v[i + 1] <= v[i] + width * math.hypot(s[i], s[i + 1])) for i in range(v.size - 1)]
    band = width * math.hypot(s[0], s[-1])
    return {
        "nonincreasing": all(steps),
        "steps_within_band": steps,
        "shrinks": bool(v[-1] < v[0] - band),
        "grows": bool(v[-1] > v[0] + band),
        "first_last_band": band,
    }


# ---------------------------------------------------------------------------
# Normalized autocovariance statistics


def _lag_weights(a, n: int) -> np.ndarray:
    # a_1..a_{n-1}; a FourierCoeffs carries a_0 first
    seq = a.a[1:] if isinstance(a, FourierCoeffs) else np.asarray(a, dtype=float).ravel()
    out = np.zeros(max(n - 1, 0))
    m = min(out.size, seq.size)
    out[:m] = seq[:m]
    return out


def _xn_rows(rows: np.ndarray, w: np.ndarray, alpha: float):
    """``(X_n, X~_n, gamma_n(0))`` for each replicate row."""
    n = rows.shape[-1]
    nz = np.flatnonzero(w)
    top = int(nz[-1]) + 1 if nz.size else 0
    gam = autocovariances(rows, top)
    lagged = gam[..., 1:top + 1] @ w[:top] if top else np.zeros(rows.shape[:-1])
    logn = math.log(n)
    xn = (n * logn) ** (-1.0 / alpha) * n * lagged
    g0 = gam[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        xt = (n / logn) ** (1.0 / alpha) * lagged / g0
    return xn, xt, g0


def normalized_statistic_Xn(a, path_eps, alpha: float) -> tuple[float, float]:
    """``X_n(a) = (n log n)^{-1/alpha} sum_{k=1}^{n-1} a_k n gamma_n(k)`` and
    ``X~_n(a) = (n / log n)^{1/alpha} sum_{k=1}^{n-1} a_k rho_n(k)``.

    A raw ``a`` lists ``a_1, a_2, ...``; a :class:`FourierCoeffs` starts at
    ``a_0``, which is skipped.  Coefficients beyond ``n - 1`` are ignored.
    """
    if not (0.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")
    x = path_eps.values if isinstance(path_eps, SamplePath) else np.asarray(path_eps, dtype=float)
    n = x.size
    if n < 2:
        raise ParameterError(f"normalized statistics need n >= 2, got n = {n}")
    xn, xt, g0 = _xn_rows(x, _lag_weights(a, n), alpha)
    if g0 == 0.0:
        raise DegenerateError("self-normalization of an all-zero path")
    return float(xn), float(xt)


# ---------------------------------------------------------------------------
# Replicate plumbing


def _chunks(total: int, width: int) -> list[tuple[int, int]]:
    rows = max(1, CHUNK_ELEMENTS // max(width, 1))
    return [(lo, min(lo + rows, total)) for lo in range(0, total, rows)]


def _map_chunks(fn: Callable, chunks: list, threads: int) -> list:
    # results come back in chunk order, so any thread count gives the same output
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def _innovation_rows(alpha: float, seed: int, grid_index: int, lo: int, hi: int, width: int) -> np.ndarray:
    law = StableLaw(alpha)
    return np.vstack([sample_sas(law, RngStream(seed, r).substream(_ROLE_PATH, grid_index), width)
                      for r in range(lo, hi)])


def _hill_or_nan(x: np.ndarray, top_fraction: float) -> float:
    try:
        return hill_tail_index(x, top_fraction)
    except (DegenerateError, ParameterError):
        return math.nan


def _boot_stream(seed: int, *keys: int) -> RngStream:
    return RngStream(seed, _BOOT_STREAM, tuple(keys))


def _check_grid(n_grid, minimum: int = 2) -> list[int]:
    grid = [int(n) for n in n_grid]
    if not grid:
        raise ParameterError("n_grid must not be empty")
    if any(n < minimum for n in grid):
        raise ParameterError(f"every n in n_grid must be >= {minimum}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("n_grid must be strictly increasing")
    return grid


def _check_common(alpha: float, replicates: int):
    if not (0.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")
    if replicates < 1:
        raise ParameterError(f"replicates must be >= 1, got {replicates!r}")


# ---------------------------------------------------------------------------
# Finite-dimensional convergence


def _resolve_coeffs(a, top: int) -> np.ndarray:
    """Lag coefficients ``a_1..`` from a raw sequence, FourierCoeffs or FunctionSpec."""
    if isinstance(a, FunctionSpec):
        return fourier_coeffs(a, top).a[1:]
    if isinstance(a, FourierCoeffs):
        return a.a[1:]
    return np.asarray(a, dtype=float).ravel()


def fidi_experiment(alpha: float, a, n_grid: Sequence[int], replicates: int, seed: int,
                    scales: Optional[LimitScales] = None, limit_draws: Optional[int] = None,
                    top_fraction: float = HILL_FRACTION, threads: int = 1,
                    keep_samples: bool = False) -> ExperimentReport:
    """One-dimensional distributions of ``X_n(a)`` and ``X~_n(a)`` against the limit.

    Per ``n``: standardized KS distance between ``X~_n(a)`` and ``Y~(a)``
    draws, Hill index and IQR of ``X_n(a)``, each with a bootstrap standard
    error.  The raw-scale KS distance against ``Y(a)`` is added only when the
    scales are calibrated.  ``a`` may be a :class:`FunctionSpec`, whose
    coefficients are then taken up to ``max(n_grid) - 1``.
    """
    _check_common(alpha, replicates)
    grid = _check_grid(n_grid)
    scales = scales or LimitScales()
    coeffs = _resolve_coeffs(a, grid[-1] - 1)
    limit_draws = int(limit_draws or replicates)
    zero = not np.any(coeffs)

    lnorm = ell_alpha_norm(coeffs, alpha)
    llog = ell_alpha_log_norm(coeffs, alpha)
    diagnostics = {
        "ell_alpha": lnorm.to_dict(),
        "ell_alpha_log": llog.to_dict(),
        "coefficients_K": int(coeffs.size),
        "non_tightness_expected": bool(lnorm.diverging),
        "warnings": [],
    }
    if lnorm.diverging:
        diagnostics["warnings"].append(
            "coefficients are not in ell^alpha: the limit series diverges and the statistics are not tight")
    elif llog.diverging:
        diagnostics["warnings"].append("coefficients fail the ell^alpha log ell diagnostic")

    limit_stream = RngStream(seed, _LIMIT_STREAM)
    y_tilde = sample_Y_tilde_of_a(coeffs, alpha, scales, None, limit_stream, limit_draws)
    y_raw = sample_Y_of_a(coeffs, alpha, scales, None, limit_stream, limit_draws) \
        if scales.provenance == "calibrated" else None
    y_std = standardize(y_tilde.values)
    diagnostics["limit_tail_mass"] = y_tilde.tail_mass
    diagnostics["limit_degenerate"] = y_tilde.degenerate

    per_n = []
    samples = {}
    for i, n in enumerate(grid):
        w = _lag_weights(coeffs, n)

        def work(chunk, n=n, i=i, w=w):
            rows = _innovation_rows(alpha, seed, i, chunk[0], chunk[1], n)
            return _xn_rows(rows, w, alpha)

        parts = _map_chunks(work, _chunks(replicates, n), threads)
        xn = np.concatenate([p[0] for p in parts])
        xt = np.concatenate([p[1] for p in parts])
        row = {"n": n, "replicates": replicates, "seed": seed, "limit_draws": limit_draws}
        if zero:
            xt = np.zeros_like(xt)
            row.update({"ks_standardized": ks_distance(xt, y_tilde.values), "ks_standardized_se": 0.0,
                        "hill_Xn": math.nan, "hill_Xn_se": 0.0, "iqr_Xn": 0.0, "iqr_Xn_se": 0.0,
                        "iqr_standardized_Xtilde": 0.0, "max_abs_Xn": 0.0})
        else:
            ks_std = ks_distance(standardize(xt), y_std)
            ks_se = bootstrap_se(lambda u, v: ks_distance(standardize(u), standardize(v)),
                                 [xt, y_tilde.values], _boot_stream(seed, 0, i))
            hill = _hill_or_nan(xn, top_fraction)
            hill_se = bootstrap_se(lambda u: _hill_or_nan(u, top_fraction), [xn], _boot_stream(seed, 1, i))
            iqr = _iqr(xn)
            iqr_se = bootstrap_se(_iqr, [xn], _boot_stream(seed, 2, i))
            row.update({"ks_standardized": ks_std, "ks_standardized_se": ks_se, "hill_Xn": hill,
                        "hill_Xn_se": hill_se, "iqr_Xn": iqr, "iqr_Xn_se": iqr_se,
                        "max_abs_Xn": float(np.max(np.abs(xn)))})
        row["median_Xn"] = float(np.median(xn))
        if y_raw is not None:
            row["ks_raw"] = ks_distance(xn, y_raw.values)
        per_n.append(row)
        if keep_samples:
            samples[f"Xn_n{n}"] = xn
            samples[f"Xtilde_n{n}"] = xt
    if keep_samples:
        samples["Ytilde"] = y_tilde.values

    ks_trend = band_trend([r["ks_standardized"] for r in per_n], [r["ks_standardized_se"] for r in per_n])
    iqr_trend = band_trend([r["iqr_Xn"] for r in per_n], [r["iqr_Xn_se"] for r in per_n])
    verdicts = {
        "ks_nonincreasing": ks_trend["nonincreasing"],
        "ks_trend": ks_trend,
        "iqr_trend": iqr_trend,
        "iqr_shrinks": iqr_trend["shrinks"],
        "non_tightness_expected": diagnostics["non_tightness_expected"],
        "band_rule": f"{BAND_WIDTH} x bootstrap SE ({BOOTSTRAP_RESAMPLES} resamples)",
    }
    config = {"alpha": alpha, "n_grid": grid, "replicates": replicates, "seed": seed,
              "scales": scales.to_dict(), "limit_draws": limit_draws, "top_fraction": top_fraction,
              "a_head": coeffs[:16].tolist(), "a_K": int(coeffs.size)}
    return ExperimentReport("fidi", config, per_n, replicates, [seed], verdicts, diagnostics, samples)


# ---------------------------------------------------------------------------
# Autocovariance scaling


def autocov_scaling_experiment(alpha: float, n_grid: Sequence[int], replicates: int, seed: int,
                               lags: Sequence[int] = (1, 2), top_fraction: float = HILL_FRACTION,
                               threads: int = 1, keep_samples: bool = False) -> ExperimentReport:
    """Joint behaviour of ``n gamma_n(0) / n^{2/alpha}`` and ``n gamma_n(h) / (n log n)^{1/alpha}``.

    Reports positivity of the lag-0 statistic, Hill indices (targets
    ``alpha/2`` and ``alpha``) and sign correlations between lag statistics.
    """
    _check_common(alpha, replicates)
    grid = _check_grid(n_grid)
    lags = [int(h) for h in lags]
    if not lags or min(lags) < 1:
        raise ParameterError("lags must be positive integers")
    top = max(lags)
    per_n = []
    samples = {}
    for i, n in enumerate(grid):
        def work(chunk, n=n, i=i):
            rows = _innovation_rows(alpha, seed, i, chunk[0], chunk[1], n)
            return autocovariances(rows, top)

        gam = np.vstack(_map_chunks(work, _chunks(replicates, n), threads))
        s0 = n * gam[:, 0] / n ** (2.0 / alpha)
        sh = {h: n * gam[:, h] / (n * math.log(n)) ** (1.0 / alpha) for h in lags}
        row = {
            "n": n, "replicates": replicates, "seed": seed,
            "positive_fraction_lag0": float(np.mean(s0 > 0)),
            "hill_lag0": _hill_or_nan(s0, top_fraction),
            "hill_lag0_se": bootstrap_se(lambda u: _hill_or_nan(u, top_fraction), [s0], _boot_stream(seed, 10, i)),
            "median_lag0": float(np.median(s0)),
        }
        for h in lags:
            row[f"hill_lag{h}"] = _hill_or_nan(sh[h], top_fraction)
            row[f"hill_lag{h}_se"] = bootstrap_se(lambda u: _hill_or_nan(u, top_fraction), [sh[h]],
                                                  _boot_stream(seed, 10 + h, i))
            row[f"iqr_lag{h}"] = _iqr(sh[h])
        signs = {h: np.sign(sh[h]) for h in lags}
        corr = {}
        for p in range(len(lags)):
            for q in range(p + 1, len(lags)):
                u, v = signs[lags[p]], signs[lags[q]]
                corr[f"{lags[p]}-{lags[q]}"] = float(np.corrcoef(u, v)[0, 1]) if u.std() and v.std() else 0.0
        row["sign_correlations"] = corr
        row["sign_corr_band"] = 3.0 / math.sqrt(replicates)
        row["independent_within_band"] = all(abs(c) <= row["sign_corr_band"] for c in corr.values())
        per_n.append(row)
        if keep_samples:
            samples[f"lag0_n{n}"] = s0
            for h in lags:
                samples[f"lag{h}_n{n}"] = sh[h]
    last = per_n[-1]
    verdicts = {
        "lag0_all_positive": all(r["positive_fraction_lag0"] == 1.0 for r in per_n),
        "hill_lag0_target": alpha / 2.0,
        "hill_lag_target": alpha,
        "hill_lag0_last": last["hill_lag0"],
        "hill_lag1_last": last.get("hill_lag1"),
        "sign_independence_last": last["independent_within_band"],
    }
    config = {"alpha": alpha, "n_grid": grid, "replicates": replicates, "seed": seed, "lags": lags,
              "top_fraction": top_fraction}
    return ExperimentReport("autocov-scaling", config, per_n, replicates, [seed], verdicts, {}, samples)


# ---------------------------------------------------------------------------
# Quadratic-form tails


@dataclass(frozen=True, eq=False)
class QuadraticFormSpec:
    """Off-diagonal coefficients ``b_{s,t}`` of ``Q = sum_{s != t} b_{s,t} eps_s eps_t``.

    With ``cauchy_multipliers`` each product carries an extra independent
    standard Cauchy factor ``C_{s,t} = C_{t,s}``.
    """

    b: np.ndarray
    cauchy_multipliers: bool = False
    label: str = ""

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] < 2:
            raise ParameterError("b must be a square matrix of size >= 2")
        if np.any(np.diag(b) != 0.0):
            raise ParameterError("b must have a zero diagonal (s != t only)")
        if not np.all(np.isfinite(b)):
            raise ParameterError("b must be finite")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @classmethod
    def toeplitz(cls, a, n: int, cauchy_multipliers: bool = False, label: str = "") -> "QuadraticFormSpec":
        """``b_{s,t} = a_{|s-t|}`` with ``a = (a_1, a_2, ...)`` (missing lags are zero)."""
        seq = np.asarray(a, dtype=float).ravel()
        lag = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        full = np.concatenate([[0.0], seq, np.zeros(max(0, n - 1 - seq.size))])
        return cls(full[lag], cauchy_multipliers, label)

    def gamma_n(self, alpha: float) -> float:
        """``sum_{s != t} |b|^alpha (1 + log+ 1/|b|)``."""
        ab = np.abs(self.b[self.b != 0.0])
        return float(np.sum(ab ** alpha * (1.0 + np.log(np.maximum(1.0 / ab, 1.0)))))

    def evaluate(self, eps: np.ndarray, mult: Optional[np.ndarray] = None) -> np.ndarray:
        """``Q`` for each row of ``eps`` (and of the multiplier stack ``mult``)."""
        eps = np.atleast_2d(eps)
        if mult is None:
            return np.einsum("rs,rs->r", eps @ self.b, eps)
        return np.einsum("rs,rst,rt->r", eps, self.b * mult, eps)

    def to_dict(self) -> dict:
        return {"n": self.n, "label": self.label, "cauchy_multipliers": self.cauchy_multipliers,
                "nonzero": int(np.count_nonzero(self.b))}


def implied_constant_ratio(prob: float, x: float, alpha: float, gamma: float) -> float:
    """``P * x^alpha / ((1 + log+ x) Gamma_n)``."""
    if gamma == 0.0:
        raise DegenerateError("degenerate quadratic form: Gamma_n(b) = 0")
    return prob * x ** alpha / ((1.0 + max(math.log(x), 0.0)) * gamma)


def _symmetric_cauchy(gen: np.random.Generator, rows: int, n: int) -> np.ndarray:
    c = np.tan(math.pi * (gen.random((rows, n, n)) - 0.5))
    upper = np.triu(c, 1)
    return upper + np.transpose(upper, (0, 2, 1))


def quadratic_form_tail_check(spec: QuadraticFormSpec, alpha: float, x_grid: Sequence[float],
                              replicates: int, seed: int, threads: int = 1) -> ExperimentReport:
    """Empirical ``P(Q > x)`` and the implied constant ratio ``r(x)`` over ``x_grid``."""
    _check_common(alpha, replicates)
    xs = [float(x) for x in x_grid]
    if not xs or min(xs) <= 0:
        raise ParameterError("x_grid must contain positive values")
    n = spec.n
    law = StableLaw(alpha)

    def work(chunk):
        lo, hi = chunk
        eps = np.vstack([sample_sas(law, RngStream(seed, r).substream(_ROLE_PATH), n) for r in range(lo, hi)])
        mult = None
        if spec.cauchy_multipliers:
            mult = np.stack([_symmetric_cauchy(RngStream(seed, r).substream(_ROLE_AUX).generator(), 1, n)[0]
                             for r in range(lo, hi)])
        return spec.evaluate(eps, mult)

    width = n * n if spec.cauchy_multipliers else n * 8
    q = np.concatenate(_map_chunks(work, _chunks(replicates, width), threads))
    gamma = spec.gamma_n(alpha)
    per_n = []
    for x in xs:
        p = float(np.mean(q > x))
        row = {"x": x, "n": n, "replicates": replicates, "seed": seed, "prob": p,
               "prob_se": math.sqrt(max(p * (1 - p), 0.0) / replicates)}
        row["ratio"] = implied_constant_ratio(p, x, alpha, gamma) if gamma > 0 else None
        per_n.append(row)
    if gamma > 0:
        ratios = [r["ratio"] for r in per_n]
        positive = [r for r in ratios if r > 0]
        verdicts = {"vacuous": False, "envelope": max(ratios),
                    "spread": max(positive) / min(positive) if positive else 1.0,
                    "gamma_n": gamma}
    else:
        verdicts = {"vacuous": True, "envelope": None, "spread": None, "gamma_n": 0.0,
                    "ratio_error": "degenerate quadratic form: Gamma_n(b) = 0"}
    config = {"alpha": alpha, "x_grid": xs, "replicates": replicates, "seed": seed, "spec": spec.to_dict()}
    return ExperimentReport("qform-tails", config, per_n, replicates, [seed], verdicts, {})


# ---------------------------------------------------------------------------
# Remainder negligibility


def remainder_negligibility_experiment(alpha: float, filt: LinearFilter, members: Sequence, n_grid: Sequence[int],
                                       replicates: int, seed: int, tau: float = 0.1,
                                       threads: int = 1) -> ExperimentReport:
    """``n (n log n)^{-1/alpha} max_f |J_X(f) - J_eps(f |psi|^2)|`` over a finite class.

    ``J_X(f) - J_eps(f|psi|^2)`` is the integral of ``f`` against the
    remainder ``I_X - I_eps |psi|^2``, evaluated in coefficient form with the
    coefficients of ``f |psi|^2`` obtained by modulation.
    """
    _check_common(alpha, replicates)
    grid = _check_grid(n_grid)
    members = list(members)
    if not members:
        raise ParameterError("the function class must not be empty")
    cond = filter_condition_check(filt, alpha, tau)
    diagnostics = {"filter_condition": cond, "warnings": [],
                   "class": [m.label if isinstance(m, FunctionSpec) else str(m) for m in members]}
    if cond["verdict"] == "violated":
        diagnostics["warnings"].append("filter fails the summability condition; running anyway")
    norms = [m.l2_norm() for m in members if isinstance(m, FunctionSpec)]
    diagnostics["sup_l2_norm"] = max(norms) if norms else None
    if norms and not math.isfinite(max(norms)):
        raise ParameterError("function class has an infinite L2 norm")
    H = filt.autocov().size - 1
    law = StableLaw(alpha)
    per_n = []
    for i, n in enumerate(grid):
        # J_X(f) and J_eps(f|psi|^2) in coefficient form over lags 0..n-1
        wx = np.vstack([fourier_coeffs(m, n - 1).a for m in members]) if all(
            isinstance(m, FunctionSpec) for m in members) else None
        if wx is None:
            raise ParameterError("class members must be FunctionSpec instances")
        we = np.vstack([modulated_coeffs(fourier_coeffs(m, n - 1 + H), filt).a[:n] for m in members])
        wx = wx.copy()
        wx[:, 1:] *= 2.0
        we[:, 1:] *= 2.0
        width = n + filt.neg_radius + filt.pos_radius

        def work(chunk, n=n, i=i, wx=wx, we=we, width=width):
            padded = np.vstack([sample_sas(law, RngStream(seed, r).substream(_ROLE_PATH, i), width)
                                for r in range(chunk[0], chunk[1])])
            off = filt.pos_radius
            eps = padded[:, off:off + n]
            x = eps.copy() if filt.coeffs == {0: 1.0} else _filter_apply(padded, filt, n)
            gx = autocovariances(x, n - 1)
            ge = autocovariances(eps, n - 1)
            diff = gx @ wx.T - ge @ we.T
            return np.max(np.abs(diff), axis=1)

        sup = np.concatenate(_map_chunks(work, _chunks(replicates, 4 * n), threads))
        stat = n * (n * math.log(n)) ** (-1.0 / alpha) * sup
        med = float(np.median(stat))
        q90 = float(np.quantile(stat, 0.9))
        per_n.append({
            "n": n, "replicates": replicates, "seed": seed, "median": med, "q90": q90,
            "median_se": bootstrap_se(np.median, [stat], _boot_stream(seed, 20, i)),
            "q90_se": bootstrap_se(lambda u: np.quantile(u, 0.9), [stat], _boot_stream(seed, 21, i)),
            "max": float(np.max(stat)),
        })
    med_trend = band_trend([r["median"] for r in per_n], [r["median_se"] for r in per_n])
    q90_trend = band_trend([r["q90"] for r in per_n], [r["q90_se"] for r in per_n])
    first, last = per_n[0]["median"], per_n[-1]["median"]
    verdicts = {
        "median_trend": med_trend,
        "q90_trend": q90_trend,
        "nonincreasing": med_trend["nonincreasing"] and q90_trend["nonincreasing"],
        "median_decrease_factor": (first / last) if last > 0 else (math.inf if first > 0 else 1.0),
        "identically_zero": all(r["max"] == 0.0 for r in per_n),
    }
    config = {"alpha": alpha, "filter": filt.to_dict(), "n_grid": grid, "replicates": replicates,
              "seed": seed, "tau": tau, "class_size": len(members)}
    return ExperimentReport("remainder", config, per_n, replicates, [seed], verdicts, diagnostics)
