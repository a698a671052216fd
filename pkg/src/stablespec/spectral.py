"""Periodogram, integrated periodogram and the linear-process remainder."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .timeseries import (
    AlignmentError,
    DegenerateError,
    LinearFilter,
    SamplePath,
    autocovariances,
)

__all__ = [
    "FrequencyError",
    "SpectralEvaluation",
    "periodogram",
    "periodogram_grid",
    "periodogram_via_autocov",
    "integrated_periodogram",
    "integrated_periodogram_batch",
    "integrated_periodogram_quadrature",
    "self_normalized_integrated_periodogram",
    "transfer_function",
    "power_transfer",
    "remainder",
    "write_spectrum_csv",
]


class FrequencyError(ValueError):
    """A frequency lies outside [0, pi]."""


@dataclass(frozen=True)
class SpectralEvaluation:
    lam: float
    value: float


def _values(path) -> np.ndarray:
    return path.values if isinstance(path, SamplePath) else np.asarray(path, dtype=float)


def _check_lambda(lam: float):
    if not (0.0 <= lam <= math.pi):
        raise FrequencyError(f"frequency must lie in [0, pi], got {lam!r}")


def periodogram(path, lam: float) -> float:
    """``|n^{-1/2} sum_t exp(-i lam t) X_t|^2`` with ``t = 1..n``."""
    _check_lambda(lam)
    x = _values(path)
    t = np.arange(1, x.size + 1)
    re = x @ np.cos(lam * t)
    im = x @ np.sin(lam * t)
    return float((re * re + im * im) / x.size)


def periodogram_grid(path, lams) -> np.ndarray:
    """Direct periodogram over an array of frequencies."""
    lams = np.asarray(lams, dtype=float)
    if lams.size and (lams.min() < 0.0 or lams.max() > math.pi):
        raise FrequencyError("frequencies must lie in [0, pi]")
    x = _values(path)
    t = np.arange(1, x.size + 1)
    phase = np.outer(lams, t)
    re = np.cos(phase) @ x
    im = np.sin(phase) @ x
    return (re * re + im * im) / x.size


def periodogram_via_autocov(path, lam: float) -> float:
    """``gamma_n(0) + 2 sum_{h=1}^{n-1} cos(lam h) gamma_n(h)``."""
    _check_lambda(lam)
    x = _values(path)
    gam = autocovariances(x, x.size - 1)
    h = np.arange(1, x.size)
    return float(gam[0] + 2.0 * (np.cos(lam * h) @ gam[1:]))


def _coeff_array(a) -> np.ndarray:
    return np.asarray(getattr(a, "a", a), dtype=float)


def _weights(a, n: int) -> np.ndarray:
    # zero-extend or truncate a_0..a_K to lags 0..n-1
    arr = _coeff_array(a)
    w = np.zeros(n)
    m = min(n, arr.size)
    w[:m] = arr[:m]
    return w


def integrated_periodogram(path, a) -> float:
    """Coefficient form ``gamma_n(0) a_0 + 2 sum_{h=1}^{n-1} a_h gamma_n(h)``.

    ``a`` is a :class:`FourierCoeffs` or an array ``a_0, a_1, ...``; missing
    lags count as zero.
    """
    x = _values(path)
    return float(integrated_periodogram_batch(x, a))


def integrated_periodogram_batch(values, a) -> np.ndarray:
    """Coefficient-form integrated periodogram of every row of ``values``."""
    x = np.asarray(values, dtype=float)
    n = x.shape[-1]
    w = _weights(a, n)
    nz = np.flatnonzero(w)
    if nz.size == 0:
        return np.zeros(x.shape[:-1])
    gam = autocovariances(x, int(nz[-1]))
    w = w[: gam.shape[-1]].copy()
    w[1:] *= 2.0
    return gam @ w


def self_normalized_integrated_periodogram(path, a) -> float:
    """``rho_n(0) a_0 + 2 sum a_h rho_n(h)``, i.e. the coefficient form over ``gamma_n(0)``."""
    x = _values(path)
    g0 = float(x @ x) / x.size
    if g0 == 0.0:
        raise DegenerateError("self-normalization of an all-zero path")
    return integrated_periodogram(x, a) / g0


def _gauss_legendre_panels(lo: float, hi: float, panels: int, order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    ws = (half[:, None] * weights[None, :]).ravel()
    return xs, ws


def integrated_periodogram_quadrature(path, f, breakpoints=(), order: int = 24, degree: int = 0) -> float:
    """``int_0^pi I_n(lam) f(lam) dlam`` by composite Gauss-Legendre quadrature.

    ``f`` is a vectorized callable (or an object with ``evaluate`` and
    ``breakpoints``).  The interval is split at the breakpoints and into panels
    short enough to resolve the trigonometric polynomial ``I_n`` times the
    highest harmonic ``degree`` of ``f``; this is the quadrature counterpart of
    :func:`integrated_periodogram`.
    """
    if hasattr(f, "evaluate"):
        breakpoints = tuple(breakpoints) + tuple(f.breakpoints())
        degree = max(degree, f.harmonic_degree()) if hasattr(f, "harmonic_degree") else degree
        f = f.evaluate
    x = _values(path)
    n = x.size
    cuts = sorted({0.0, math.pi, *(b for b in breakpoints if 0.0 < b < math.pi)})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        # about one oscillation of the highest harmonic per panel
        panels = max(1, int(math.ceil((hi - lo) * (n + degree) / math.pi)) + 1)
        lams, ws = _gauss_legendre_panels(lo, hi, panels, order)
        vals = np.asarray(f(lams), dtype=float)
        total += float(ws @ (periodogram_grid(x, lams) * vals))
    return total


def transfer_function(filt: LinearFilter, lam) -> complex:
    """``psi(exp(-i lam)) = sum_j psi_j exp(-i lam j)`` over the finite support."""
    lam_arr = np.asarray(lam, dtype=float)
    out = np.exp(-1j * np.multiply.outer(lam_arr, filt.lags)) @ filt.values
    return complex(out) if out.ndim == 0 else out


def power_transfer(filt: LinearFilter, lam):
    """``|psi(exp(-i lam))|^2``."""
    val = np.abs(transfer_function(filt, lam)) ** 2
    return float(val) if np.ndim(val) == 0 else val


def remainder(path_x: SamplePath, path_eps: SamplePath, filt: LinearFilter, lam: float) -> float:
    """``R_n(lam) = I_{n,X}(lam) - I_{n,eps}(lam) |psi(exp(-i lam))|^2``.

    ``path_x`` must come from :func:`simulate_linear` driven by ``path_eps``
    through ``filt``.
    """
    if path_x.origin != "linear" or path_x.filter != filt:
        raise AlignmentError("path_x was not generated by this filter")
    eps = path_x.innovations
    if eps is None or not (eps is path_eps or np.array_equal(eps.values, path_eps.values)):
        raise AlignmentError("path_eps is not the innovation segment driving path_x")
    return periodogram(path_x, lam) - periodogram(path_eps, lam) * power_transfer(filt, lam)


def write_spectrum_csv(evals, csv_path) -> Path:
    """Write ``(lambda, value)`` rows with a header."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "value"])
        for ev in evals:
            lam, val = (ev.lam, ev.value) if isinstance(ev, SpectralEvaluation) else ev
            w.writerow([repr(float(lam)), repr(float(val))])
    return csv_path
