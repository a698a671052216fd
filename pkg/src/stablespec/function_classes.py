"""Index functions, their cosine Fourier coefficients, and summability/entropy diagnostics.

The Fourier coefficients are ``a_h(f) = int_0^pi cos(lam h) f(lam) dlam``.
Sequences passed as raw arrays to the summability helpers are read as
``(a_1, a_2, ...)``; a :class:`FourierCoeffs` contributes ``a_1..a_K`` (its
``a_0`` never enters a summability condition).
"""

from __future__ import annotations

import csv
import functools
import math
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from .stable_rng import ParameterError
from .timeseries import LinearFilter

__all__ = [
    "QuadratureError",
    "TruncationError",
    "ConfigurationError",
    "CatalogError",
    "FunctionSpec",
    "FourierCoeffs",
    "FunctionClass",
    "SummabilityResult",
    "harmonic_index_set",
    "fourier_coeffs",
    "fourier_coeffs_quadrature",
    "modulated_coeffs",
    "ell_alpha_norm",
    "ell_alpha_tail_mass",
    "concavity_b",
    "h_function",
    "ell_alpha_log_norm",
    "metric_d",
    "condition_compact_family",
    "pseudo_metric_rho_k",
    "rho_k_matrix",
    "greedy_cover",
    "covering_number",
    "entropy_condition_fit",
    "filter_condition_check",
    "parse_filter",
    "load_catalog",
    "write_coeffs_csv",
]

HOLDER_BANDWIDTH = 255
DECAY_RATIO = 0.85
RUN_LENGTH = 3
ZERO_TOL = 1e-13
REFINEMENT_TOL = 0.2


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class TruncationError(ValueError):
    """Coefficients are not available to the lag an operation needs."""


class ConfigurationError(ValueError):
    """A tuning constant is outside its verified range."""


class CatalogError(ValueError):
    """A catalog line or reference could not be resolved."""


# ---------------------------------------------------------------------------
# Function descriptions


_HOLDER_FAMILIES = {
    # g_theta = theta**b * D(lam),  D(lam) = (2/pi) sum_{j=1}^{J} cos(j lam)
    "dirichlet": 1.0,
    "dirichlet_sqrt": 0.5,
}


@dataclass(frozen=True)
class FunctionSpec:
    """One index function ``f`` on ``[0, pi]``.

    Build with the classmethods; ``kind`` is one of ``constant``,
    ``indicator``, ``cosine``, ``arma_spectral_density``, ``holder_member``
    or ``tabulated``.
    """

    kind: str
    c: float = 0.0
    x: float = 0.0
    k: int = 0
    filter: Optional[LinearFilter] = None
    scale: float = 1.0
    family: str = ""
    theta: float = 0.0
    grid: tuple = ()
    values: tuple = ()
    name: str = ""

    @classmethod
    def constant(cls, c: float = 1.0, name: str = "") -> "FunctionSpec":
        return cls("constant", c=float(c), name=name)

    @classmethod
    def indicator(cls, x: float, name: str = "") -> "FunctionSpec":
        if not (0.0 < x <= math.pi):
            raise ParameterError(f"indicator endpoint must lie in (0, pi], got {x!r}")
        return cls("indicator", x=float(x), name=name)

    @classmethod
    def cosine(cls, k: int, name: str = "") -> "FunctionSpec":
        if int(k) != k or k < 0:
            raise ParameterError(f"cosine frequency must be a nonnegative integer, got {k!r}")
        return cls("cosine", k=int(k), name=name)

    @classmethod
    def arma_spectral_density(cls, filt: LinearFilter, scale: float = 1.0, name: str = "") -> "FunctionSpec":
        """``scale**2 / (2 pi) |psi(exp(-i lam))|**2`` for a finite filter."""
        return cls("arma_spectral_density", filter=filt, scale=float(scale), name=name)

    @classmethod
    def holder_member(cls, family: str, theta: float, name: str = "") -> "FunctionSpec":
        if family not in _HOLDER_FAMILIES:
            raise ParameterError(f"unknown Hölder family {family!r}")
        if not (0.0 <= theta <= 1.0):
            raise ParameterError(f"Hölder family index must lie in [0, 1], got {theta!r}")
        return cls("holder_member", family=family, theta=float(theta), name=name)

    @classmethod
    def tabulated(cls, grid, values, name: str = "") -> "FunctionSpec":
        """Piecewise-linear interpolant, held constant outside the grid."""
        g = tuple(float(v) for v in grid)
        v = tuple(float(u) for u in values)
        if len(g) < 2 or len(g) != len(v):
            raise ParameterError("tabulated function needs matching grid and values of length >= 2")
        if g[0] < 0.0 or g[-1] > math.pi or any(b <= a for a, b in zip(g, g[1:])):
            raise ParameterError("tabulated grid must be strictly increasing within [0, pi]")
        if not all(math.isfinite(u) for u in v):
            raise ParameterError("tabulated values must be finite")
        return cls("tabulated", grid=g, values=v, name=name)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "constant":
            return f"constant(c={self.c:g})"
        if self.kind == "indicator":
            return f"indicator(x={self.x:g})"
        if self.kind == "cosine":
            return f"cosine(k={self.k})"
        if self.kind == "arma_spectral_density":
            return f"arma_spectral_density({dict(self.filter.coeffs)}, scale={self.scale:g})"
        if self.kind == "holder_member":
            return f"holder_member({self.family}, theta={self.theta:g})"
        return f"tabulated({len(self.grid)} nodes)"

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == "constant":
            return np.full(lam.shape, self.c)
        if self.kind == "indicator":
            return (lam <= self.x).astype(float)
        if self.kind == "cosine":
            return np.cos(self.k * lam)
        if self.kind == "arma_spectral_density":
            psi = np.exp(-1j * np.multiply.outer(lam, self.filter.lags)) @ self.filter.values
            return self.scale ** 2 / (2 * math.pi) * np.abs(psi) ** 2
        if self.kind == "holder_member":
            j = np.arange(1, HOLDER_BANDWIDTH + 1)
            kern = (2 / math.pi) * np.cos(np.multiply.outer(lam, j)).sum(axis=-1)
            return self.theta ** _HOLDER_FAMILIES[self.family] * kern
        return np.interp(lam, self.grid, self.values)

    __call__ = evaluate

    def harmonic_degree(self) -> int:
        """Highest harmonic of a trigonometric-polynomial ``f``; 0 for the piecewise variants."""
        if self.kind == "cosine":
            return self.k
        if self.kind == "holder_member":
            return HOLDER_BANDWIDTH
        if self.kind == "arma_spectral_density":
            return self.filter.autocov().size - 1
        return 0

    def breakpoints(self) -> tuple:
        if self.kind == "indicator":
            return (self.x,)
        if self.kind == "tabulated":
            return self.grid
        return ()

    def l2_norm(self) -> float:
        """``(int_0^pi f^2)^{1/2}``."""
        if self.kind == "constant":
            return abs(self.c) * math.sqrt(math.pi)
        if self.kind == "indicator":
            return math.sqrt(self.x)
        if self.kind == "cosine":
            return math.sqrt(math.pi if self.k == 0 else math.pi / 2)
        if self.kind in ("arma_spectral_density", "holder_member"):
            # finite cosine series: Parseval is exact
            top = HOLDER_BANDWIDTH if self.kind == "holder_member" else self.filter.autocov().size
            a = fourier_coeffs(self, max(top, 1)).a
            return math.sqrt(a[0] ** 2 / math.pi + 2 / math.pi * float(a[1:] @ a[1:]))
        cuts = sorted({0.0, math.pi, *self.breakpoints()})
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            val, _ = integrate.quad(lambda t: float(self.evaluate(t)) ** 2, lo, hi, limit=200)
            total += val
        return math.sqrt(total)

    def to_line(self) -> str:
        """Catalog representation (without the entry name)."""
        if self.kind == "constant":
            return f"constant c={self.c!r}"
        if self.kind == "indicator":
            return f"indicator x={self.x!r}"
        if self.kind == "cosine":
            return f"cosine k={self.k}"
        if self.kind == "arma_spectral_density":
            coeffs = ",".join(f"{j}:{c!r}" for j, c in self.filter.coeffs.items())
            return f"arma_spectral_density filter={coeffs} scale={self.scale!r}"
        if self.kind == "holder_member":
            return f"holder_member family={self.family} theta={self.theta!r}"
        return ("tabulated grid=" + ",".join(repr(g) for g in self.grid)
                + " values=" + ",".join(repr(v) for v in self.values))


@dataclass(frozen=True, eq=False)
class FourierCoeffs:
    """Cosine coefficients ``a_0..a_K`` of an index function."""

    a: np.ndarray
    analytic_tag: Optional[str] = None

    def __post_init__(self):
        arr = np.array(self.a, dtype=float).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def K(self) -> int:
        return self.a.size - 1

    def tail(self) -> np.ndarray:
        return self.a[1:]


@dataclass(frozen=True, eq=False)
class FunctionClass:
    """A finite, discretized class of index functions."""

    members: tuple
    kind: str = "custom"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ParameterError("a function class needs at least one member")

    def __len__(self):
        return len(self.members)

    def coeff_matrix(self, K: int) -> np.ndarray:
        return _coeff_matrix(self, int(K))

    def coarse_indices(self) -> np.ndarray:
        """Members of the half-resolution discretization used for refinement checks."""
        if "coarse" in self.metadata:
            return np.asarray(self.metadata["coarse"], dtype=int)
        return np.arange(0, len(self.members), 2)

    @classmethod
    def indicator_family(cls, thetas) -> "FunctionClass":
        thetas = np.asarray(thetas, dtype=float)
        return cls(tuple(FunctionSpec.indicator(t) for t in thetas), "indicator-VC",
                   {"index_grid": "indicator endpoints", "size": int(thetas.size),
                    "min": float(thetas.min()), "max": float(thetas.max())})

    @classmethod
    def holder_family(cls, family: str, thetas, index_set: str = "custom") -> "FunctionClass":
        thetas = np.asarray(thetas, dtype=float)
        meta = {"family": family, "exponent": _HOLDER_FAMILIES[family],
                "index_set": index_set, "size": int(thetas.size)}
        if index_set == "harmonic":
            # halving resolution = truncating {1/m} at half the largest m
            m_max = int(round(1.0 / thetas[thetas > 0].min()))
            meta["coarse"] = np.flatnonzero((thetas == 0) | (thetas >= 1.0 / (m_max // 2))).tolist()
        return cls(tuple(FunctionSpec.holder_member(family, t) for t in thetas), "holder", meta)

    @classmethod
    def harmonic_holder_family(cls, family: str, size: int) -> "FunctionClass":
        """Hölder family indexed by ``{0} U {1/m}``: index covering exponent 1/2."""
        return cls.holder_family(family, harmonic_index_set(size), "harmonic")

    @classmethod
    def ma1_density_family(cls, thetas) -> "FunctionClass":
        thetas = np.asarray(thetas, dtype=float)
        members = tuple(FunctionSpec.arma_spectral_density(LinearFilter.ma1(t)) for t in thetas)
        return cls(members, "custom", {"family": "ma1 spectral densities", "size": int(thetas.size)})


def harmonic_index_set(size: int) -> np.ndarray:
    """``{0} U {1/m : m = 1..size-1}``, a compact set whose covering numbers grow like ``eps**-1/2``."""
    if size < 2:
        raise ParameterError("harmonic index set needs size >= 2")
    return np.concatenate(([0.0], 1.0 / np.arange(size - 1, 0, -1)))


# ---------------------------------------------------------------------------
# Fourier coefficients


def _piecewise_linear_coeffs(grid, values, K: int) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    # constant extensions to [0, g0] and [gN, pi]
    if g[0] > 0.0:
        g = np.concatenate(([0.0], g))
        v = np.concatenate(([v[0]], v))
    if g[-1] < math.pi:
        g = np.concatenate((g, [math.pi]))
        v = np.concatenate((v, [v[-1]]))
    x0, x1 = g[:-1], g[1:]
    slope = (v[1:] - v[:-1]) / (x1 - x0)
    icpt = v[:-1] - slope * x0
    out = np.empty(K + 1)
    out[0] = float(np.sum(icpt * (x1 - x0) + slope * (x1 ** 2 - x0 ** 2) / 2))
    h = np.arange(1, K + 1)[:, None]

    def prim(x):
        return (icpt + slope * x) * np.sin(h * x) / h + slope * np.cos(h * x) / h ** 2

    out[1:] = (prim(x1) - prim(x0)).sum(axis=1)
    return out


def fourier_coeffs(f: FunctionSpec, K: int) -> FourierCoeffs:
    """``a_0..a_K`` of ``f``; every built-in variant has a closed form."""
    if K < 1:
        raise ParameterError(f"truncation K must be >= 1, got {K!r}")
    h = np.arange(K + 1)
    a = np.zeros(K + 1)
    if f.kind == "constant":
        a[0] = f.c * math.pi
        tag = "constant"
    elif f.kind == "indicator":
        a[0] = f.x
        a[1:] = np.sin(f.x * h[1:]) / h[1:]
        tag = "indicator: sin(xh)/h"
    elif f.kind == "cosine":
        if f.k == 0:
            a[0] = math.pi
        elif f.k <= K:
            a[f.k] = math.pi / 2
        tag = "cosine"
    elif f.kind == "arma_spectral_density":
        cov = f.filter.autocov()
        m = min(cov.size, K + 1)
        a[:m] = f.scale ** 2 / 2 * cov[:m]
        tag = "finite filter: scale^2 c_h / 2"
    elif f.kind == "holder_member":
        top = min(K, HOLDER_BANDWIDTH)
        a[1:top + 1] = f.theta ** _HOLDER_FAMILIES[f.family]
        tag = f"holder {f.family}: theta^b on 1..{HOLDER_BANDWIDTH}"
    elif f.kind == "tabulated":
        a = _piecewise_linear_coeffs(f.grid, f.values, K)
        tag = "piecewise linear: exact segment integrals"
    else:
        raise ParameterError(f"unknown function kind {f.kind!r}")
    return FourierCoeffs(a, tag)


def fourier_coeffs_quadrature(f, K: int, tol: float = 1e-10, breakpoints=()) -> FourierCoeffs:
    """Adaptive-quadrature coefficients; raises :class:`QuadratureError` above ``tol``.

    Each smooth piece between breakpoints is integrated with QUADPACK's
    Fourier-weight rule.
    """
    if hasattr(f, "evaluate"):
        breakpoints = tuple(breakpoints) + tuple(f.breakpoints())
        fn = f.evaluate
    else:
        fn = f
    cuts = sorted({0.0, math.pi, *(b for b in breakpoints if 0.0 < b < math.pi)})
    out = np.zeros(K + 1)
    for h in range(K + 1):
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            g = lambda t: float(fn(t))  # noqa: E731
            if h == 0:
                val, err = integrate.quad(g, lo, hi, epsabs=tol / 4, epsrel=0, limit=400)
            else:
                val, err = integrate.quad(g, lo, hi, weight="cos", wvar=h,
                                          epsabs=tol / 4, epsrel=0, limit=400)
            if not err <= tol:
                raise QuadratureError(
                    f"coefficient h={h} on [{lo:.6g}, {hi:.6g}]: error estimate {err:.3g} > {tol:.3g}")
            total += val
        out[h] = total
    return FourierCoeffs(out, None)


def modulated_coeffs(a: FourierCoeffs, filt: LinearFilter) -> FourierCoeffs:
    """Coefficients of ``f |psi(exp(-i .))|^2`` from those of ``f``.

    Uses ``a_m(f|psi|^2) = c_0 a_m + sum_h c_h (a_{m+h} + a_{|m-h|})`` with the
    filter autocovariances ``c_h``; the result is exact through lag ``K - H``.
    """
    cov = filt.autocov()
    H = cov.size - 1
    K = a.K - H
    if K < 1:
        raise TruncationError(f"need more than {H + 1} coefficients to modulate by this filter")
    src = a.a
    m = np.arange(K + 1)
    out = cov[0] * src[: K + 1]
    for h in range(1, H + 1):
        out = out + cov[h] * (src[m + h] + src[np.abs(m - h)])
    return FourierCoeffs(out, None)


# ---------------------------------------------------------------------------
# Summability diagnostics


@dataclass(frozen=True)
class SummabilityResult:
    """Truncated series value with the dyadic-block divergence heuristic."""

    value: float
    diverging: bool
    block_sums: tuple
    K: int

    def __iter__(self):
        return iter((self.value, self.diverging))

    def to_dict(self) -> dict:
        return {"value": self.value, "diverging": self.diverging,
                "block_sums": list(self.block_sums), "K": self.K}


def _sequence(a) -> np.ndarray:
    if isinstance(a, FourierCoeffs):
        return a.a[1:]
    return np.asarray(a, dtype=float).ravel()


def _dyadic_blocks(terms: np.ndarray) -> np.ndarray:
    # terms[i] belongs to index k = i + 1; block m covers 2^m <= k < 2^{m+1}, complete blocks only
    K = terms.size
    nblocks = int(math.floor(math.log2(K + 1))) if K > 0 else 0
    return np.array([terms[(1 << m) - 1:(1 << (m + 1)) - 1].sum() for m in range(nblocks)])


def _diverging(blocks: np.ndarray) -> bool:
    """Three consecutive dyadic blocks that fail to shrink by ``DECAY_RATIO`` flag divergence."""
    run = 0
    for prev, cur in zip(blocks[:-1], blocks[1:]):
        if cur > 0.0 and cur > DECAY_RATIO * prev:
            run += 1
            if run >= RUN_LENGTH:
                return True
        else:
            run = 0
    return False


def _summability(terms: np.ndarray, seq: np.ndarray) -> SummabilityResult:
    cleaned = np.where(np.abs(seq) <= ZERO_TOL, 0.0, terms)
    blocks = _dyadic_blocks(cleaned)
    return SummabilityResult(float(terms.sum()), _diverging(blocks), tuple(float(b) for b in blocks), seq.size)


def ell_alpha_norm(a, alpha: float) -> SummabilityResult:
    """``sum_{k>=1} |a_k|^alpha`` up to the truncation, with divergence flag."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha!r}")
    seq = _sequence(a)
    return _summability(np.abs(seq) ** alpha, seq)


def ell_alpha_tail_mass(a, alpha: float) -> float:
    """Estimate of ``sum_{k>K} |a_k|^alpha`` from the last complete dyadic blocks.

    Extrapolates the last block ratio geometrically; ``inf`` when the blocks
    do not decay.
    """
    seq = _sequence(a)
    terms = np.where(np.abs(seq) <= ZERO_TOL, 0.0, np.abs(seq) ** alpha)
    blocks = _dyadic_blocks(terms)
    if blocks.size == 0:
        return math.inf
    if blocks[-1] == 0.0:
        return 0.0 if terms[(1 << (blocks.size - 1)) - 1:].sum() == 0.0 else math.inf
    if blocks.size < 2 or blocks[-2] == 0.0:
        return math.inf
    q = blocks[-1] / blocks[-2]
    if q >= 1.0:
        return math.inf
    # remaining partial block plus geometric continuation
    done = (1 << blocks.size) - 1
    rest = terms[done:].sum()
    return float(max(blocks[-1] * q / (1 - q) - rest, 0.0))


def _concave_on_grid(alpha: float, b: float, x: np.ndarray) -> bool:
    hx = x ** alpha * np.log(b + 1.0 / x)
    s = np.diff(hx) / np.diff(x)
    return bool(np.all(np.diff(s) <= 1e-12 * np.abs(s[:-1])))


@functools.lru_cache(maxsize=None)
def concavity_threshold(alpha: float) -> float:
    """Smallest ``b`` in ``[e, e^{4/alpha}]`` making ``h`` concave on the check grid (bisection)."""
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError(f"concavity threshold is defined for alpha in (0, 1), got {alpha!r}")
    x = np.logspace(-8, 8, 10_000)
    lo, hi = math.e, math.exp(4.0 / alpha)
    if _concave_on_grid(alpha, lo, x):
        return lo
    if not _concave_on_grid(alpha, hi, x):
        raise ConfigurationError(f"h is not concave on the check grid even at b = e^(4/alpha) for alpha={alpha}")
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if _concave_on_grid(alpha, mid, x):
            hi = mid
        else:
            lo = mid
    return hi


def concavity_b(alpha: float) -> float:
    """The ``b`` used by ``h``: ``1.05 * b_min`` for ``alpha < 1``, ``e`` otherwise."""
    if 0.0 < alpha < 1.0:
        return 1.05 * concavity_threshold(alpha)
    return math.e


def h_function(x, alpha: float, b: Optional[float] = None):
    """``h(x) = |x|^alpha log(b + 1/|x|)``, ``h(0) = 0``.

    ``b`` defaults to :func:`concavity_b`; an explicit ``b`` below the verified
    threshold raises :class:`ConfigurationError`.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"h is defined here for alpha in (0, 1), got {alpha!r}")
    if b is None:
        b = concavity_b(alpha)
    elif b < concavity_threshold(alpha):
        raise ConfigurationError(
            f"b={b!r} is below the concavity threshold {concavity_threshold(alpha):.6g} for alpha={alpha}")
    return _h(x, alpha, b)


def _h(x, alpha: float, b: float):
    ax = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        out = np.where(ax > 0, ax ** alpha * np.log(b + 1.0 / np.where(ax > 0, ax, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def ell_alpha_log_norm(a, alpha: float) -> SummabilityResult:
    """``sum_k h(a_k)``; finite exactly on the space l^alpha log l."""
    if not (0.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")
    seq = _sequence(a)
    return _summability(_h(seq, alpha, concavity_b(alpha)), seq)


def metric_d(a, b_seq, alpha: float) -> SummabilityResult:
    """``d(a, b) = sum_k h(a_k - b_k)`` over the common (zero-extended) truncation."""
    if not (0.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")
    s1, s2 = _sequence(a), _sequence(b_seq)
    K = max(s1.size, s2.size)
    diff = np.zeros(K)
    diff[: s1.size] += s1
    diff[: s2.size] -= s2
    return _summability(_h(diff, alpha, concavity_b(alpha)), diff)


def _coeff_matrix(cls: FunctionClass, K: int) -> np.ndarray:
    return np.vstack([(m if isinstance(m, FourierCoeffs) else fourier_coeffs(m, K)).a[: K + 1]
                      for m in cls.members])


def condition_compact_family(cls: FunctionClass, alpha: float, K: int) -> dict:
    """``sum_{k<=K} sup_members h(a_k)`` with its dyadic decay profile and verdict."""
    mat = _coeff_matrix(cls, K)[:, 1:]
    sup_h = _h(mat, alpha, concavity_b(alpha)).max(axis=0)
    seq = np.abs(mat).max(axis=0)
    res = _summability(sup_h, seq)
    return {
        "value": res.value,
        "verdict": "diverging" if res.diverging else "plausibly-finite",
        "block_sums": list(res.block_sums),
        "K": K,
        "alpha": alpha,
        "b": concavity_b(alpha),
        "members": len(cls),
    }


# ---------------------------------------------------------------------------
# Pseudo-metrics and covering numbers


def _coeffs_to(f, top: int) -> np.ndarray:
    if isinstance(f, FourierCoeffs):
        if f.K < top:
            raise TruncationError(f"coefficients end at lag {f.K}, need {top}")
        return f.a
    return fourier_coeffs(f, top).a


def pseudo_metric_rho_k(f, g, k: int) -> float:
    """``max_{2^k <= j < 2^{k+1}} j |a_j(f) - a_j(g)|``."""
    if k < 0:
        raise ParameterError(f"k must be nonnegative, got {k!r}")
    lo, hi = 1 << k, (1 << (k + 1)) - 1
    af, ag = _coeffs_to(f, hi), _coeffs_to(g, hi)
    j = np.arange(lo, hi + 1)
    return float(np.max(j * np.abs(af[lo:hi + 1] - ag[lo:hi + 1])))


def rho_k_matrix(cls_or_matrix, k: int) -> np.ndarray:
    """Pairwise ``rho_k`` distances between all members."""
    lo, hi = 1 << k, (1 << (k + 1)) - 1
    mat = cls_or_matrix if isinstance(cls_or_matrix, np.ndarray) else _coeff_matrix(cls_or_matrix, hi)
    if mat.shape[1] <= hi:
        raise TruncationError(f"coefficient matrix ends at lag {mat.shape[1] - 1}, need {hi}")
    block = mat[:, lo:hi + 1] * np.arange(lo, hi + 1)
    m = block.shape[0]
    out = np.zeros((m, m))
    step = max(1, 2_000_000 // max(1, m * block.shape[1]))
    for start in range(0, m, step):
        stop = min(m, start + step)
        out[start:stop] = np.abs(block[start:stop, None, :] - block[None, :, :]).max(axis=2)
    return out


def greedy_cover(dist: np.ndarray, eps: float) -> list[int]:
    """Greedy set cover of all members by open ``eps``-balls centred at members."""
    within = (dist < eps).astype(np.float32)
    uncovered = np.ones(dist.shape[0], dtype=np.float32)
    centers = []
    while uncovered.any():
        gain = within @ uncovered
        best = int(np.argmax(gain))
        centers.append(best)
        uncovered[within[best] > 0] = 0.0
    return centers


def covering_number(cls: FunctionClass, epsilon: float, k: int, dist: Optional[np.ndarray] = None) -> int:
    """Size of a greedy ``epsilon``-cover of the class in ``rho_k``.

    This is the size of a valid cover, hence an upper bound on the minimal
    covering number; it is not claimed to be minimal.
    """
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be > 0, got {epsilon!r}")
    if dist is None:
        dist = rho_k_matrix(cls, k)
    return len(greedy_cover(dist, epsilon))


def entropy_condition_fit(cls: FunctionClass, beta_candidate: float, eps_grid: Sequence[float],
                          k_grid: Sequence[int], alpha: Optional[float] = None) -> dict:
    """Regress ``log N(eps, class, rho_k)`` on ``log(2^k / eps)`` over the grids.

    A point enters the fit only when the cover is resolved by the
    discretization: ``N > 1`` and the cover of the coarsened class (see
    :meth:`FunctionClass.coarse_indices`) keeps at least
    ``1 - REFINEMENT_TOL`` of the count.  Every point stays listed in
    ``points`` with its ``used`` flag.
    """
    if not beta_candidate > 0:
        raise ParameterError(f"beta_candidate must be > 0, got {beta_candidate!r}")
    kmax = max(k_grid)
    mat = _coeff_matrix(cls, (1 << (kmax + 1)) - 1)
    coarse = cls.coarse_indices()
    size = len(cls)
    points = []
    for k in k_grid:
        dist = rho_k_matrix(mat, k)
        dist_coarse = dist[np.ix_(coarse, coarse)]
        for eps in eps_grid:
            n_cov = len(greedy_cover(dist, eps))
            n_coarse = len(greedy_cover(dist_coarse, eps))
            points.append({"k": int(k), "eps": float(eps), "N": n_cov, "N_coarse": n_coarse,
                           "used": bool(n_cov > 1 and n_coarse >= (1 - REFINEMENT_TOL) * n_cov)})
    used = [p for p in points if p["used"]]
    const = max(p["N"] / (1.0 + (2.0 ** p["k"] / p["eps"]) ** beta_candidate) for p in points)
    if all(p["N"] == 1 for p in points):
        slope, intercept = 0.0, 0.0
    elif len(used) < 2:
        slope, intercept = math.nan, math.nan
    else:
        xs = np.log([2.0 ** p["k"] / p["eps"] for p in used])
        ys = np.log([p["N"] for p in used])
        slope, intercept = (float(v) for v in np.polyfit(xs, ys, 1))
    holds = bool(slope <= beta_candidate) if math.isfinite(slope) else False
    if alpha is not None:
        holds = holds and beta_candidate < alpha
    return {
        "slope": slope,
        "intercept": intercept,
        "empirical_const": float(const),
        "beta_candidate": beta_candidate,
        "alpha": alpha,
        "condition_holds": holds,
        "points": points,
        "n_used": len(used),
        "class_size": size,
        "class_kind": cls.kind,
        "class_metadata": {k: v for k, v in cls.metadata.items() if k != "coarse"},
    }


# ---------------------------------------------------------------------------
# Filter summability


def _filter_weight(j, alpha: float, tau: float):
    j = np.abs(np.asarray(j, dtype=float))
    expo = (4.0 - alpha) / (2.0 * alpha) + tau
    with np.errstate(divide="ignore"):
        logp = np.where(j > 1, np.log(np.maximum(j, 1.0)), 0.0)
    return j ** (2.0 / alpha) * (1.0 + logp) ** expo


def filter_condition_check(filt: LinearFilter, alpha: float, tau: float) -> dict:
    """Weighted filter sum ``sum_j |psi_j| |j|^{2/alpha} (1 + log+|j|)^{(4-alpha)/(2 alpha) + tau}``.

    The stored window always gives a finite sum.  For a tagged infinite
    extension the verdict refers to the full series, and the tail beyond the
    window is estimated analytically.
    """
    if not (0.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")
    if not tau > 0:
        raise ParameterError(f"tau must be > 0, got {tau!r}")
    weighted = float(np.abs(filt.values) @ _filter_weight(filt.lags, alpha, tau))
    report = {"alpha": alpha, "tau": tau, "weighted_sum": weighted, "tail": None,
              "tail_estimate": 0.0, "tail_mass_dropped": 0.0, "verdict": "satisfied (finite support)"}
    if filt.tail is None:
        return report
    kind, par = filt.tail
    radius = filt.truncation if filt.truncation is not None else max(filt.pos_radius, filt.neg_radius)
    sides = 2 if filt.neg_radius > 0 else 1
    expo = (4.0 - alpha) / (2.0 * alpha) + tau
    report["tail"] = [kind, par]
    if kind == "geometric":
        r = abs(par)
        j = np.arange(radius + 1, radius + 1 + 20_000)
        terms = r ** j * _filter_weight(j, alpha, tau)
        report["tail_estimate"] = sides * float(terms.sum())
        report["tail_mass_dropped"] = sides * r ** (radius + 1) / (1 - r)
        report["verdict"] = "satisfied"
    else:
        p = par
        gap = p - 2.0 / alpha
        if gap > 1.0:
            val, _ = integrate.quad(lambda u: math.exp((2.0 / alpha - p + 1.0) * u) * (1.0 + u) ** expo,
                                    math.log(radius + 0.5), np.inf, limit=200)
            report["tail_estimate"] = sides * val
            report["verdict"] = "satisfied"
        else:
            report["tail_estimate"] = math.inf
            report["verdict"] = "violated"
        report["tail_mass_dropped"] = sides * float(special.zeta(p, radius + 1)) if p > 1 else math.inf
    return report


# ---------------------------------------------------------------------------
# Catalog files and exports


def parse_filter(spec) -> LinearFilter:
    """Filter from a short string or mapping.

    Strings: ``identity``, ``ma1:THETA``, ``scale:C``, ``geometric:R:RADIUS``,
    ``geometric2:R:RADIUS`` (two-sided), ``power:P:RADIUS``, or explicit
    ``LAG:COEF,LAG:COEF,...``.  Mappings carry ``coeffs`` and optionally
    ``tail`` and ``truncation``.
    """
    if isinstance(spec, LinearFilter):
        return spec
    if isinstance(spec, dict):
        coeffs = {int(j): float(c) for j, c in dict(spec["coeffs"]).items()}
        tail = tuple(spec["tail"]) if spec.get("tail") else None
        return LinearFilter(coeffs, tail=tail, truncation=spec.get("truncation"))
    text = str(spec).strip()
    head, _, rest = text.partition(":")
    try:
        if head == "identity":
            return LinearFilter.identity()
        if head == "ma1":
            return LinearFilter.ma1(float(rest))
        if head == "scale":
            return LinearFilter({0: float(rest)})
        if head in ("geometric", "geometric2"):
            r, radius = rest.split(":")
            return LinearFilter.geometric(float(r), int(radius), two_sided=head == "geometric2")
        if head == "power":
            p, radius = rest.split(":")
            return LinearFilter.power(float(p), int(radius))
        pairs = [item.split(":") for item in text.split(",")]
        return LinearFilter({int(j): float(c) for j, c in pairs})
    except (ValueError, TypeError) as exc:
        raise CatalogError(f"cannot parse filter spec {spec!r}: {exc}") from exc


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def parse_function_line(variant: str, params: dict, name: str = "") -> FunctionSpec:
    try:
        if variant == "constant":
            return FunctionSpec.constant(float(params.get("c", 1.0)), name=name)
        if variant == "indicator":
            return FunctionSpec.indicator(float(params["x"]), name=name)
        if variant == "cosine":
            return FunctionSpec.cosine(int(params["k"]), name=name)
        if variant == "arma_spectral_density":
            return FunctionSpec.arma_spectral_density(parse_filter(params["filter"]),
                                                      float(params.get("scale", 1.0)), name=name)
        if variant == "holder_member":
            return FunctionSpec.holder_member(params["family"], float(params["theta"]), name=name)
        if variant == "tabulated":
            return FunctionSpec.tabulated(_floats(params["grid"]), _floats(params["values"]), name=name)
    except KeyError as exc:
        raise CatalogError(f"{variant}: missing parameter {exc.args[0]!r}") from exc
    raise CatalogError(f"unknown function variant {variant!r}")


def load_catalog(path) -> dict[str, FunctionSpec]:
    """Read a catalog: one ``NAME VARIANT key=value ...`` entry per line, ``#`` comments."""
    out: dict[str, FunctionSpec] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = shlex.split(line)
        if len(toks) < 2:
            raise CatalogError(f"{path}:{lineno}: expected NAME VARIANT [key=value ...]")
        name, variant, *kv = toks
        params = {}
        for item in kv:
            key, sep, val = item.partition("=")
            if not sep:
                raise CatalogError(f"{path}:{lineno}: malformed parameter {item!r}")
            params[key] = val
        if name in out:
            raise CatalogError(f"{path}:{lineno}: duplicate catalog entry {name!r}")
        try:
            out[name] = parse_function_line(variant, params, name=name)
        except (ParameterError, CatalogError) as exc:
            raise CatalogError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_coeffs_csv(coeffs: FourierCoeffs, csv_path) -> Path:
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "a_h"])
        for h, val in enumerate(coeffs.a):
            w.writerow([h, repr(float(val))])
    return csv_path
