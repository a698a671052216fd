"""Command-line experiment runner.

One YAML file describes one experiment.  ``run`` writes a JSON report, CSV
tables and a manifest of SHA-256 hashes; reruns of the same config are
byte-identical.  Failures exit with 2 (config parse), 3 (precondition) or 4
(numerical) and emit a JSON error record on stderr and as ``error.json``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .convergence_lab import (
    ExperimentReport,
    QuadraticFormSpec,
    _clean,
    autocov_scaling_experiment,
    fidi_experiment,
    quadratic_form_tail_check,
    remainder_negligibility_experiment,
)
from .function_classes import (
    CatalogError,
    ConfigurationError,
    FunctionClass,
    FunctionSpec,
    QuadratureError,
    TruncationError,
    entropy_condition_fit,
    ell_alpha_log_norm,
    ell_alpha_norm,
    filter_condition_check,
    fourier_coeffs,
    load_catalog,
    parse_filter,
    parse_function_line,
    write_coeffs_csv,
)
from .limit_process import LimitScales, calibrate_scales
from .spectral import FrequencyError
from .stable_rng import ParameterError, RngStream
from .timeseries import AlignmentError, DegenerateError, simulate_linear, write_path_csv

__all__ = ["ExperimentConfig", "ConfigError", "PreconditionError", "load_config", "main"]

KINDS = ("fidi", "autocov-scaling", "qform-tails", "remainder", "covering", "coeffs", "simulate")
EXIT_PARSE, EXIT_PRECONDITION, EXIT_NUMERICAL = 2, 3, 4
_CALIBRATION_STREAM = 2**63 + 2


class ConfigError(ValueError):
    """The configuration file cannot be read or has the wrong shape."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class PreconditionError(ValueError):
    """A configuration value violates a precondition of the experiment."""

    def __init__(self, message: str, field: Optional[str] = None, code: str = "precondition"):
        super().__init__(message)
        self.field = field
        self.code = code


# ---------------------------------------------------------------------------
# Configuration


def _typed(raw: dict, key: str, kind, default=None, required: bool = False, prefix: str = ""):
    name = prefix + key
    if key not in raw or raw[key] is None:
        if required:
            raise ConfigError(f"missing required field {name!r}", name)
        return default
    val = raw[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"field {name!r} must be a number", name)
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"field {name!r} must be an integer", name)
        return int(val)
    if kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(f"field {name!r} must be true or false", name)
        return val
    if kind is list:
        if not isinstance(val, list):
            raise ConfigError(f"field {name!r} must be a list", name)
        return val
    if kind is dict:
        if not isinstance(val, dict):
            raise ConfigError(f"field {name!r} must be a mapping", name)
        return val
    if kind is str:
        if not isinstance(val, str):
            raise ConfigError(f"field {name!r} must be a string", name)
        return val
    return val


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    kind: str
    raw: dict
    base_dir: Path
    alpha: Optional[float] = None
    seed: int = 0
    replicates: int = 1
    n_grid: list = field(default_factory=list)
    filter_spec: Any = None
    catalog_path: Optional[Path] = None
    scales_mode: str = "configured"
    out_dir: Optional[Path] = None
    catalog: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return _clean(self.raw)


def load_config(path, seed_override: Optional[int] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", "config") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}", "config") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level", "config")
    if seed_override is not None:
        raw = dict(raw, seed=int(seed_override))
    return _build_config(raw, path.parent)


def _build_config(raw: dict, base_dir: Path) -> ExperimentConfig:
    kind = _typed(raw, "kind", str, required=True)
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}", "kind")
    cfg = ExperimentConfig(kind=kind, raw=raw, base_dir=base_dir)
    cfg.seed = _typed(raw, "seed", int, 0)
    if not (0 <= cfg.seed < 2**63):
        raise PreconditionError("seed must be a nonnegative 63-bit integer", "seed")
    if kind not in ("coeffs", "covering") or "alpha" in raw:
        cfg.alpha = _typed(raw, "alpha", float, required=kind not in ("coeffs", "covering"))
        if cfg.alpha is not None and not (0.0 < cfg.alpha < 2.0):
            raise PreconditionError(f"alpha must lie in (0, 2), got {cfg.alpha!r}", "alpha")
    cfg.replicates = _typed(raw, "replicates", int, 1)
    if cfg.replicates < 1:
        raise PreconditionError("replicates must be >= 1", "replicates")
    if kind in ("fidi", "autocov-scaling", "remainder"):
        grid = _typed(raw, "n_grid", list, [2**k for k in range(8, 15)])
        if not all(isinstance(n, int) and not isinstance(n, bool) for n in grid):
            raise ConfigError("n_grid must list integers", "n_grid")
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise PreconditionError("n_grid must be nonempty and strictly increasing", "n_grid")
        if grid[0] < 2:
            raise PreconditionError("every n in n_grid must be >= 2", "n_grid")
        cfg.n_grid = grid
    cfg.filter_spec = raw.get("filter", "identity")
    scales = _typed(raw, "scales", dict, {})
    cfg.scales_mode = _typed(scales, "mode", str, "configured", prefix="scales.")
    if cfg.scales_mode not in ("configured", "calibrated"):
        raise ConfigError("scales.mode must be 'configured' or 'calibrated'", "scales.mode")
    cat = _typed(raw, "catalog", str, None)
    if cat is not None:
        cfg.catalog_path = (base_dir / cat).resolve()
        try:
            cfg.catalog = load_catalog(cfg.catalog_path)
        except OSError as exc:
            raise PreconditionError(f"cannot read catalog: {exc}", "catalog", "unresolved reference") from exc
        except CatalogError as exc:
            raise ConfigError(str(exc), "catalog") from exc
    out = _typed(raw, "out_dir", str, None)
    cfg.out_dir = (base_dir / out) if out else None
    return cfg


# ---------------------------------------------------------------------------
# Resolving references


def _function(cfg: ExperimentConfig, entry, field_name: str) -> FunctionSpec:
    """A catalog name, an inline ``VARIANT key=value`` line, or a mapping with ``variant``."""
    if isinstance(entry, dict):
        if "ref" in entry:
            return _ref(cfg, entry["ref"], field_name)
        params = {k: str(v) for k, v in entry.items() if k != "variant"}
        if "variant" not in entry:
            raise ConfigError(f"{field_name}: a function mapping needs 'variant' or 'ref'", field_name)
        return _parse_inline(entry["variant"], params, field_name)
    if not isinstance(entry, str):
        raise ConfigError(f"{field_name}: expected a catalog name or function line", field_name)
    toks = shlex.split(entry)
    if len(toks) == 1 and "=" not in toks[0] and toks[0] not in ("constant",):
        return _ref(cfg, toks[0], field_name)
    params = {}
    for item in toks[1:]:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"{field_name}: malformed parameter {item!r}", field_name)
        params[key] = val
    return _parse_inline(toks[0], params, field_name)


def _ref(cfg: ExperimentConfig, name: str, field_name: str) -> FunctionSpec:
    if name not in cfg.catalog:
        where = str(cfg.catalog_path) if cfg.catalog_path else "no catalog configured"
        raise PreconditionError(f"{field_name}: unresolved reference {name!r} ({where})", field_name,
                                "unresolved reference")
    return cfg.catalog[name]


def _parse_inline(variant: str, params: dict, field_name: str) -> FunctionSpec:
    try:
        return parse_function_line(variant, params)
    except CatalogError as exc:
        raise ConfigError(f"{field_name}: {exc}", field_name) from exc


def _coefficients(cfg: ExperimentConfig, spec, field_name: str):
    """Lag coefficients ``a_1, a_2, ...`` or a FunctionSpec (coefficients taken as needed)."""
    if isinstance(spec, list):
        return np.asarray([float(v) for v in spec])
    if not isinstance(spec, dict):
        raise ConfigError(f"{field_name} must be a list or a mapping with 'type'", field_name)
    kind = _typed(spec, "type", str, required=True, prefix=field_name + ".")
    if kind == "geometric":
        r = _typed(spec, "r", float, required=True, prefix=field_name + ".")
        K = _typed(spec, "K", int, 64, prefix=field_name + ".")
        if not (0 < abs(r) < 1):
            raise PreconditionError("geometric coefficients need 0 < |r| < 1", field_name + ".r")
        return r ** np.arange(1, K + 1)
    if kind == "power":
        p = _typed(spec, "p", float, required=True, prefix=field_name + ".")
        K = _typed(spec, "K", int, 256, prefix=field_name + ".")
        return np.arange(1, K + 1, dtype=float) ** -p
    if kind == "unit":
        k = _typed(spec, "k", int, 1, prefix=field_name + ".")
        if k < 1:
            raise PreconditionError("unit coefficient index must be >= 1", field_name + ".k")
        out = np.zeros(k)
        out[-1] = 1.0
        return out
    if kind == "zero":
        return np.zeros(_typed(spec, "K", int, 1, prefix=field_name + "."))
    if kind == "explicit":
        return np.asarray([float(v) for v in _typed(spec, "values", list, required=True,
                                                     prefix=field_name + ".")])
    if kind == "function":
        return _function(cfg, spec.get("ref", spec.get("spec")), field_name + ".spec")
    raise ConfigError(f"unknown coefficient type {kind!r}", field_name + ".type")


def _filter(cfg: ExperimentConfig):
    try:
        return parse_filter(cfg.filter_spec)
    except (CatalogError, KeyError, TypeError) as exc:
        raise ConfigError(f"filter: {exc}", "filter") from exc


def _function_class(cfg: ExperimentConfig, spec, field_name: str) -> FunctionClass:
    if isinstance(spec, list):
        return FunctionClass(tuple(_function(cfg, e, field_name) for e in spec), "catalog")
    if not isinstance(spec, dict):
        raise ConfigError(f"{field_name} must be a list or a mapping", field_name)
    family = _typed(spec, "family", str, required=True, prefix=field_name + ".")
    size = _typed(spec, "size", int, 200, prefix=field_name + ".")
    if size < 2:
        raise PreconditionError("a function class needs size >= 2", field_name + ".size")
    if family == "indicator":
        return FunctionClass.indicator_family(np.linspace(math.pi / size, math.pi, size))
    if family == "holder":
        name = _typed(spec, "name", str, "dirichlet", prefix=field_name + ".")
        index_set = _typed(spec, "index_set", str, "harmonic", prefix=field_name + ".")
        try:
            if index_set == "harmonic":
                return FunctionClass.harmonic_holder_family(name, size)
            if index_set == "uniform":
                return FunctionClass.holder_family(name, np.linspace(0.0, 1.0, size), "uniform")
        except KeyError as exc:
            raise ConfigError(f"unknown Hölder family {name!r}", field_name + ".name") from exc
        raise ConfigError(f"unknown index set {index_set!r}", field_name + ".index_set")
    if family == "ma1":
        thetas = _typed(spec, "thetas", list, None, prefix=field_name + ".")
        thetas = np.linspace(-0.9, 0.9, size) if thetas is None else np.asarray(thetas, dtype=float)
        return FunctionClass.ma1_density_family(thetas)
    raise ConfigError(f"unknown class family {family!r}", field_name + ".family")


def _scales(cfg: ExperimentConfig) -> LimitScales:
    spec = cfg.raw.get("scales") or {}
    if cfg.scales_mode == "calibrated":
        n_ref = _typed(spec, "n_ref", int, 2**20, prefix="scales.")
        reps = _typed(spec, "replicates", int, 200, prefix="scales.")
        return calibrate_scales(cfg.alpha, RngStream(cfg.seed, _CALIBRATION_STREAM), n_ref, reps)
    s1 = _typed(spec, "sigma1", float, 1.0, prefix="scales.")
    s2 = _typed(spec, "sigma2", float, 1.0, prefix="scales.")
    if not (s1 > 0 and s2 > 0):
        raise PreconditionError("scales must be positive", "scales")
    return LimitScales(s1, s2, "configured")


# ---------------------------------------------------------------------------
# Diagnostics (validate) and execution (run)


def diagnose(cfg: ExperimentConfig) -> dict:
    """Precondition sweep without simulation."""
    diags: dict = {"kind": cfg.kind}
    warnings = []
    if cfg.kind == "fidi":
        a = _coefficients(cfg, cfg.raw.get("coefficients", {"type": "unit", "k": 1}), "coefficients")
        seq = fourier_coeffs(a, cfg.n_grid[-1] - 1).a[1:] if isinstance(a, FunctionSpec) else a
        la = ell_alpha_norm(seq, cfg.alpha)
        ll = ell_alpha_log_norm(seq, cfg.alpha)
        diags["ell_alpha"] = la.to_dict()
        diags["ell_alpha_log"] = ll.to_dict()
        if la.diverging:
            warnings.append("coefficients are not in ell^alpha: the limit series diverges "
                            "(non-membership); the statistics are not tight")
        elif ll.diverging:
            warnings.append("coefficients fail the ell^alpha log ell diagnostic")
    if cfg.kind in ("remainder", "simulate"):
        filt = _filter(cfg)
        tau = _typed(cfg.raw, "tau", float, 0.1)
        cond = filter_condition_check(filt, cfg.alpha, tau)
        diags["filter_condition"] = cond
        if cond["verdict"] == "violated":
            warnings.append("filter fails the summability condition")
    if cfg.kind == "remainder":
        members = _function_class(cfg, cfg.raw.get("class", []), "class").members
        norms = {m.label: m.l2_norm() for m in members}
        diags["l2_norms"] = norms
        if not all(math.isfinite(v) for v in norms.values()):
            raise PreconditionError("function class has an infinite L2 norm", "class")
    if cfg.kind == "covering":
        cls = _function_class(cfg, cfg.raw.get("class", {"family": "indicator"}), "class")
        diags["class_size"] = len(cls)
        diags["class_kind"] = cls.kind
    if cfg.kind == "coeffs":
        f = _function(cfg, cfg.raw.get("function", ""), "function")
        diags["l2_norm"] = f.l2_norm()
    if cfg.catalog:
        norms = {name: f.l2_norm() for name, f in sorted(cfg.catalog.items())}
        diags["catalog_l2_finite"] = all(math.isfinite(v) for v in norms.values())
    diags["warnings"] = warnings
    return diags


def _write_manifest(out_dir: Path, cfg: ExperimentConfig, files: list[Path]) -> Path:
    entries = {}
    for f in sorted(files, key=lambda p: p.name):
        entries[f.relative_to(out_dir).as_posix()] = hashlib.sha256(f.read_bytes()).hexdigest()
    manifest = {"kind": cfg.kind, "config": cfg.echo(), "seeds": [cfg.seed], "files": entries}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _dump(obj, path: Path) -> Path:
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")
    return path


def execute(cfg: ExperimentConfig, out_dir: Path, fmt: str = "csv", threads: int = 1) -> list[Path]:
    """Run the configured experiment and write its artifacts; returns the emitted files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    raw = cfg.raw
    report: Optional[ExperimentReport] = None
    if cfg.kind == "simulate":
        n = _typed(raw, "n", int, required=True)
        if n < 1:
            raise PreconditionError("n must be >= 1", "n")
        filt = _filter(cfg)
        x, _ = simulate_linear(n, filt, cfg.alpha, RngStream(cfg.seed))
        if fmt == "json":
            files.append(_dump({"values": x.values, **x.sidecar()}, out_dir / "path.json"))
        else:
            files.extend(write_path_csv(x, out_dir / "path.csv"))
    elif cfg.kind == "coeffs":
        f = _function(cfg, raw.get("function", ""), "function")
        K = _typed(raw, "K", int, required=True)
        if K < 0:
            raise PreconditionError("K must be >= 0", "K")
        coeffs = fourier_coeffs(f, K)
        if fmt == "json":
            files.append(_dump({"function": f.label, "K": K, "a": coeffs.a}, out_dir / "coeffs.json"))
        else:
            files.append(write_coeffs_csv(coeffs, out_dir / "coeffs.csv"))
    elif cfg.kind == "fidi":
        a = _coefficients(cfg, raw.get("coefficients", {"type": "unit", "k": 1}), "coefficients")
        report = fidi_experiment(cfg.alpha, a, cfg.n_grid, cfg.replicates, cfg.seed, scales=_scales(cfg),
                                 limit_draws=_typed(raw, "limit_draws", int, None),
                                 top_fraction=_typed(raw, "top_fraction", float, 0.1), threads=threads,
                                 keep_samples=_typed(raw, "dump_samples", bool, False))
    elif cfg.kind == "autocov-scaling":
        lags = _typed(raw, "lags", list, [1, 2])
        report = autocov_scaling_experiment(cfg.alpha, cfg.n_grid, cfg.replicates, cfg.seed, lags,
                                            top_fraction=_typed(raw, "top_fraction", float, 0.1),
                                            threads=threads,
                                            keep_samples=_typed(raw, "dump_samples", bool, False))
    elif cfg.kind == "qform-tails":
        report = _run_qforms(cfg, threads)
    elif cfg.kind == "remainder":
        members = _function_class(cfg, raw.get("class", []), "class").members
        report = remainder_negligibility_experiment(cfg.alpha, _filter(cfg), members, cfg.n_grid,
                                                    cfg.replicates, cfg.seed,
                                                    tau=_typed(raw, "tau", float, 0.1), threads=threads)
    elif cfg.kind == "covering":
        cls = _function_class(cfg, raw.get("class", {"family": "indicator"}), "class")
        eps = [float(e) for e in _typed(raw, "eps_grid", list, [0.02 * 2 ** (i / 2) for i in range(9)])]
        ks = [int(k) for k in _typed(raw, "k_grid", list, [2, 3, 4, 5, 6])]
        beta = _typed(raw, "beta_candidate", float, 1.0)
        fit = entropy_condition_fit(cls, beta, eps, ks, cfg.alpha)
        points = fit.pop("points")
        for p in points:
            p.update(replicates=1, seed=cfg.seed)
        report = ExperimentReport("covering", cfg.echo(), points, 1, [cfg.seed], fit, {})
    if report is not None:
        report.config = {"requested": cfg.echo(), "resolved": report.config}
        files.append(report.write_json(out_dir / "report.json"))
        if fmt == "csv":
            files.append(report.write_summary_csv(out_dir / "summary.csv"))
            if report.samples:
                files.append(report.write_samples_csv(out_dir / "samples.csv"))
    files.append(_write_manifest(out_dir, cfg, files))
    return files


def _run_qforms(cfg: ExperimentConfig, threads: int) -> ExperimentReport:
    raw = cfg.raw
    n = _typed(raw, "n", int, 64)
    if n < 2:
        raise PreconditionError("n must be >= 2", "n")
    xs = _typed(raw, "x_grid", list, [1, 4, 16, 64])
    specs = _typed(raw, "specs", list, [{"coefficients": {"type": "unit", "k": 1}}])
    per_n, envelopes, reports = [], {}, []
    for i, s in enumerate(specs):
        if not isinstance(s, dict):
            raise ConfigError("each qform spec must be a mapping", f"specs[{i}]")
        a = _coefficients(cfg, s.get("coefficients"), f"specs[{i}].coefficients")
        if isinstance(a, FunctionSpec):
            a = fourier_coeffs(a, n - 1).a[1:]
        label = str(s.get("label", f"spec{i}"))
        spec = QuadraticFormSpec.toeplitz(a, n, bool(s.get("cauchy", False)), label)
        rep = quadratic_form_tail_check(spec, cfg.alpha, xs, cfg.replicates, cfg.seed, threads)
        reports.append(rep)
        for row in rep.per_n:
            per_n.append(dict(row, spec=label))
        envelopes[label] = rep.verdicts["envelope"]
    live = [v for v in envelopes.values() if v]
    verdicts = {"envelopes": envelopes, "per_spec": {r.config["spec"]["label"]: r.verdicts for r in reports},
                "envelope_spread": (max(live) / min(live)) if live else None}
    config = {"alpha": cfg.alpha, "n": n, "x_grid": xs, "replicates": cfg.replicates, "seed": cfg.seed}
    return ExperimentReport("qform-tails", config, per_n, cfg.replicates, [cfg.seed], verdicts, {})


# ---------------------------------------------------------------------------
# Entry point


def _error_record(exc: BaseException, code: int) -> dict:
    return {
        "status": "error",
        "exit_code": code,
        "error": getattr(exc, "code", None) if isinstance(exc, PreconditionError) else type(exc).__name__,
        "type": type(exc).__name__,
        "field": getattr(exc, "field", None),
        "message": str(exc),
    }


def _classify(exc: BaseException) -> Optional[int]:
    if isinstance(exc, ConfigError):
        return EXIT_PARSE
    if isinstance(exc, (PreconditionError, ParameterError, ConfigurationError, TruncationError,
                        AlignmentError, FrequencyError, CatalogError)):
        return EXIT_PRECONDITION
    if isinstance(exc, (ArithmeticError, QuadratureError, DegenerateError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    return None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stablespec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment YAML file")
        p.add_argument("--out-dir", help="output directory (default: config out_dir or ./out)")
        p.add_argument("--seed-override", type=int, help="replace the configured seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for replicate chunks")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="data output format")

    common(sub.add_parser("run", help="run an experiment config"))
    p = sub.add_parser("validate", help="check a config without simulating")
    p.add_argument("--config", required=True)
    p.add_argument("--seed-override", type=int)

    p = sub.add_parser("coeffs", help="Fourier coefficients of one function")
    common(p, config_required=False)
    p.add_argument("--function", help="inline function line, e.g. 'indicator x=1'")
    p.add_argument("--K", type=int, help="highest lag")

    p = sub.add_parser("simulate", help="simulate one linear-process path")
    common(p, config_required=False)
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--filter", default=None, help="filter spec, e.g. 'ma1:0.5'")
    p.add_argument("--seed", type=int, default=None)
    return parser


def _inline_config(args) -> ExperimentConfig:
    if args.command == "coeffs":
        if args.function is None or args.K is None:
            raise ConfigError("coeffs needs --config or both --function and --K", "function")
        raw = {"kind": "coeffs", "function": args.function, "K": args.K}
    else:
        if args.n is None or args.alpha is None:
            raise ConfigError("simulate needs --config or both --n and --alpha", "n")
        raw = {"kind": "simulate", "n": args.n, "alpha": args.alpha,
               "filter": args.filter or "identity", "seed": args.seed or 0}
    if args.seed_override is not None:
        raw["seed"] = args.seed_override
    return _build_config(raw, Path.cwd())


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out_dir: Optional[Path] = Path(args.out_dir) if getattr(args, "out_dir", None) else None
    try:
        if args.command == "validate":
            cfg = load_config(args.config, args.seed_override)
            report = {"status": "ok", "config": cfg.echo(), "diagnostics": diagnose(cfg)}
            sys.stdout.write(json.dumps(_clean(report), sort_keys=True, indent=2) + "\n")
            return 0
        if args.config:
            cfg = load_config(args.config, args.seed_override)
            if args.command in ("coeffs", "simulate") and cfg.kind != args.command:
                raise ConfigError(f"config kind {cfg.kind!r} does not match command {args.command!r}", "kind")
        elif args.command == "run":
            raise ConfigError("run needs --config", "config")
        else:
            cfg = _inline_config(args)
        out_dir = Path(args.out_dir) if args.out_dir else (cfg.out_dir or Path("out"))
        files = execute(cfg, out_dir, args.format, max(1, args.threads))
        summary = {"status": "ok", "kind": cfg.kind, "out_dir": str(out_dir),
                   "files": [f.name for f in files]}
        sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
        return 0
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error record
        code = _classify(exc)
        if code is None:
            raise
        record = _error_record(exc, code)
        text = json.dumps(record, sort_keys=True)
        sys.stderr.write(text + "\n")
        if out_dir is not None:
            try:
                out_dir.mkdir(parents=True, exist_ok=True)
                (out_dir / "error.json").write_text(text + "\n")
            except OSError:
                pass
        return code


if __name__ == "__main__":
    raise SystemExit(main())
