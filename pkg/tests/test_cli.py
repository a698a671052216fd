import hashlib
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from stablespec.cli import EXIT_PARSE, main
from stablespec.stable_rng import RngStream
from stablespec.timeseries import LinearFilter, read_path_csv, simulate_linear

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _tree(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_simulate_matches_library_and_is_byte_identical(tmp_path, capsys):
    code, out, _ = _run(capsys, "simulate", "--n", 16, "--alpha", 1.5, "--filter", "ma1:0.5", "--seed", 7,
                        "--out-dir", tmp_path / "a")
    assert code == 0 and json.loads(out)["status"] == "ok"
    _run(capsys, "simulate", "--n", 16, "--alpha", 1.5, "--filter", "ma1:0.5", "--seed", 7, "--out-dir", tmp_path / "b")
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")
    path = read_path_csv(tmp_path / "a" / "path.csv")
    x, _ = simulate_linear(16, LinearFilter.ma1(0.5), 1.5, RngStream(7))
    np.testing.assert_array_equal(path.values, x.values)


def test_simulate_config_json_format(tmp_path, capsys):
    code, _, _ = _run(capsys, "simulate", "--config", CONFIGS / "simulate.yaml", "--out-dir", tmp_path,
                      "--format", "json")
    assert code == 0
    data = json.loads((tmp_path / "path.json").read_text())
    assert len(data["values"]) == 16 and data["alpha"] == 1.5


def test_coeffs_rows(tmp_path, capsys):
    code, _, _ = _run(capsys, "coeffs", "--config", CONFIGS / "coeffs.yaml", "--out-dir", tmp_path)
    assert code == 0
    lines = (tmp_path / "coeffs.csv").read_text().splitlines()
    assert lines[0] == "h,a_h" and len(lines) == 10
    k = np.arange(1, 9)
    np.testing.assert_allclose([float(r.split(",")[1]) for r in lines[2:]], np.sin(k) / k, atol=1e-14)


def test_alpha_out_of_range_exits_3(tmp_path, capsys):
    code, _, err = _run(capsys, "simulate", "--n", 8, "--alpha", 2.5, "--out-dir", tmp_path)
    assert code == 3
    rec = json.loads(err)
    assert rec["status"] == "error" and rec["field"] == "alpha"
    assert json.loads((tmp_path / "error.json").read_text()) == rec


def test_validate_ok_and_indicator_warning(capsys):
    code, out, _ = _run(capsys, "validate", "--config", CONFIGS / "fidi_geometric.yaml")
    assert code == 0 and json.loads(out)["status"] == "ok"
    code, out, _ = _run(capsys, "validate", "--config", CONFIGS / "fidi_indicator.yaml")
    assert code == 0
    assert json.loads(out)["diagnostics"]["warnings"]


def test_unresolved_reference_exits_3(tmp_path, capsys):
    code, _, err = _run(capsys, "run", "--config", CONFIGS / "bad_ref.yaml", "--out-dir", tmp_path)
    rec = json.loads(err)
    assert code == 3 and rec["error"] == "unresolved reference" and "missing_entry" in rec["message"]


def test_parse_errors_exit_2(tmp_path, capsys):
    bad = _write(tmp_path, "kind: fidi\nalpha: [1,\n")
    assert _run(capsys, "validate", "--config", bad)[0] == EXIT_PARSE == 2
    unknown = _write(tmp_path, "kind: nonsense\nalpha: 1.0\n", "u.yaml")
    code, _, err = _run(capsys, "validate", "--config", unknown)
    assert code == 2 and json.loads(err)["field"] == "kind"
    assert _run(capsys, "validate", "--config", tmp_path / "missing.yaml")[0] == 2


def test_degenerate_grid_is_a_precondition_failure(tmp_path, capsys):
    cfg = _write(tmp_path, "kind: fidi\nalpha: 1.2\nreplicates: 10\nn_grid: [64, 32]\n")
    code, _, err = _run(capsys, "run", "--config", cfg, "--out-dir", tmp_path / "o")
    assert code == 3 and json.loads(err)["field"] == "n_grid"


def test_run_manifest_and_reproducibility(tmp_path, capsys):
    cfg = _write(tmp_path, "kind: fidi\nalpha: 1.3\nseed: 4\nreplicates: 60\nn_grid: [16, 32]\n"
                           "coefficients: {type: geometric, r: 0.5, K: 10}\ndump_samples: true\n")
    assert _run(capsys, "run", "--config", cfg, "--out-dir", tmp_path / "a")[0] == 0
    assert _run(capsys, "run", "--config", cfg, "--out-dir", tmp_path / "b", "--threads", 3)[0] == 0
    a = _tree(tmp_path / "a")
    assert a == _tree(tmp_path / "b")
    assert set(a) == {"report.json", "summary.csv", "samples.csv", "manifest.json"}
    manifest = json.loads(a["manifest.json"])
    assert manifest["kind"] == "fidi" and manifest["seeds"] == [4]
    for name, digest in manifest["files"].items():
        assert hashlib.sha256(a[name]).hexdigest() == digest
    report = json.loads(a["report.json"])
    assert all(r["replicates"] == 60 and r["seed"] == 4 for r in report["per_n"])
    _run(capsys, "run", "--config", cfg, "--out-dir", tmp_path / "c", "--seed-override", 5)
    assert json.loads((tmp_path / "c" / "manifest.json").read_text())["seeds"] == [5]


@pytest.mark.parametrize("name", ["autocov.yaml", "remainder.yaml", "covering.yaml", "qform.yaml"])
def test_shipped_configs_validate(name, capsys):
    code, out, _ = _run(capsys, "validate", "--config", CONFIGS / name)
    assert code == 0 and json.loads(out)["status"] == "ok"


def test_small_runs_of_every_experiment_kind(tmp_path, capsys):
    texts = {
        "autocov": "kind: autocov-scaling\nalpha: 1.5\nreplicates: 50\nn_grid: [16, 32]\n",
        "remainder": f"kind: remainder\nalpha: 1.5\nreplicates: 10\nn_grid: [16, 32]\nfilter: ma1:0.5\n"
                     f"catalog: {CONFIGS / 'catalog.txt'}\nclass: [ind1, cos3]\n",
        "covering": "kind: covering\nalpha: 1.0\nclass: {family: indicator, size: 50}\nk_grid: [2, 3]\n",
        "qform": "kind: qform-tails\nalpha: 1.0\nreplicates: 200\nn: 8\nx_grid: [1, 10]\n"
                 "specs: [{label: g, coefficients: {type: geometric, r: 0.5, K: 7}},\n"
                 "        {label: z, coefficients: {type: zero, K: 3}}]\n",
    }
    for name, text in texts.items():
        code, out, err = _run(capsys, "run", "--config", _write(tmp_path, text, f"{name}.yaml"),
                              "--out-dir", tmp_path / name, "--format", "json")
        assert code == 0, err
        assert (tmp_path / name / "report.json").exists()
    q = json.loads((tmp_path / "qform" / "report.json").read_text())
    assert q["verdicts"]["envelopes"]["z"] is None and q["verdicts"]["per_spec"]["z"]["vacuous"]


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("stablespec")
    cmd = [exe] if exe else [sys.executable, "-m", "stablespec.cli"]
    res = subprocess.run(cmd + ["coeffs", "--function", "cosine k=2", "--K", "3", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "coeffs.csv").read_text().splitlines()[3].startswith("2,1.5707963")
