import json
import math
from pathlib import Path

import numpy as np
import pytest

import singular_nls.cli as cli
from singular_nls.errors import NumericError, SpecificationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def problem(p=3.05, mode=None):
    out = {"n": 3, "p": p, "V": {"kind": "const", "params": {"value": 1.0}},
           "Gamma": {"kind": "const", "params": {"value": 1.0}}}
    if mode:
        out["mode"] = mode
    return out


def test_missing_config_file_is_a_config_error(tmp_path):
    assert cli.main(["construct", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_invalid_json_is_a_config_error(tmp_path):
    assert cli.main(["construct", "--config", write(tmp_path, "{not json"), "--out", str(tmp_path)]) == 2


def test_missing_problem_is_a_config_error(tmp_path):
    assert cli.main(["construct", "--config", write(tmp_path, {"seed": 1}), "--out", str(tmp_path)]) == 2


def test_subcritical_problem_is_refused_by_construct(tmp_path):
    cfg = write(tmp_path, {"problem": problem(2.0, "subcritical")})
    assert cli.main(["construct", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_unknown_grid_key_is_a_config_error(tmp_path):
    cfg = write(tmp_path, {"problem": problem(), "grid": {"spacing": 0.1}})
    assert cli.main(["landscape", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_numeric_failures_exit_with_three(tmp_path, monkeypatch):
    def boom(config, out):
        raise NumericError("test", "forced")

    monkeypatch.setitem(cli.RUNNERS, "kernels", boom)
    assert cli.main(["kernels", "--config", write(tmp_path, {}), "--out", str(tmp_path)]) == 3


def test_kernels_outputs(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["kernels", "--config", str(CONFIGS / "kernels.json"), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    manifest = json.loads((out / "manifest.json").read_text())
    assert report["passed"] and all(c["passed"] for c in report["claims"].values())
    assert manifest["config_hash"] == report["config_hash"] == cli.config_hash(manifest["config"])
    for name in manifest["files"]:
        assert (out / name).exists(), name
    raw = (out / "kernel_n3_omega1.csv").read_bytes()
    assert raw.startswith(b"r,value\n") and b"\r" not in raw
    data = np.loadtxt(out / "kernel_n3_omega1.csv", delimiter=",", skiprows=1)
    assert np.allclose(data[:, 1], np.exp(-data[:, 0]) / (4 * math.pi * data[:, 0]), rtol=1e-10)
    assert (out / "kernels.png").read_bytes()[:4] == b"\x89PNG"


def test_construct_u0_lists_sidecars(tmp_path):
    cfg = write(tmp_path, {"problem": problem(), "grid": {"per_decade": 60}})
    out = tmp_path / "out"
    assert cli.main(["construct-u0", "--config", cfg, "--out", str(out)]) == 0
    files = json.loads((out / "manifest.json").read_text())["files"]
    assert "u0.csv" in files and "u0.csv.json" in files


def test_overrides_reach_the_config():
    args = cli.build_parser().parse_args(["sweep", "--config", "x", "--seed", "9", "--tol", "1e-6",
                                          "--grid-nodes", "500", "--rmax", "30"])
    cfg = cli.apply_overrides({"grid": {"per_decade": 10}}, args)
    assert cfg["seed"] == 9 and cfg["tol"] == 1e-6
    assert cfg["grid"] == {"per_decade": 10, "nodes": 500, "r_max": 30.0}


def test_clean_makes_reports_strict_json():
    data = cli.clean({"a": math.inf, "b": -math.inf, "c": math.nan, "d": np.float64(0.5), "e": np.arange(2),
                      "f": np.bool_(True)})
    assert data == {"a": "inf", "b": "-inf", "c": "nan", "d": 0.5, "e": [0, 1], "f": True}
    json.dumps(data, allow_nan=False)


def test_claim_keeps_the_verdict():
    entry = cli.claim("anchor", False, passed=True, value=1.0)
    assert entry == {"anchor": "anchor", "passed": False, "value": 1.0}


def test_table_cells():
    assert cli._cell(True) == "true" and cli._cell(None) == "" and cli._cell(0.1) == "0.10000000000000001"


def test_unknown_mode_is_rejected_by_run(tmp_path):
    with pytest.raises(SpecificationError):
        cli.run("construct-x", {}, tmp_path)
