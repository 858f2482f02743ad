import json
import subprocess
import sys

import pytest

from finrank.cli import main
from finrank.scenario import ConfigError, parse_config, preset_names, preset_path

EMPTY_SCAN = {"experiment": "spectral-check", "family": {"kind": "empty"}, "grids": {"lambda": [0.5, 1.0, 2.0]}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_kernel_eval_prints_value(capsys):
    assert main(["kernel-eval", "--d", "1", "--branch", "plus", "--lambda", "2", "--r", "0"]) == 0
    assert capsys.readouterr().out.strip() == "0+0.25i"


def test_spectral_check_empty_family(tmp_path, capsys):
    assert main(["spectral-check", "--config", write(tmp_path, EMPTY_SCAN)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "margin 1"
    assert out[1].startswith("CHECK spectral-margin PASS")


@pytest.mark.parametrize(
    "patch, key",
    [
        ({"bogus": 1}, "bogus"),
        ({"family": {"kind": "empty", "extra": 2}}, "family.extra"),
        ({"grids": {"lambda": [1.0], "z": [1]}}, "grids.z"),
        ({"quadrature": {"tolerance": 1e-8}}, "quadrature.tolerance"),
    ],
)
def test_unknown_keys_exit_2(tmp_path, capsys, patch, key):
    cfg = {**EMPTY_SCAN, **patch}
    assert main(["spectral-check", "--config", write(tmp_path, cfg)]) == 2
    assert f"'{key}'" in capsys.readouterr().err


def test_nested_profile_keys_are_checked():
    cfg = {"experiment": "propagate", "family": {"members": [{"shape": "gaussian", "sigma": 1}]},
           "grids": {"t": [1], "x": [0], "y": [0]}}
    with pytest.raises(ConfigError, match="family.members\\[0\\].sigma"):
        parse_config(cfg)


def test_preconditions_checked_before_running():
    with pytest.raises(ConfigError, match="at least 5"):
        parse_config({"experiment": "decay-fit", "family": {"kind": "empty"},
                      "grids": {"t": [1, 2], "x": [0]}})
    with pytest.raises(ConfigError, match="d \\+ 3/2"):
        parse_config({"experiment": "propagate", "dimension": 3,
                      "family": {"members": [{"shape": "gaussian", "delta": 4.0}]},
                      "grids": {"t": [1], "x": [0], "y": [0]}})
    with pytest.raises(ConfigError, match="one-dimensional"):
        parse_config({"experiment": "oracle-compare", "dimension": 3,
                      "family": {"members": [{"shape": "gaussian"}]}, "oracle": {"L": 64, "n": 1024},
                      "grids": {"t": [1], "x": [0], "y": [0]}})


def test_subcommand_mismatch_exit_2(tmp_path):
    assert main(["propagate", "--config", write(tmp_path, EMPTY_SCAN)]) == 2


def test_computation_error_exit_1(tmp_path):
    cfg = {"experiment": "oracle-compare", "family": {"members": [{"shape": "gaussian"}]},
           "oracle": {"L": 4.0, "n": 64}, "grids": {"t": [1.0], "x": [0.0], "y": [0.0]}}
    assert main(["oracle-compare", "--config", write(tmp_path, cfg)]) == 1


def test_failed_check_exit_1(tmp_path):
    cfg = {**EMPTY_SCAN, "checks": {"margin_floor": 2.0}}
    assert main(["spectral-check", "--config", write(tmp_path, cfg)]) == 1


def test_outputs_are_deterministic(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["run", "--preset", "free-baseline", "--out", str(d)]) == 0
        outs.append((d / "free-baseline_fit.csv").read_text())
    assert outs[0] == outs[1]
    header, columns = outs[0].splitlines()[:2]
    assert header.startswith("# finrank ") and "config_sha256=" in header
    assert columns == "d,t,norm"
    summary = json.loads((tmp_path / "run0" / "free-baseline_summary.json").read_text())
    assert all(c["pass"] for c in summary["checks"])


def test_propagate_table_columns(tmp_path):
    cfg = {"experiment": "propagate", "family": {"members": [{"shape": "gaussian"}]},
           "grids": {"t": [1.0], "x": [0.0, 0.5], "y": [0.0]}}
    assert main(["propagate", "--config", write(tmp_path, cfg), "--t", "2", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "propagate_kernel.csv").read_text().splitlines()
    assert lines[1] == "t,x,y,re,im,err_est"
    assert len(lines) == 4 and lines[2].startswith("2,0,0,")


def test_borel_scan_branch_filter(tmp_path):
    cfg = {"experiment": "borel-scan", "family": {"members": [{"shape": "gaussian"}]},
           "grids": {"lambda": [0.5, 1.0]}}
    assert main(["borel-scan", "--config", write(tmp_path, cfg), "--branch", "minus", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "borel-scan_scan.csv").read_text().splitlines()[2:]
    assert len(rows) == 2 and all(r.split(",")[1] == "minus" for r in rows)


def test_all_presets_validate():
    names = preset_names()
    assert set(names) == {
        "free-baseline", "theorem1-d1", "theorem1-d3", "theorem3-disjoint", "theorem4-spread-d3",
        "theorem5-trace", "oscillatory-appendixA", "oracle-compare",
    }
    for n in names:
        parse_config(json.loads(preset_path(n).read_text()))


def test_thread_override_environment(tmp_path):
    code = "import os, finrank.cli; print(os.environ['OPENBLAS_NUM_THREADS'])"
    out = subprocess.run([sys.executable, "-c", code], env={"FINRANK_THREADS": "1", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "1"
