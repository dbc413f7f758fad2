from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from spikelab.errors import ConfigError
from spikelab.harness import commands
from spikelab.harness.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from spikelab.harness.config import ScenarioConfig, parse_config
from spikelab.harness.io import matrix_to_csv, parse_hypothesis, parse_matrix_csv
from spikelab.harness.presets import PRESETS, builtin_json, load_preset, preset_names
from spikelab.harness.runner import ks_distance, resolve_threads, run_null, run_power

SMALL = {
    "name": "small",
    "model": {"N": 120, "y": 0.25, "spikes": [[9.0, 1], [7.0, 1], [5.0, 1]]},
    "hypothesis": {"kind": "equality", "Z0": [1, 2], "I": [1, 2]},
    "alternative": {"pairs": [[1, 4], [2, 5]]},
    "reps": 12,
    "level": 0.1,
    "seed": 99,
    "sampler": "dense",
}


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_simulate_null_writes_rows(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["simulate-null", cfg, "--reps", "10", "--out-dir", str(out)]) == EXIT_OK
    rows = _rows(out / "typeI.csv")
    assert len(rows) == 10
    assert [r["rep"] for r in rows] == [str(k) for k in range(10)]
    summary = json.loads(capsys.readouterr().out)
    assert summary["reps"] == 10
    assert json.loads((out / "summary.json").read_text()) == summary


def test_aggregation_recomputed_from_csv(tmp_path):
    cfg = _write(tmp_path, dict(SMALL, reps=30))
    assert main(["simulate-null", cfg, "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "typeI.csv")
    summary = json.loads((tmp_path / "summary.json").read_text())
    valid = [r for r in rows if r["valid"] == "1"]
    assert summary["reps_valid"] + summary["invalid"] == summary["reps"] == 30
    assert summary["reps_valid"] == len(valid)
    rate = sum(int(r["decision"]) for r in valid) / len(valid)
    assert summary["rate"] == pytest.approx(rate)
    assert summary["se"] == pytest.approx(math.sqrt(rate * (1 - rate) / len(valid)))


@pytest.mark.parametrize("sampler", ["dense", "reduced"])
def test_thread_count_does_not_change_bytes(tmp_path, sampler):
    cfg = _write(tmp_path, dict(SMALL, reps=16, sampler=sampler))
    outs = []
    for t in ("1", "3", "4"):
        d = tmp_path / f"t{t}"
        assert main(["simulate-null", cfg, "--threads", t, "--out-dir", str(d)]) == EXIT_OK
        outs.append(((d / "typeI.csv").read_bytes(), (d / "summary.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_threads_env(monkeypatch):
    monkeypatch.delenv("SPIKELAB_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("SPIKELAB_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("SPIKELAB_THREADS", "x")
    with pytest.raises(ConfigError):
        resolve_threads(None)


def test_dump_first_round_trip(tmp_path):
    cfg = _write(tmp_path, dict(SMALL, reps=2))
    out = tmp_path / "dump"
    assert main(["simulate-null", cfg, "--dump-first", "--out-dir", str(out)]) == EXIT_OK
    again = tmp_path / "again"
    code = main(["test", "--data", str(out / "first_data.csv"), "--hypothesis", str(out / "first_hypothesis.json"),
                 "--out-dir", str(again)])
    assert code == EXIT_OK
    assert (again / "report.json").read_text() == (out / "first_report.json").read_text()
    first = _rows(out / "typeI.csv")[0]
    assert float(first["statistic"]) == json.loads((again / "report.json").read_text())["statistic"]


def test_dump_first_orthogonality_round_trip(tmp_path):
    obj = dict(SMALL, reps=1, hypothesis={"kind": "orthogonality", "Z0": [3, 4], "I": [1, 2]},
               alternative={"pairs": [[3, 1], [4, 2]]}, mixture_draws=2000)
    cfg = _write(tmp_path, obj)
    out = tmp_path / "dump"
    assert main(["simulate-null", cfg, "--dump-first", "--out-dir", str(out)]) == EXIT_OK
    assert main(["test", "--data", str(out / "first_data.csv"), "--hypothesis", str(out / "first_hypothesis.json"),
                 "--out-dir", str(out / "t")]) == EXIT_OK
    assert (out / "t" / "report.json").read_text() == (out / "first_report.json").read_text()


def test_dump_first_requires_dense(tmp_path, capsys):
    cfg = _write(tmp_path, dict(SMALL, sampler="reduced"))
    assert main(["simulate-null", cfg, "--dump-first", "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert "dense" in capsys.readouterr().err


def test_critvals_chi2_one(tmp_path):
    u = _write(tmp_path, "1\n", "U.csv")
    assert main(["critvals", "--U", u, "--q", "1", "--draws", "20000", "--seed", "3", "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "critvals.csv")
    q90 = float(next(r for r in rows if float(r["probability"]) == 0.9)["critical_value"])
    assert abs(q90 - 2.706) < 0.05


def test_critvals_header_and_numerical_failure(tmp_path, capsys):
    u = _write(tmp_path, "a,b\n1,0\n0,2\n", "U.csv")
    assert main(["critvals", "--U", u, "--q", "2", "--draws", "1000", "--out-dir", str(tmp_path)]) == EXIT_OK
    bad = _write(tmp_path, "1,0\n0,-1\n", "bad.csv")
    assert main(["critvals", "--U", bad, "--q", "1", "--draws", "1000", "--out-dir", str(tmp_path)]) == EXIT_NUMERICAL
    assert "numerical" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    cfg = _write(tmp_path, '{\n  "name": "x",\n  "reps": ,\n}')
    assert main(["simulate-null", cfg]) == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err


def test_invalid_field_reports_path(tmp_path, capsys):
    obj = json.loads(json.dumps(SMALL))
    obj["model"]["N"] = -5
    assert main(["simulate-null", _write(tmp_path, obj)]) == EXIT_CONFIG
    assert "field 'model.N'" in capsys.readouterr().err
    obj = dict(SMALL, extra=1)
    assert main(["simulate-null", _write(tmp_path, obj)]) == EXIT_CONFIG
    assert "field 'extra'" in capsys.readouterr().err


def test_other_config_errors(tmp_path, capsys):
    assert main(["simulate-null", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["simulate-null", "preset:nope"]) == EXIT_CONFIG
    assert main(["simulate-null", _write(tmp_path, SMALL), "--reps", "0"]) == EXIT_CONFIG
    assert main(["simulate-null", _write(tmp_path, SMALL), "--threads", "0"]) == EXIT_CONFIG
    assert main(["bogus"]) == EXIT_CONFIG
    assert main(["power", _write(tmp_path, SMALL), "--phi", "2.0"]) == EXIT_CONFIG
    reduced_two_point = json.loads(json.dumps(SMALL))
    reduced_two_point["model"]["law"] = "two_point"
    reduced_two_point["sampler"] = "reduced"
    assert main(["simulate-null", _write(tmp_path, reduced_two_point)]) == EXIT_CONFIG
    capsys.readouterr()


def test_bad_data_csv_reports_line_and_field(tmp_path, capsys):
    data = _write(tmp_path, "1,2,3\n4,x,6\n", "Y.csv")
    hyp = _write(tmp_path, {"kind": "equality", "Z0": [1], "I": [1], "partition": [1]}, "h.json")
    assert main(["test", "--data", data, "--hypothesis", hyp]) == EXIT_CONFIG
    assert "line 2, field 2" in capsys.readouterr().err
    with pytest.raises(ConfigError, match="expected 3 fields"):
        parse_matrix_csv("1,2,3\n4,5\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_hypothesis('{"kind": "equality" "Z0": [1]}')


def test_test_command_numerical_exit(tmp_path):
    Y = np.eye(6) * 0.5
    data = _write(tmp_path, matrix_to_csv(Y), "Y.csv")
    hyp = _write(tmp_path, {"kind": "equality", "Z0": [1], "I": [1], "partition": [1]}, "h.json")
    assert main(["test", "--data", data, "--hypothesis", hyp, "--out-dir", str(tmp_path)]) == EXIT_NUMERICAL


def test_power_zero_equals_null(tmp_path):
    cfg = ScenarioConfig.model_validate(dict(SMALL, reps=20))
    null = run_null(cfg)
    pts = run_power(cfg, [0.0, math.pi / 2])
    assert pts[0].result.rate == null.rate
    assert np.array_equal(pts[0].result.statistics, null.statistics, equal_nan=True)
    assert pts[1].result.rate >= pts[0].result.rate


def test_power_cli_writes_grid(tmp_path):
    cfg = _write(tmp_path, dict(SMALL, reps=5))
    assert main(["power", cfg, "--phi", "0", "0.7853981633974483", "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "power.csv")
    assert [float(r["phi"]) for r in rows] == [0.0, math.pi / 4]


def test_ecdf_ks_matches_definition(tmp_path):
    obj = dict(SMALL, reps=40, hypothesis={"kind": "equality", "Z0": [1], "I": [1]},
               model={"N": 120, "y": 0.25, "spikes": [[6.0, 1]]}, alternative=None)
    del obj["alternative"]
    cfg = _write(tmp_path, obj)
    assert main(["ecdf", cfg, "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "ecdf.csv")
    x = np.array([float(r["statistic"]) for r in rows])
    F = np.array([float(r["reference_cdf"]) for r in rows])
    assert np.all(np.diff(x) >= 0)
    n = len(x)
    ks = max(max(abs((i + 1) / n - F[i]), abs(i / n - F[i])) for i in range(n))
    summary = json.loads((tmp_path / "ecdf_summary.json").read_text())
    assert summary["ks"] == pytest.approx(ks, abs=1e-15)
    assert summary["reference"] == "std_normal"


def test_ks_distance_simple():
    assert ks_distance(np.array([0.5]), np.array([0.5])) == 0.5
    assert ks_distance(np.array([0.25, 0.75]), np.array([0.25, 0.75])) == 0.25


def test_presets_match_shipped_files():
    assert len(preset_names()) >= 17
    for name in preset_names():
        assert load_preset(name).to_json() == builtin_json(name)
        assert parse_config(builtin_json(name)) == load_preset(name)


def test_preset_parameters():
    s1 = load_preset("scenario1_N500_y0.1_d2")
    assert [s.d for s in s1.model.spikes] == [9.0, 7.0, 5.0]
    assert s1.model.M == 50 and s1.model.N == 500 and s1.reps == 2000 and s1.level == 0.1
    assert s1.hypothesis.Z0 == [1, 2] and s1.hypothesis.I == [1, 2]
    s2 = load_preset("scenario2_N500_y1_d50")
    assert [(s.d, s.multiplicity) for s in s2.model.spikes] == [(55.0, 2), (5.0, 1)]
    tp = load_preset("scenario1_twopoint_N500_y0.1_d10")
    assert tp.kappa4() == -1.5 and tp.sampler == "dense"
    a = load_preset("scenarioA_N500_y1_d5")
    assert a.hypothesis.kind == "orthogonality" and a.hypothesis.Z0 == [3, 4]
    fig = load_preset("single_spike_equality_N500_y1_d2")
    assert fig.reps == 8000 and [s.d for s in fig.model.spikes] == [2.0]
    assert set(PRESETS) == set(preset_names())


def test_presets_cli(capsys):
    assert main(["presets"]) == EXIT_OK
    assert "scenarioA_N500_y1_d5" in capsys.readouterr().out.split()
    assert main(["presets", "scenarioA_N500_y1_d5"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["name"] == "scenarioA_N500_y1_d5"


def test_rotated_alternatives():
    cfg = ScenarioConfig.model_validate(SMALL)
    model, hyp = cfg.rotated(math.pi / 2)
    assert np.allclose(model.directions[:, 0], np.eye(30)[3])
    assert np.allclose(model.directions[:, 1], np.eye(30)[4])
    assert hyp.directions is None
    ortho = load_preset("scenarioA_N500_y1_d5")
    model, hyp = ortho.rotated(math.pi / 4)
    assert np.allclose(hyp.Z0[[0, 2], 0], [math.sqrt(0.5)] * 2)
    assert hyp.directions is not None


def test_with_overrides():
    cfg = ScenarioConfig.model_validate(SMALL)
    assert commands.with_overrides(cfg, 5, 7).seed == 5
    assert commands.with_overrides(cfg, None, 7).reps == 7
    with pytest.raises(ConfigError):
        commands.with_overrides(cfg, -1)


def test_csv_parsing_round_trip():
    A = np.random.default_rng(0).standard_normal((4, 3))
    _, B = parse_matrix_csv(matrix_to_csv(A))
    assert np.array_equal(A, B)
