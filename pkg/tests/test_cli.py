import json

import numpy as np
import pytest

from hopfnet.cli import execute, main, parse_config, serialize_config
from hopfnet.errors import MissingRequired, ParseError, UnknownKey
from hopfnet.network import read_matrix_csv

FAST = {"dt": 0.01, "t_transient": 1500.0, "t_measure": 300.0}


def test_minimal_config_defaults():
    cfg = parse_config('{"command":"classify","n":50,"a":1.0,"b":-1.0,"seed":[1]}')
    assert cfg.command == "classify" and cfg.n == 50 and cfg.seed == [1]
    assert cfg.dynamics.t_measure == 500.0 and cfg.dynamics.decay_tol == 1e-5
    assert cfg.bulk.d_min == 0.5


def test_missing_required():
    with pytest.raises(MissingRequired):
        parse_config('{"command":"sweep","n":10}')
    with pytest.raises(MissingRequired):
        parse_config('{"command":"sweep"}')
    with pytest.raises(MissingRequired):
        parse_config('{"n":10}')


def test_unknown_keys_rejected():
    with pytest.raises(UnknownKey):
        parse_config('{"command":"build","n":10,"decay_tolerance":1}')
    with pytest.raises(UnknownKey):
        parse_config('{"command":"build","n":10,"dynamics":{"dt_max":1}}')


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse_config('{\n  "command": "build",\n  "n": ,\n}')
    assert err.value.line == 3


def test_round_trip():
    text = json.dumps({"command": "verify", "n": 20, "a_over_gamma": 2.0, "lambda_grid": [0.02, -0.02],
                       "dynamics": FAST, "seed": [3, 1]})
    cfg = parse_config(text)
    again = parse_config(serialize_config(cfg))
    assert again == cfg


def test_classify_subcritical(tmp_path):
    cfg = parse_config(json.dumps({"command": "classify", "n": 30, "a": 123.4, "b": 1.0,
                                   "output_dir": str(tmp_path / "out")}))
    assert execute(cfg) == 0
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["runs"][0]["analytic"]["classification"] == "Subcritical"
    assert read_matrix_csv(tmp_path / "out" / "matrix.csv").shape == (30, 30)


def test_reports_are_byte_identical(tmp_path):
    cfg = parse_config(json.dumps({"command": "classify", "n": 40, "a_over_gamma": 0.5, "seed": [5, 2],
                                   "output_dir": str(tmp_path / "out")}))
    outs = []
    for _ in range(2):
        assert execute(cfg) == 0
        outs.append((tmp_path / "out" / "report.json").read_bytes())
    assert outs[0] == outs[1]
    assert (tmp_path / "out" / "matrix_seed2.csv").exists()
    runs = json.loads(outs[0])["runs"]
    assert [r["seed"] for r in runs] == [2, 5]


def test_build_all_constructions(tmp_path):
    for construction in ("spectral", "wigner", "input"):
        out = tmp_path / construction
        assert main(["build", "--out", str(out), "--seed", "4"]) == 1  # n missing
        cfg = tmp_path / f"{construction}.json"
        cfg.write_text(json.dumps({"n": 25, "construction": construction}))
        assert main(["build", "--config", str(cfg), "--out", str(out), "--seed", "4"]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["runs"][0]["validation"]["passed"]


def test_corrupted_matrix_fails_without_outputs(tmp_path, capsys):
    m = np.diag([0.0, -1.0, -2.0])
    m[0, 1] = 0.3
    path = tmp_path / "bad.csv"
    path.write_text("3\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in m) + "\n")
    cfg = tmp_path / "verify.json"
    out = tmp_path / "out"
    cfg.write_text(json.dumps({"command": "verify", "n": 3, "matrix_file": str(path),
                               "lambda_grid": [-0.02, 0.02]}))
    assert main(["verify", "--config", str(cfg), "--out", str(out)]) == 1
    assert "NotSymmetric" in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())


def test_command_mismatch(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "build", "n": 5}))
    assert main(["classify", "--config", str(cfg)]) == 1


def test_verify_supercritical_fixture(tmp_path):
    cfg = tmp_path / "verify.json"
    cfg.write_text(json.dumps({
        "n": 50, "a_over_gamma": 0.25, "b": -1.0, "leading": 0.0,
        "lambda_grid": [-0.02, 0.02, 0.03, 0.04, 0.05], "dynamics": FAST,
    }))
    out = tmp_path / "out"
    assert main(["verify", "--config", str(cfg), "--out", str(out), "--seed", "42"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["agreement"] is True
    assert rep["runs"][0]["numeric"]["classification"] == "Supercritical"
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "lambda,outcome,amplitude,period" and len(lines) == 6


def test_sweep_and_demo(tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"n": 30, "a": 0.0, "lambda_grid": [-0.05, 0.05],
                               "dynamics": {"dt": 0.01, "t_transient": 600.0, "t_measure": 200.0}}))
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "fit.json").read_text().strip() == "null"
    cfg = tmp_path / "demo.json"
    cfg.write_text(json.dumps({"n": 50, "a_over_gamma": 2.0, "lambda_on": 0.02,
                               "dynamics": {"dt": 0.01}}))
    assert main(["demo", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    rep = json.loads((tmp_path / "d" / "report.json").read_text())
    assert rep["runs"][0]["demo"]["mode"] == "NH"
    assert rep["runs"][0]["perron"]["eigenvector_positive"]
