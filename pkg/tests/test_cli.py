import csv
import json

import pytest

from hopfuq.cli import main
from hopfuq.config import OUTPUT_DIR_ENV, RunConfig, load_config_file, resolve_config
from hopfuq.exceptions import DomainError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_entry_exit_example(capsys):
    code, doc = run(capsys, "entry-exit", "--system", "normal-form", "--c", "1", "--tau0", "-0.5")
    assert code == 0
    assert doc["tau_star"] == pytest.approx(0.5, abs=1e-10)
    assert doc["command"] == "entry-exit" and doc["seed"] == 0
    assert doc["config"]["c"] == 1.0


def test_entry_exit_grid(capsys):
    code, doc = run(capsys, "entry-exit", "--tau0=-1:-0.2:5", "--tau-plus", "0.5")
    assert code == 0
    kinds = [r["kind"] for r in doc["results"]]
    assert kinds == ["BufferEscape", "BufferEscape", "BufferEscape", "Jump", "Jump"]


def test_series_check_example(capsys):
    code, doc = run(capsys, "series-check", "--pi", "0,1")
    assert code == 0 and doc["verdict"] == "Unconstrained"
    assert doc["pi"] == [0.0, 1.0] and doc["N"] == 16


def test_moments_example(capsys):
    code, doc = run(capsys, "moments", "--measure=uniform,-2,-0.5", "--tau-plus", "1", "--q", "1")
    assert code == 0
    assert doc["paper"] == pytest.approx(0.79167, abs=1e-5)
    assert doc["pushforward"] == pytest.approx(0.91667, abs=1e-5)


def test_moments_published_column_empty_off_normal_form(capsys):
    code, doc = run(capsys, "moments", "--system", "modified-exp", "--tau-plus", "1", "--q-max", "2")
    assert code == 0
    published = [m["value"] for m in doc["moments"] if m["method"] == "paper-formula"]
    assert published == [None, None]


def test_buffer_command(capsys):
    code, doc = run(capsys, "buffer", "--c", "2", "--u-min", "0", "--resolution", "64")
    assert code == 0
    assert doc["tau_plus"] == pytest.approx(0.5, abs=1e-3)
    assert doc["limiting_point"]["kind"] == "EigenvalueZero"


def test_relief_writes_csv(tmp_path, capsys):
    code, doc = run(capsys, "relief", "--grid-u", "0,1,3", "--grid-v", "0,1,2", "--output-dir", str(tmp_path))
    assert code == 0 and doc["rows"] == 6
    raw = (tmp_path / "relief.csv").read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode("utf-8").splitlines()))
    assert rows[0] == ["u", "v", "relief"]
    assert [float(x) for x in rows[-1]] == [1.0, 1.0, 1.0]
    assert json.loads((tmp_path / "relief.json").read_text()) == doc


def test_pushforward_writes_mixture(tmp_path, capsys):
    code, doc = run(capsys, "pushforward", "--tau-plus", "0.7", "--output-dir", str(tmp_path))
    assert code == 0
    assert doc["rho1"] + doc["rho2"] == pytest.approx(1.0, abs=1e-9)
    rows = (tmp_path / "pushforward.csv").read_text().splitlines()
    assert rows[0] == "s,density"
    assert rows[-1].startswith("atom,")


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    code, _ = run(capsys, "relief", "--grid-u", "0,1,2", "--grid-v", "0,1,2", "--quiet")
    assert code == 0 and (tmp_path / "relief.csv").exists()
    assert capsys.readouterr().out == ""


def test_config_file_with_flag_override(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"system": "normal-form", "c": 2.0, "tau0": "-0.5", "seed": 11}))
    code, doc = run(capsys, "entry-exit", "--config", str(path))
    assert doc["config"]["c"] == 2.0 and doc["seed"] == 11
    assert doc["tau_star"] == pytest.approx(0.5, abs=1e-10)
    code, doc = run(capsys, "entry-exit", "--config", str(path), "--tau0=-0.25")
    assert doc["tau_star"] == pytest.approx(0.25, abs=1e-10) and doc["config"]["c"] == 2.0


def test_reruns_are_byte_identical(tmp_path, capsys):
    outs = []
    for k in range(2):
        assert main(["pushforward", "--measure", "exponential,0.5,1", "--tau-plus", "1.5",
                     "--output-dir", str(tmp_path / str(k))]) == 0
        outs.append(capsys.readouterr().out)
        outs.append((tmp_path / str(k) / "pushforward.csv").read_bytes())
    assert outs[0] == outs[2] and outs[1] == outs[3]


def test_ensemble_command(tmp_path, capsys):
    code, doc = run(capsys, "ensemble", "--n", "4", "--seed", "3", "--output-dir", str(tmp_path))
    assert code == 0
    assert doc["seed"] == 3 and doc["counts"]["TubeExit"] == 4
    lines = (tmp_path / "ensemble.csv").read_text().splitlines()
    assert lines[0] == "index,tau0,entry_time,exit_time,y_star,exit_kind"
    assert len(lines) == 5


def test_unknown_or_missing_command(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["entry-exit", "--c", "-1"], ["ensemble", "--eps", "0.001", "--n", "1"],
                                  ["series-check", "--tol", "1e-3"], ["entry-exit", "--tau0", "0.5"],
                                  ["entry-exit", "--system", "nope"], ["buffer", "--resolution", "x"]])
def test_invalid_configuration_exit_code(argv, capsys):
    assert main(argv) == 2


def test_missing_config_file(tmp_path):
    assert main(["buffer", "--config", str(tmp_path / "absent.json")]) == 2


def test_numeric_failure_exit_code(capsys):
    # the relief of a = 1 saturates just before tau0 = -1, so the exit leaves the domain
    assert main(["entry-exit", "--system", "modified-exp", "--tau0=-0.99999"]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_small_eps_needs_override():
    with pytest.raises(DomainError):
        resolve_config({}, {"eps": 0.004})
    assert resolve_config({}, {"eps": 0.004, "allow_small_eps": True}).eps == 0.004


def test_config_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(DomainError):
        load_config_file(path)
    path.write_text(json.dumps({"pi": [0, 1, 0.1], "max-step": 0.05}))
    assert load_config_file(path) == {"pi": "0,1,0.1", "max_step": 0.05}


def test_run_config_dict_omits_output_dir():
    assert "output_dir" not in RunConfig().to_dict()
