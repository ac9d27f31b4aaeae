import json

import pytest

import infobid.service.app as service_app
from infobid.cli import build_parser, main

TINY_BOUNDS = {"theorem1_trials": 5, "telescope_runs": 2, "telescope_auctions": 200}


def write_config(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


def test_parser_has_all_subcommands():
    parser = build_parser()
    for name in ("exp1", "exp2", "exp3", "exp4", "toy", "bounds", "serve"):
        args = parser.parse_args([name] if name == "serve" else [name, "--out", "x"])
        assert args.command == name
    with pytest.raises(SystemExit):
        parser.parse_args(["exp7", "--out", "x"])


def test_bounds_run_prints_summary(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY_BOUNDS)
    out = tmp_path / "artifacts"
    code = main(["bounds", "--config", cfg, "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    summary = json.loads(captured.out)
    assert summary["theorem1_pass"] == 5
    assert (out / "bounds_summary.json").exists()


def test_defaults_used_without_config(tmp_path, capsys):
    code = main(["bounds", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path)])
    assert code == 1
    assert "cannot read config" in capsys.readouterr().err


def test_non_object_config_rejected(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text("[1, 2, 3]")
    code = main(["bounds", "--config", str(path), "--out", str(tmp_path)])
    assert code == 1
    assert "JSON object" in capsys.readouterr().err


def test_unknown_config_key_is_an_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"no_such_knob": 1})
    code = main(["bounds", "--config", cfg, "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 1
    assert "service returned 422" in captured.err
    assert "no_such_knob" in captured.err


def test_experiment_name_mismatch_is_an_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiment": "toy"})
    code = main(["exp2", "--config", cfg, "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 1
    assert "declares experiment" in captured.err


def test_violations_exit_code_2(tmp_path, capsys, monkeypatch):
    def fake_run(name, config, out_dir):
        return {"ok": False}, ["paced spend exceeded cap"]

    monkeypatch.setattr(service_app, "run_experiment", fake_run)
    code = main(["toy", "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 2
    assert "violation: paced spend exceeded cap" in captured.err
    assert json.loads(captured.out) == {"ok": False}
