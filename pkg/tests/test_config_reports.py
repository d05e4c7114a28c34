from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from smlab.config import (
    ExperimentConfig,
    env_defaults,
    load_experiment_config,
    save_experiment_config,
)
from smlab.errors import ConfigError
from smlab.experiments import list_experiments, run
from smlab.reports import ExperimentReport, load_arrays, save_arrays, write_run_outputs

ENV = {"log_level": "WARNING", "out_dir": "data/runs", "threads": 1}


def _write(tmp_path, data, name: str = "exp.yaml") -> str:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


def _numbers(report: ExperimentReport) -> dict:
    data = report.to_dict()
    for key in ("timestamp", "wall_time", "threads"):
        data.pop(key)
    return data


def test_defaults_fill_every_section() -> None:
    config = ExperimentConfig.from_dict({"command": "fbm"}, ENV)
    assert config.seed == 0
    assert config.n_paths == 100_000
    assert config.out_dir == "data/runs"
    assert config.section["T_list"] == [256, 1024, 4096]
    assert config.section["scaling"]["P"] == 4
    assert config.tolerances["bands"] == 3.0
    assert set(config.sections) == {"catalog", "stein", "chaos", "npbound", "wp", "fbm"}


def test_nested_override_keeps_sibling_defaults() -> None:
    config = ExperimentConfig.from_dict({"command": "fbm", "fbm": {"scaling": {"n_sets": 2}}}, ENV)
    assert config.section["scaling"] == {"P": 4, "T_list": [128, 512, 2048, 8192], "n_sets": 2, "log2_points": 12}


@pytest.mark.parametrize(
    "data, fragment",
    [
        ({"command": "chaos", "bogus": 1}, "bogus"),
        ({"command": "chaos", "chaos": {"bogus": 1}}, "chaos.bogus"),
        ({"command": "fbm", "fbm": {"scaling": {"Q": 2}}}, "fbm.scaling.Q"),
        ({"command": "chaos", "tolerances": {"tight": 1e-3}}, "tolerances.tight"),
        ({"command": "stein", "stein": {"laws": [{"name": "normal", "scale": 2}]}}, "stein.laws[0].scale"),
    ],
)
def test_unknown_keys_are_rejected_with_their_path(data: dict, fragment: str) -> None:
    with pytest.raises(ConfigError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        ExperimentConfig.from_dict(data, ENV)


def test_invalid_values_are_rejected() -> None:
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "plot"}, ENV)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "wp", "seed": -1}, ENV)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "wp", "n_paths": 10}, ENV)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "wp", "threads": 0}, ENV)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"command": "catalog", "catalog": {"params": [1, 2]}}, ENV)


def test_free_form_law_params_are_accepted() -> None:
    config = ExperimentConfig.from_dict(
        {"command": "catalog", "catalog": {"laws": ["gamma"], "params": {"gamma": {"s": 2.0, "r": 1.0}}}}, ENV
    )
    assert config.section["params"] == {"gamma": {"s": 2.0, "r": 1.0}}


def test_missing_and_empty_files(tmp_path) -> None:
    with pytest.raises(ConfigError, match="not found") as info:
        load_experiment_config(str(tmp_path / "absent.yaml"))
    assert isinstance(info.value.__cause__, FileNotFoundError)

    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ConfigError, match="empty"):
        load_experiment_config(str(empty))


def test_command_is_filled_and_checked(tmp_path) -> None:
    path = _write(tmp_path, {"seed": 4})
    assert load_experiment_config(path, command="wp", env=ENV).command == "wp"
    other = _write(tmp_path, {"command": "fbm"}, "other.yaml")
    with pytest.raises(ConfigError, match="fbm"):
        load_experiment_config(other, command="wp", env=ENV)


def test_save_and_load_round_trip(tmp_path) -> None:
    config = ExperimentConfig.from_dict({"command": "wp", "seed": 9, "wp": {"ns": [2, 4]}}, ENV)
    path = tmp_path / "nested" / "saved.yaml"
    save_experiment_config(str(path), config)
    back = load_experiment_config(str(path), env=ENV)
    assert back.to_dict() == config.to_dict()
    assert back.config_hash == config.config_hash


def test_hash_ignores_threads_and_out_dir() -> None:
    base = ExperimentConfig.from_dict({"command": "chaos"}, ENV)
    assert base.with_overrides(threads=8, out_dir="elsewhere").config_hash == base.config_hash
    assert base.with_overrides(seed=1).config_hash != base.config_hash
    assert len(base.config_hash) == 64


def test_environment_precedence(monkeypatch) -> None:
    monkeypatch.setenv("SMLAB_THREADS", "3")
    monkeypatch.setenv("SMLAB_OUT_DIR", "env_runs")
    monkeypatch.setenv("SMLAB_LOG_LEVEL", "info")
    assert env_defaults() == {"log_level": "INFO", "out_dir": "env_runs", "threads": 3}

    from_env = ExperimentConfig.from_dict({"command": "npbound"})
    assert (from_env.threads, from_env.out_dir) == (3, "env_runs")
    from_file = ExperimentConfig.from_dict({"command": "npbound", "threads": 2, "out_dir": "file_runs"})
    assert (from_file.threads, from_file.out_dir) == (2, "file_runs")
    from_cli = from_file.with_overrides(threads=5, out_dir="cli_runs")
    assert (from_cli.threads, from_cli.out_dir) == (5, "cli_runs")

    monkeypatch.setenv("SMLAB_THREADS", "many")
    with pytest.raises(ConfigError):
        env_defaults()


def test_report_exit_code_and_layout(tmp_path) -> None:
    report = ExperimentReport("chaos", "abc", seed=1, threads=2, tool_version="0.1.0")
    report.add_estimate("m4", 3.02, 0.01, target=3.0)
    report.add_verdict("first", True)
    assert report.exit_code == 0
    report.add_verdict("second", False)
    assert report.exit_code == 1

    report.tables["ladder"] = [{"n": 4, "value": 0.5}, {"n": 8, "value": float("nan")}]
    written = write_run_outputs(report, str(tmp_path), {"max_cells": 64})
    assert {p.split("/")[-1] for p in written} == {"ladder.csv", "report.json", "manifest.json"}

    data = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert data["summary"] == {"verdicts": 2, "passed": 1, "failed": 1}
    assert data["estimates"]["m4"] == {"value": 3.02, "stderr": 0.01, "target": 3.0}
    assert data["tables"]["ladder"][1]["value"] is None
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["caps"] == {"max_cells": 64}
    assert manifest["artifacts"] == ["ladder.csv"]
    assert (tmp_path / "ladder.csv").read_text(encoding="utf-8").splitlines()[0] == "n,value"


def test_array_round_trip(tmp_path) -> None:
    arrays = {"x": np.arange(5.0), "y": np.linspace(0.0, 1.0, 3)}
    manifest = save_arrays(tmp_path, "draws", arrays, {"seed": 3})
    back = load_arrays(manifest)
    np.testing.assert_array_equal(back["x"], arrays["x"])
    np.testing.assert_array_equal(back["y"], arrays["y"])


def test_registry_has_every_command() -> None:
    names = [e["name"] for e in list_experiments()]
    assert names == ["catalog", "stein", "chaos", "npbound", "wp", "fbm"]
    assert all(e["description"] and e["tables"] for e in list_experiments())


def test_catalog_run_writes_outputs(tmp_path) -> None:
    config = ExperimentConfig.from_dict(
        {
            "command": "catalog",
            "out_dir": str(tmp_path),
            "catalog": {"laws": ["normal", {"name": "uniform", "params": {"u": 1.0}}], "grid_n": 50, "export_csv": True},
        },
        ENV,
    )
    report = run(config)
    assert report.exit_code == 0, report.verdicts
    assert [r["law"] for r in report.tables["laws"]][0].startswith("normal")
    for name in ("report.json", "manifest.json", "laws.csv", "growth_thresholds.csv", "law_normal.csv"):
        assert (tmp_path / name).exists()
    thresholds = {r["power"]: r["passed"] for r in report.tables["growth_thresholds"]}
    assert thresholds == {0.5: False, 1.0: True, 1.5: True, 2.0: True, 2.5: False}


def test_chaos_run_is_thread_independent(tmp_path) -> None:
    data = {
        "command": "chaos",
        "n_paths": 5000,
        "chaos": {"ns": [4, 8], "product_orders": [[1, 1], [2, 1]], "product_paths": 5000, "moment_orders": [1]},
    }
    one = run(ExperimentConfig.from_dict({**data, "threads": 1, "out_dir": str(tmp_path / "one")}, ENV))
    three = run(ExperimentConfig.from_dict({**data, "threads": 3, "out_dir": str(tmp_path / "three")}, ENV))
    assert one.config_hash == three.config_hash
    assert _numbers(one) == _numbers(three)
    assert one.verdicts["product_formula"]


@pytest.mark.parametrize("command", ["catalog", "stein", "chaos", "npbound", "wp", "fbm"])
def test_sample_configs_load(command: str) -> None:
    path = Path(__file__).resolve().parent.parent / "config" / f"{command}.yaml"
    config = load_experiment_config(str(path), command=command, env=ENV)
    assert config.command == command
