from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from wearlab.cli import main
from wearlab.learners import MODEL_KINDS

ARTIFACTS = ("features.csv", "registry.json", "demographics.csv", "corr.csv", "summary.json",
             "selection.json", "eval.json", "roc.csv", "results_table.csv")

CONFIG = {
    "cohort": "cohort",
    "output": "out",
    "scenario": "combined",
    "model": {"kind": "gb", "params": {"n_estimators": 15, "max_depth": 2}},
    "selector": {"method": "sffs", "cv_folds": 3, "max_features": 3},
    "seeds": [0, 1],
}


def _synth(root: Path, seed=1):
    assert main(["synth", "--out", str(root / "cohort"), "--n-positive", "6", "--n-negative", "5",
                 "--days", "4", "--effect-scale", "3", "--seed", str(seed)]) == 0


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    _synth(root)
    (root / "demo.json").write_text(json.dumps(CONFIG))
    return root


@pytest.fixture(scope="module")
def full_run(workspace):
    assert main(["run", "--config", str(workspace / "demo.json")]) == 0
    return workspace / "out"


def test_smoke_path_writes_every_artifact(full_run):
    for name in ARTIFACTS:
        assert (full_run / name).stat().st_size > 0, name
    doc = json.loads((full_run / "eval.json").read_text())
    assert doc["seeds"] == [0, 1] and doc["selector"] == "sffs" and doc["model"] == "gb"
    assert doc["pipeline_config"]["selector"]["method"] == "sffs"
    assert not doc["leaky_selection"]
    sel = json.loads((full_run / "selection.json").read_text())
    assert sel["scope"] == "full_cohort" and len(sel["selected"]) <= 3
    assert len(sel["selected_names"]) == len(sel["selected"])
    header = (full_run / "features.csv").read_text().splitlines()[0].split(",")
    assert header[:3] == ["subject_id", "label", "f001"] and len(header) == 2 + 284


def test_rerun_is_byte_identical(workspace, full_run, tmp_path):
    assert main(["run", "--config", str(workspace / "demo.json"), "--out", str(tmp_path),
                 "--threads", "3"]) == 0
    for name in ("features.csv", "corr.csv", "summary.json", "eval.json", "roc.csv"):
        assert (tmp_path / name).read_bytes() == (full_run / name).read_bytes(), name


def test_subcommands_compose_to_run(tmp_path, monkeypatch):
    # relative paths keep the embedded config identical between the two routes
    monkeypatch.chdir(tmp_path)
    _synth(tmp_path)
    Path("demo.json").write_text(json.dumps(CONFIG))
    ws = Path(".")
    assert main(["run", "--config", "demo.json"]) == 0
    reference = {n: (ws / "out" / n).read_bytes() for n in ARTIFACTS}
    for p in (ws / "out").iterdir():
        p.unlink()
    assert main(["extract", "--cohort", "cohort", "--out", "out"]) == 0
    assert main(["stats", "--features", "out/features.csv", "--out", "out"]) == 0
    assert main(["select", "--config", "demo.json", "--features", "out/features.csv",
                 "--out", "out"]) == 0
    assert main(["evaluate", "--config", "demo.json", "--features", "out/features.csv",
                 "--out", "out"]) == 0
    for name in ARTIFACTS:
        assert (ws / "out" / name).read_bytes() == reference[name], name


def test_unknown_model_in_config_exits_2(workspace, tmp_path, capsys):
    cfg = dict(CONFIG, model={"kind": "xgboost"}, output=str(tmp_path))
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "--config", str(path), "--cohort", str(workspace / "cohort")]) == 2
    err = capsys.readouterr().err
    assert "xgboost" in err and all(k in err for k in MODEL_KINDS)


def test_unknown_model_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--model", "xgboost"])
    assert exc.value.code == 2
    assert "rf" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path)]) == 2
    assert "no cohort" in capsys.readouterr().err
    assert main(["run", "--cohort", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "c.json").write_text(json.dumps({"colour": "red"}))
    assert main(["run", "--config", str(tmp_path / "c.json")]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_ingest_failure_names_the_file(tmp_path, capsys):
    _synth(tmp_path)
    manifest = tmp_path / "cohort" / "subjects.csv"
    lines = manifest.read_text().splitlines()
    cells = lines[1].split(",")
    lines[1] = ",".join(["S001"] + ["oops"] * (len(cells) - 1))
    manifest.write_text("\n".join(lines) + "\n")
    assert main(["extract", "--cohort", str(tmp_path / "cohort"), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "subjects.csv:2" in err


def test_flags_override_config(workspace, tmp_path):
    assert main(["evaluate", "--config", str(workspace / "demo.json"),
                 "--features", str(workspace / "out" / "features.csv"), "--out", str(tmp_path),
                 "--selector", "none", "--model", "lr", "--seed", "7", "--scenario", "ds4",
                 "--leaky-selection"]) == 0
    doc = json.loads((tmp_path / "eval.json").read_text())
    assert doc["seeds"] == [7, 8] and doc["model"] == "lr" and doc["selector"] == "all"
    assert doc["scenario"] == "ds4" and doc["leaky_selection"]
    assert doc["config"]["n_features"] == 65


def test_model_grid_from_config(workspace, full_run, tmp_path, capsys):
    cfg = dict(CONFIG, selector="none", seeds=[0], model_grid={"max_depth": [1, 2]},
               cohort=str(workspace / "cohort"), output=str(tmp_path))
    (tmp_path / "g.json").write_text(json.dumps(cfg))
    feats = str(full_run / "features.csv")
    assert main(["evaluate", "--config", str(tmp_path / "g.json"), "--features", feats,
                 "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "eval.json").read_text())
    assert doc["config"]["model_grid"] == {"max_depth": [1, 2]}
    assert doc["pipeline_config"]["model_grid"] == {"max_depth": [1, 2]}
    (tmp_path / "bad.json").write_text(json.dumps(dict(cfg, model_grid={"depth": [1]})))
    assert main(["evaluate", "--config", str(tmp_path / "bad.json"), "--features", feats,
                 "--out", str(tmp_path)]) == 2
    assert "depth" in capsys.readouterr().err


def test_synth_no_effect_and_spec_file(tmp_path):
    assert main(["synth", "--out", str(tmp_path), "--n-positive", "2", "--n-negative", "2",
                 "--days", "2", "--no-effect", "emotional", "--no-effect", "glucose_cv"]) == 0
    spec = json.loads((tmp_path / "cohort_spec.json").read_text())
    prof = spec["effect_profile"]
    assert prof["stress_score"][0] == prof["stress_score"][1]
    assert prof["glucose_cv"][0] == prof["glucose_cv"][1]


def test_console_module_help():
    out = subprocess.run([sys.executable, "-m", "wearlab.cli", "--help"], capture_output=True,
                         text=True, check=True).stdout
    for cmd in ("synth", "extract", "stats", "select", "evaluate", "run"):
        assert cmd in out
