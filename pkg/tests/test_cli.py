import json
import os
from pathlib import Path

import pytest
import yaml

from horofill.cli import ConfigError, config_hash, execute, load_config, main, strip_runtime

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, doc, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def test_list_shows_every_kind(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for k in ("fill-sweep", "hard-sphere", "pipeline", "cover-audit", "whitney-audit",
              "chain-identities", "deformation", "building"):
        assert k in out
    main(["list", "--verbose"])
    assert "experiment." in capsys.readouterr().out


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as ex:
        main(["run", "--config", "x.yaml", "--frobnicate"])
    assert ex.value.code == 2


def test_unknown_key_is_config_error(tmp_path):
    cfg = write(tmp_path, {"kind": "whitney-audit", "experiment": {"L": [4], "k": [0]}, "colour": 1})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    with pytest.raises(ConfigError):
        load_config(cfg)


def test_missing_seed_is_config_error(tmp_path):
    doc = {"kind": "fill-sweep", "space": {"builder": "grid", "L": 4, "dims": 2},
           "experiment": {"loops": "random", "k": 1, "sizes": [2, 4, 6, 8]}}
    assert main(["run", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 2


def test_wrong_subcommand_is_config_error(tmp_path):
    cfg = str(CONFIGS / "c09_whitney.yaml")
    assert main(["audit", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_tiny_cell_cap_exits_three(tmp_path):
    cfg = str(CONFIGS / "c04_grid_squares.yaml")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--cap-cells", "5"]) == 3


def test_whitney_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "w"
    assert main(["run", "--config", str(CONFIGS / "c09_whitney.yaml"), "--out", str(out)]) == 0
    rec = json.loads((out / "results.json").read_text())
    assert rec["passed"] and rec["kind"] == "whitney-audit"
    assert any(f.suffix == ".csv" for f in out.iterdir())
    assert "PASS" in capsys.readouterr().out


def test_environment_overrides_output(tmp_path, monkeypatch):
    monkeypatch.setenv("HOROFILL_OUT", str(tmp_path / "env"))
    assert main(["run", "--config", str(CONFIGS / "c09_whitney.yaml")]) == 0
    assert (tmp_path / "env" / "results.json").exists()
    assert main(["run", "--config", str(CONFIGS / "c09_whitney.yaml"), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "results.json").exists()


def test_runs_are_deterministic(tmp_path):
    cfg = load_config(str(CONFIGS / "c04_grid_squares.yaml"))
    a = execute(cfg, str(tmp_path / "a"), 1)
    b = execute(cfg, str(tmp_path / "b"), 1)
    assert strip_runtime(a) == strip_runtime(b)
    assert a["config_hash"] == config_hash(cfg)
    assert (tmp_path / "a" / "sweep.csv").read_text() == (tmp_path / "b" / "sweep.csv").read_text()


def test_every_shipped_config_validates():
    files = sorted(CONFIGS.glob("*.yaml"))
    assert len(files) == 10
    for f in files:
        load_config(str(f))
