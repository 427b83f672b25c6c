# vim: set expandtab shiftwidth=4 softtabstop=4:

import json

import pytest

from sbmts.core.config import ExperimentConfig, Hypothesis
from sbmts.core.errors import ConfigError


def test_defaults():
    config = ExperimentConfig()
    assert config.model == "sbm"
    assert config.k == 2
    assert config.methods == ["sbmts"]
    assert config.hypothesis == Hypothesis.ALTERNATIVE
    assert config.threads is None
    assert config.path is None


@pytest.mark.parametrize(
    ("key", "value"),
    [
        ("n", 0),
        ("n", 2.5),
        ("k", True),
        ("level", 1.0),
        ("level", "high"),
        ("methods", []),
        ("methods", ["sbmts", "magic"]),
        ("model", "ergm"),
        ("bandwidth", -1.0),
        ("seed", -3),
        ("seed", 2**64),
        ("mmd_self_norm", "other"),
        ("grid", [{"n": 100, "grid": []}]),
        ("grid", [{"colour": 1}]),
        ("null", [0.5]),
        ("select_k", {"perturbation": 1.5}),
        ("select_k", {"depth": 3}),
    ],
)
def test_invalid_values_are_rejected(key, value):
    config = ExperimentConfig()
    with pytest.raises(ConfigError):
        config.from_dict({key: value})


def test_from_dict_is_atomic():
    config = ExperimentConfig()
    with pytest.raises(ConfigError):
        config.from_dict({"n": 50, "level": 2.0})
    assert config.n == 300
    with pytest.raises(ConfigError, match="Unknown config keys"):
        config.from_dict({"n": 50, "size": 3})
    assert config.n == 300


def test_accepted_values():
    config = ExperimentConfig()
    config.from_dict({"k": "auto", "methods": "nclm", "hypothesis": "null", "level": 0.01, "n": 50.0})
    assert config.k == "auto"
    assert config.methods == ["nclm"]
    assert config.hypothesis == Hypothesis.NULL
    assert config.n == 50
    config.hypothesis = Hypothesis.ALTERNATIVE
    assert config.to_dict()["hypothesis"] == "alternative"
    config.methods = ["nclm", "sbmts", "nclm"]
    assert config.methods == ["nclm", "sbmts"]


def test_select_k_merges_with_defaults():
    config = ExperimentConfig()
    config.select_k = {"kmax": 4}
    assert config.select_k == {"k0": 10, "kmax": 4, "perturbation": 0.1, "replicates": 20}


def test_save_and_load_round_trip(tmp_path):
    config = ExperimentConfig()
    config.from_dict({"n": 120, "methods": ["sbmts", "ase_mmd"], "grid": [{"n": 60}]})
    path = tmp_path / "experiment.json"
    config.save_to(str(path))

    loaded = ExperimentConfig(str(path))
    assert loaded.to_dict() == config.to_dict()
    assert loaded.config_hash() == config.config_hash()
    assert loaded.path == str(path)
    assert len(config.config_hash()) == 16


def test_hash_changes_with_settings():
    config = ExperimentConfig()
    other = config.with_overrides({"n": 100})
    assert other.n == 100
    assert config.n == 300
    assert other.config_hash() != config.config_hash()


def test_invalid_files(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"n": 100,\n  "k": }')
    with pytest.raises(ConfigError, match="broken.json:2"):
        ExperimentConfig(str(broken))

    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        ExperimentConfig(str(listed))

    with pytest.raises(ConfigError, match="Cannot read"):
        ExperimentConfig(str(tmp_path / "missing.json"))


def test_files_model_needs_existing_data(tmp_path):
    config = ExperimentConfig()
    with pytest.raises(ConfigError, match="manifest"):
        config.from_dict({"model": "files"})
    with pytest.raises(ConfigError, match="does not exist"):
        config.from_dict({"model": "files", "data": str(tmp_path / "nowhere.json")})
    assert config.model == "sbm"


def test_relative_data_path_resolves_against_config(tmp_path):
    (tmp_path / "manifest.json").write_text(json.dumps({"classes": {}}))
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"model": "files", "data": "manifest.json"}))
    config = ExperimentConfig(str(path))
    assert config.data == str(tmp_path / "manifest.json")
