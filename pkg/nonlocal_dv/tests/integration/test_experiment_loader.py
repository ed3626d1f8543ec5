import json

import pytest

from application.domain.models.errors import ConfigError
from application.domain.models.experiment import Command
from infrastructure.config.experiment_loader import load_experiment, parse_experiment
from infrastructure.config.function_catalog import build_domain, build_function, build_kernel


@pytest.fixture(scope="module")
def config_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("configs")


def test_default_experiment_is_verify():
    config = load_experiment()
    assert config.command == Command.VERIFY
    assert "q_form" in config.block("verify")


def test_command_argument_wins_over_file(config_dir):
    path = config_dir / "matrix.json"
    path.write_text(json.dumps({"command": "eigen", "hidden_matrix": {"matrix": [[1.0]]}}), encoding="utf-8")
    config = load_experiment(str(path), "recover-matrix")
    assert config.command == Command.RECOVER_MATRIX
    assert config.block("hidden_matrix") == {"matrix": [[1.0]]}


def test_malformed_json(config_dir):
    path = config_dir / "broken.json"
    path.write_text('{"command": ', encoding="utf-8")
    with pytest.raises(ConfigError) as error:
        load_experiment(str(path))
    assert error.value.path == "$"


def test_missing_file(config_dir):
    with pytest.raises(ConfigError) as error:
        load_experiment(str(config_dir / "absent.json"))
    assert error.value.path == "--config"


@pytest.mark.parametrize("raw, path", [
    ([], "$"),
    ({}, "command"),
    ({"command": "unknown"}, "command"),
    ({"command": "verify", "seed": -3}, "seed"),
    ({"command": "verify", "threads": 0}, "threads"),
    ({"command": "verify", "kernel": [1, 2]}, "kernel"),
    ({"command": "eigen", "kernel": {"dim": 1, "s": 0.5}}, "domain"),
    ({"command": "recover-drift", "kernel": {"dim": 1, "s": 0.5}, "density": {"f": {}}}, "drifts"),
])
def test_invalid_experiments(raw, path):
    with pytest.raises(ConfigError) as error:
        parse_experiment(raw)
    assert error.value.path == path


def test_digest_ignores_output_location():
    first = parse_experiment({"command": "verify", "seed": 4, "output_dir": "a"})
    second = parse_experiment({"command": "verify", "seed": 4, "output_dir": "b", "threads": 3})
    third = parse_experiment({"command": "verify", "seed": 5})
    assert first.digest() == second.digest()
    assert first.digest() != third.digest()


@pytest.mark.parametrize("build, block, path", [
    (lambda b: build_kernel(b), {"dim": 1, "s": None}, "kernel.s"),
    (lambda b: build_kernel(b), {"dim": "one", "s": 0.5}, "kernel.dim"),
    (lambda b: build_kernel(b), {"dim": 1, "s": 0.5, "gamma": None, "Gamma": 1.0}, "kernel.gamma"),
    (lambda b: build_function(b, 1), {"family": "gaussian", "scale": 0.5, "offset": None}, "function.offset"),
    (lambda b: build_domain(b), {"kind": "interval", "lower": None, "upper": 1.0}, "domain"),
])
def test_non_numeric_fields(build, block, path):
    with pytest.raises(ConfigError) as error:
        build(block)
    assert error.value.path == path
