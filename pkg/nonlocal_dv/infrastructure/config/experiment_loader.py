import json
import logging
import os
from typing import Optional

from application.domain.models.errors import ConfigError
from application.domain.models.experiment import REQUIRED_BLOCKS, Command, ExperimentConfig

logger = logging.getLogger('nonlocal_dv')

DEFAULT_EXPERIMENT = os.path.join(os.path.dirname(__file__), "default_experiment.json")
TOP_LEVEL = {"command", "kernel", "domain", "density", "drift", "output_dir", "tolerances", "seed", "threads"}


def parse_experiment(raw: dict, command: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("$", "top level must be an object")
    name = command or raw.get("command")
    if name is None:
        raise ConfigError("command", "missing")
    try:
        cmd = Command(name)
    except ValueError:
        raise ConfigError("command", f"unknown command '{name}', expected one of {[c.value for c in Command]}")

    for key in ("kernel", "domain", "density", "drift", "tolerances"):
        if key in raw and not isinstance(raw[key], dict):
            raise ConfigError(key, "expected an object")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", f"expected a nonnegative integer, got {seed!r}")
    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads", f"expected a positive integer, got {threads!r}")

    config = ExperimentConfig(
        command=cmd,
        kernel=raw.get("kernel", {}),
        domain=raw.get("domain", {}),
        density=raw.get("density", {}),
        drift=raw.get("drift", {}),
        blocks={k: v for k, v in raw.items() if k not in TOP_LEVEL},
        output_dir=raw.get("output_dir", "results"),
        tolerances=raw.get("tolerances", {}),
        seed=seed,
        threads=threads,
        raw=raw,
    )
    for block in REQUIRED_BLOCKS[cmd]:
        if config.block(block) is None:
            raise ConfigError(block, f"required by '{cmd.value}'")
    return config


def load_experiment(path: Optional[str] = None, command: Optional[str] = None) -> ExperimentConfig:
    """Read a JSON experiment file; ``verify`` without a file runs the bundled defaults."""
    if path is None:
        if command not in (None, Command.VERIFY.value):
            raise ConfigError("--config", f"'{command}' needs a config file")
        path = DEFAULT_EXPERIMENT
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        raise ConfigError("--config", f"no such file: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("$", f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    logger.info(f"Loaded experiment from {path}")
    return parse_experiment(raw, command)
