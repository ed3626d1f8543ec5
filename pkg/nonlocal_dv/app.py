"""app.py

This module defines the command-line entry point of the nonlocal DV lab.

The application:
- Initializes logging (console plus a rotating log file) for the 'nonlocal_dv' logger.
- Reads one JSON experiment file and applies the --output-dir, --seed and --threads overrides.
- Builds the experiment controller through the dependency injection container (`NonlocalDVContainer`)
  and runs the requested command.

Exit codes:
- 0: the command finished and its artifacts were written.
- 2: the configuration or an input was invalid (the message names the offending field).
- 3: a numerical method failed, or `verify` found a failing property.

Usage:
    python app.py verify
    python app.py eigen --config experiments/eigen.json --output-dir results/eigen --seed 7

"""

import argparse
import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from dependency_injector import providers

from application.domain.models.errors import ConfigError
from application.domain.models.experiment import Command
from containers import NonlocalDVContainer
from infrastructure.config.experiment_loader import load_experiment
from infrastructure.config.settings import get_settings
from interfaces.controllers.experiment_controller import EXIT_CONFIG


def init_logger(level: str = "INFO", log_file: str = os.path.join("logs", "nonlocal_dv.log")):
    logger = logging.getLogger('nonlocal_dv')
    logger.setLevel(level)
    if logger.handlers:
        # main() may run several times in one process
        for handler in logger.handlers:
            handler.setLevel(level)
        return logger

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=5*1024*1024,  # 5 MB
            backupCount=5
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-dv",
                                     description="Experiments on nonlocal operators and their Donsker-Varadhan functional.")
    parser.add_argument("command", nargs="?", choices=[c.value for c in Command],
                        help="pipeline to run; defaults to the 'command' field of the config file")
    parser.add_argument("--config", help="JSON experiment file (optional for verify)")
    parser.add_argument("--output-dir", help="directory for the JSON and CSV artifacts")
    parser.add_argument("--seed", type=int, help="seed for every random draw")
    parser.add_argument("--threads", type=int, help="worker threads for probe batches and barrier scans")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logger = init_logger(settings.log_level, settings.log_file)

    try:
        config = load_experiment(args.config, args.command)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", f"expected a nonnegative integer, got {args.seed}")
            config.seed = args.seed
        threads = args.threads if args.threads is not None else config.raw.get("threads", settings.threads)
        if threads < 1:
            raise ConfigError("--threads", f"expected a positive integer, got {threads}")
        config.threads = threads
        if args.output_dir:
            config.output_dir = args.output_dir
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG

    container = NonlocalDVContainer()
    container.output_dir.override(providers.Object(config.output_dir))
    container.threads.override(providers.Object(config.threads))
    container.max_nodes.override(providers.Object(settings.max_nodes))
    controller = container.experiment_controller()
    return controller.run(config)


if __name__ == '__main__':
    sys.exit(main())
