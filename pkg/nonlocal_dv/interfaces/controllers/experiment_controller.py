import logging

import numpy as np

from application.domain.models.errors import NumericalError
from application.domain.models.experiment import Command, ExperimentConfig
from application.use_cases.barrier_use_cases import BarrierUseCases
from application.use_cases.dv_functional_use_cases import DVFunctionalUseCases
from application.use_cases.eigen_use_cases import EigenUseCases
from application.use_cases.inverse_problem_use_cases import InverseProblemUseCases
from application.use_cases.operator_use_cases import OperatorUseCases
from application.use_cases.verification_use_cases import VerificationUseCases

logger = logging.getLogger('nonlocal_dv')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ExperimentController:
    def __init__(self, operator_use_cases: OperatorUseCases, eigen_use_cases: EigenUseCases,
                 dv_functional_use_cases: DVFunctionalUseCases, inverse_problem_use_cases: InverseProblemUseCases,
                 barrier_use_cases: BarrierUseCases, verification_use_cases: VerificationUseCases):
        self.routes = {
            Command.OPERATOR_EVAL: operator_use_cases.evaluate,
            Command.EIGEN: eigen_use_cases.solve,
            Command.DV_FUNCTIONAL: dv_functional_use_cases.evaluate,
            Command.RECOVER_MATRIX: inverse_problem_use_cases.recover_matrix,
            Command.RECOVER_DRIFT: inverse_problem_use_cases.recover_drift,
            Command.BARRIER_CHECK: barrier_use_cases.check,
            Command.VERIFY: verification_use_cases.run,
        }
        self.last_result = None

    def run(self, config: ExperimentConfig) -> int:
        """Run the command named in the config; 2 for bad input, 3 for numerical failure."""
        logger.info(f"Running '{config.command.value}' (seed {config.seed}, config {config.digest()[:12]})")
        try:
            self.last_result = self.routes[config.command](config)
        except np.linalg.LinAlgError as e:
            logger.error(f"Linear algebra failure in '{config.command.value}': {e}")
            return EXIT_NUMERICAL
        except ValueError as e:
            logger.error(f"Invalid input for '{config.command.value}': {e}")
            return EXIT_CONFIG
        except NumericalError as e:
            logger.error(f"Numerical failure in '{config.command.value}': {type(e).__name__}: {e}")
            return EXIT_NUMERICAL
        if config.command == Command.VERIFY and not self.last_result["passed"]:
            failed = [k for k, v in self.last_result["checks"].items() if not v["passed"]]
            logger.error(f"Verification failed: {failed}")
            return EXIT_NUMERICAL
        logger.info(f"'{config.command.value}' finished, wrote {self.last_result.get('files', [])}")
        return EXIT_OK
