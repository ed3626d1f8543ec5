import unittest
from unittest.mock import MagicMock

import numpy as np

from application.domain.models.errors import ConfigError, IterationError, ReconstructionError
from application.domain.models.experiment import Command, ExperimentConfig
from interfaces.controllers.experiment_controller import (
    EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, ExperimentController,
)


class TestExperimentController(unittest.TestCase):

    def setUp(self):
        self.operator_use_cases = MagicMock()
        self.eigen_use_cases = MagicMock()
        self.dv_functional_use_cases = MagicMock()
        self.inverse_problem_use_cases = MagicMock()
        self.barrier_use_cases = MagicMock()
        self.verification_use_cases = MagicMock()
        self.controller = ExperimentController(
            self.operator_use_cases, self.eigen_use_cases, self.dv_functional_use_cases,
            self.inverse_problem_use_cases, self.barrier_use_cases, self.verification_use_cases,
        )

    def test_routes_to_use_case(self):
        self.inverse_problem_use_cases.recover_matrix.return_value = {"files": ["recover_matrix.json"]}
        config = ExperimentConfig(command=Command.RECOVER_MATRIX, blocks={"hidden_matrix": {"matrix": [[1.0]]}})

        self.assertEqual(self.controller.run(config), EXIT_OK)
        self.inverse_problem_use_cases.recover_matrix.assert_called_once_with(config)
        self.inverse_problem_use_cases.recover_drift.assert_not_called()
        self.assertEqual(self.controller.last_result["files"], ["recover_matrix.json"])

    def test_every_command_has_a_route(self):
        self.assertEqual(set(self.controller.routes), set(Command))

    def test_invalid_input_exits_with_config_code(self):
        self.eigen_use_cases.solve.side_effect = ConfigError("eigen.shift", "expected a number")
        self.assertEqual(self.controller.run(ExperimentConfig(command=Command.EIGEN)), EXIT_CONFIG)

    def test_numerical_failure_exits_with_numerical_code(self):
        self.eigen_use_cases.solve.side_effect = IterationError("no convergence", last_residual=1.0)
        self.assertEqual(self.controller.run(ExperimentConfig(command=Command.EIGEN)), EXIT_NUMERICAL)

        self.inverse_problem_use_cases.recover_matrix.side_effect = ReconstructionError("negative determinant")
        self.assertEqual(self.controller.run(ExperimentConfig(command=Command.RECOVER_MATRIX)), EXIT_NUMERICAL)

    def test_linear_algebra_failure_is_numerical(self):
        self.eigen_use_cases.solve.side_effect = np.linalg.LinAlgError("Singular matrix")
        self.assertEqual(self.controller.run(ExperimentConfig(command=Command.EIGEN)), EXIT_NUMERICAL)

    def test_failed_verification(self):
        self.verification_use_cases.run.return_value = {
            "passed": False,
            "checks": {"q_form": {"passed": True}, "closed_forms": {"passed": False}},
        }
        self.assertEqual(self.controller.run(ExperimentConfig(command=Command.VERIFY)), EXIT_NUMERICAL)

    def test_passed_verification(self):
        self.verification_use_cases.run.return_value = {"passed": True, "checks": {}, "files": []}
        self.assertEqual(self.controller.run(ExperimentConfig(command=Command.VERIFY)), EXIT_OK)


if __name__ == '__main__':
    unittest.main()
