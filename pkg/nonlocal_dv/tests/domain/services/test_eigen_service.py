import unittest

import numpy as np

from application.domain.models.errors import InputError
from application.domain.models.functions import bump
from tests.utils.builders import ServiceStack, identity_spec, interval_lattice


class TestEigenService(unittest.TestCase):
    def setUp(self):
        stack = ServiceStack()
        self.service = stack.eigen_service
        self.lattice = interval_lattice(0.1)
        self.op = stack.discretize_service.assemble(self.lattice, identity_spec(1, 0.5))
        self.pair = self.service.principal_eigenpair(self.op)

    def test_iterative_matches_dense(self):
        self.assertIsNotNone(self.pair.reference_lambda1)
        self.assertLess(abs(self.pair.lambda1 - self.pair.reference_lambda1), 1e-6 * self.pair.lambda1)
        self.assertTrue(np.all(self.pair.phi1.values > 0.0))

    def test_half_laplacian_on_interval(self):
        # lambda1 of the half Laplacian on (-1, 1) is about 1.158
        self.assertGreater(self.pair.lambda1, 0.9)
        self.assertLess(self.pair.lambda1, 1.4)

    def test_constant_potential_shifts_eigenvalue(self):
        shifted = self.service.principal_eigenpair(self.op.with_potential(2.0), reference=False)
        self.assertAlmostEqual(shifted.lambda1, self.pair.lambda1 - 2.0, places=6)

    def test_sup_characterization(self):
        phi, lam = self.pair.phi1, self.pair.lambda1
        self.assertTrue(self.service.sup_characterization_check(self.op, phi, lam, slack=1e-6)["admissible"])
        self.assertFalse(self.service.sup_characterization_check(self.op, phi, 1.1 * lam)["admissible"])

    def test_sup_characterization_needs_positive_candidate(self):
        values = self.pair.phi1.values.copy()
        values[0] = -1.0
        with self.assertRaises(InputError):
            self.service.sup_characterization_check(self.op, values, self.pair.lambda1)

    def test_minmax_with_principal_data(self):
        mu = self.service.stationary_measure(self.op, self.pair)
        self.assertAlmostEqual(float(mu.sum()), 1.0, places=12)
        value = self.service.minmax_value(self.op, [mu], [self.pair.phi1])
        self.assertLess(abs(value - self.pair.lambda1), 1e-6 * self.pair.lambda1)

    def test_minmax_bounded_by_lambda1_on_nested_families(self):
        mu = self.service.stationary_measure(self.op, self.pair)
        family = self.service.test_family(self.op, 6)
        values = [self.service.minmax_value(self.op, [mu], family[:k]) for k in range(1, len(family) + 1)]
        for value in values:
            self.assertLessEqual(value, self.pair.lambda1 * (1.0 + 1e-6))
        for earlier, later in zip(values, values[1:]):
            self.assertGreaterEqual(later, earlier)

    def test_measures_must_be_probabilities(self):
        with self.assertRaises(InputError):
            self.service.minmax_value(self.op, [np.full(self.op.size, 2.0 / self.op.size)], [self.pair.phi1])
        with self.assertRaises(InputError):
            self.service.minmax_value(self.op, [], [self.pair.phi1])

    def test_point_masses(self):
        masses = self.service.point_masses(self.op.size, [0, 3])
        self.assertEqual(len(masses), 2)
        self.assertEqual(float(masses[1][3]), 1.0)
        self.assertEqual(float(masses[1].sum()), 1.0)

    def test_monotone_iteration_below_and_above_lambda1(self):
        below = self.service.monotone_iteration(self.op, 0.5 * self.pair.lambda1, 1.0)
        self.assertTrue(below["converged"])
        self.assertTrue(below["nonnegative"])
        self.assertIsNotNone(below["solution"])
        above = self.service.monotone_iteration(self.op, 1.2 * self.pair.lambda1, 1.0)
        self.assertFalse(above["converged"])
        self.assertIsNone(above["solution"])
        self.assertGreater(above["growth"], 1.0)

    def test_monotone_iteration_needs_nonnegative_rhs(self):
        with self.assertRaises(InputError):
            self.service.monotone_iteration(self.op, 0.5, -1.0)

    def test_bounded_drift_keeps_positive_eigenfunction(self):
        stack = ServiceStack()
        op = stack.discretize_service.assemble(self.lattice, identity_spec(1, 0.5), h=bump(1, [0.2], 0.5, 0.4))
        pair = stack.eigen_service.principal_eigenpair(op)
        self.assertTrue(np.all(pair.phi1.values > 0.0))
        self.assertLess(abs(pair.lambda1 - pair.reference_lambda1), 1e-6 * abs(pair.lambda1))

    def test_no_violation_without_drift(self):
        report = self.service.maxprinciple_violation_demo(0.5, height=0.0, points=9)
        self.assertFalse(report["violation"])
        self.assertGreater(report["max_value"], 0.0)
        self.assertEqual(len(report["values"]), 9)


if __name__ == '__main__':
    unittest.main()
