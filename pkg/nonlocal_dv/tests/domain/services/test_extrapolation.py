import unittest

import numpy as np

from application.domain.services.extrapolation import Extrapolator


class TestExtrapolator(unittest.TestCase):
    def setUp(self):
        self.extrapolator = Extrapolator()
        self.lambdas = [0.5, 0.25, 0.125]

    def test_power_law_is_recovered(self):
        values = [3.0 + 2.0 * lam ** 1.5 for lam in self.lambdas]
        fit = self.extrapolator.richardson(self.lambdas, values)
        self.assertAlmostEqual(fit.limit, 3.0, places=10)
        self.assertAlmostEqual(fit.rate, 1.5, places=10)
        self.assertTrue(fit.monotone)
        self.assertAlmostEqual(fit.error_estimate, 2.0 * 0.125 ** 1.5, places=10)

    def test_flat_sequence(self):
        fit = self.extrapolator.richardson(self.lambdas, [1.0, 1.0, 1.0])
        self.assertEqual(fit.limit, 1.0)
        self.assertIsNone(fit.rate)
        self.assertTrue(fit.monotone)

    def test_non_monotone_sequence_returns_finest_value(self):
        fit = self.extrapolator.richardson(self.lambdas, [1.0, 2.0, 1.5])
        self.assertEqual(fit.limit, 1.5)
        self.assertIsNone(fit.rate)
        self.assertFalse(fit.monotone)

    def test_needs_three_values(self):
        with self.assertRaises(ValueError):
            self.extrapolator.richardson(self.lambdas[:2], [1.0, 2.0])

    def test_fitted_rate(self):
        errors = [0.7 * lam ** 2 for lam in self.lambdas]
        self.assertAlmostEqual(self.extrapolator.fitted_rate(self.lambdas, errors), 2.0, places=10)
        self.assertAlmostEqual(self.extrapolator.fitted_rate(self.lambdas, -np.asarray(errors)), 2.0, places=10)


if __name__ == '__main__':
    unittest.main()
