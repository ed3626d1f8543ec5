import unittest

import numpy as np

from application.domain.models.errors import DomainError, EllipticityError, InputError
from application.domain.models.kernel import AnisotropyField, EllipticityBounds, KernelSpec
from application.domain.services.kernel_field_service import KernelFieldService
from infrastructure.config.function_catalog import modulated_matrix
from tests.utils.builders import constant_spec, identity_spec


class TestKernelFieldService(unittest.TestCase):
    def setUp(self):
        self.service = KernelFieldService()

    def test_normalization_constant(self):
        self.assertAlmostEqual(self.service.normalization_constant(1, 0.5), 1.0 / np.pi, places=12)
        self.assertAlmostEqual(self.service.normalization_constant(3, 0.5), 1.0 / np.pi ** 2, places=12)

    def test_normalization_constant_rejects_bad_order(self):
        with self.assertRaises(DomainError):
            self.service.normalization_constant(1, 1.0)

    def test_kernel_eval_identity(self):
        spec = identity_spec(1, 0.5, normalized=False)
        self.assertAlmostEqual(self.service.kernel_eval(spec, 0.0, 2.0), 0.25)
        normalized = identity_spec(1, 0.5)
        self.assertAlmostEqual(self.service.kernel_eval(normalized, 0.0, 2.0), 0.25 / np.pi)

    def test_kernel_eval_anisotropic(self):
        spec = constant_spec([[4.0, 0.0], [0.0, 1.0]], s=0.5, normalized=False)
        # q = 4 * 1^2, exponent (2 + 1) / 2
        self.assertAlmostEqual(self.service.kernel_eval(spec, [0.0, 0.0], [1.0, 0.0]), 4.0 ** -1.5)

    def test_kernel_is_normalised_by_default(self):
        spec = KernelSpec(AnisotropyField.identity(1), EllipticityBounds(1.0, 1.0, 0.5, 1))
        self.assertTrue(spec.normalized)
        self.assertAlmostEqual(self.service.kernel_eval(spec, [0.0], [2.0]), 0.25 / np.pi, places=14)

    def test_kernel_is_symmetric(self):
        field = AnisotropyField.separable_sum(modulated_matrix(np.eye(2), 0.5), 2)
        spec = KernelSpec(field, EllipticityBounds(1.0, 3.0, 0.3, 2))
        x, y = np.array([0.1, -0.4]), np.array([0.7, 0.2])
        self.assertAlmostEqual(self.service.kernel_eval(spec, x, y), self.service.kernel_eval(spec, y, x), places=14)

    def test_coincident_points(self):
        with self.assertRaises(DomainError):
            self.service.kernel_eval(identity_spec(2), [0.5, 0.5], [0.5, 0.5])

    def test_wrong_coordinates(self):
        with self.assertRaises(InputError):
            self.service.kernel_eval(identity_spec(2), [0.5], [0.1, 0.2])

    def test_non_positive_matrix(self):
        with self.assertRaises(EllipticityError):
            AnisotropyField.constant([[1.0, 2.0], [2.0, 1.0]])

    def test_validate_ellipticity(self):
        spec = constant_spec([[1.0, 0.0], [0.0, 4.0]])
        rng = np.random.default_rng(0)
        report = self.service.validate_ellipticity(spec, self.service.random_sample_pairs(2, 50, rng))
        self.assertTrue(report["passed"])
        self.assertGreaterEqual(report["min_quotient"], 1.0 - 1e-12)
        self.assertLessEqual(report["max_quotient"], 4.0 + 1e-12)
        self.assertEqual(report["swap_asymmetry"], 0.0)

    def test_validate_ellipticity_detects_violation(self):
        field = AnisotropyField.constant([[1.0, 0.0], [0.0, 4.0]])
        spec = KernelSpec(field, EllipticityBounds(2.0, 4.0, 0.5, 2))
        pairs = [(np.zeros(2), np.ones(2), np.array([1.0, 0.0]))]
        self.assertFalse(self.service.validate_ellipticity(spec, pairs)["passed"])

    def test_validate_ellipticity_needs_samples(self):
        with self.assertRaises(InputError):
            self.service.validate_ellipticity(identity_spec(1), [])


if __name__ == '__main__':
    unittest.main()
