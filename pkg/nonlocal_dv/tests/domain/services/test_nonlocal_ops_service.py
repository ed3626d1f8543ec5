import unittest

import numpy as np
from scipy.special import gamma as gamma_fn

from application.domain.models.errors import DomainError, InputError
from application.domain.models.functions import SmoothFunction, bump, constant, fractional_profile, gaussian
from application.domain.services.kernel_field_service import KernelFieldService
from application.domain.services.nonlocal_ops_service import NonlocalOpsService
from tests.utils.builders import identity_spec


class TestNonlocalOpsService(unittest.TestCase):
    def setUp(self):
        self.service = NonlocalOpsService(KernelFieldService())
        self.spec = identity_spec(1, 0.5)
        self.quad = self.service.build_scheme(self.spec)

    def test_constant_is_annihilated(self):
        self.assertEqual(self.service.apply_LK(constant(1, 3.0), self.spec, 0.2, self.quad), 0.0)

    def test_fractional_profile_shape(self):
        # -(-Delta)^{1/2} (1 - x^2)_+^{3/2} = -1.5 (1 - 2 x^2) on (-1, 1)
        u = fractional_profile(1, 0.5)
        for x in (0.0, 0.3, 0.5):
            expected = -1.5 * (1.0 - 2.0 * x * x)
            value = self.service.apply_LK(u, self.spec, x, self.quad)
            self.assertLess(abs(value - expected), 1e-2 * 1.5)

    def test_gaussian_at_center(self):
        for s in (0.3, 0.5, 0.7):
            spec = identity_spec(1, s)
            quad = self.service.build_scheme(spec)
            expected = -2.0 ** (s + 0.5) * gamma_fn(s + 0.5) / np.sqrt(2.0 * np.pi)
            value = self.service.apply_LK(gaussian(1), spec, 0.0, quad)
            self.assertLess(abs(value / expected - 1.0), 1e-2)

    def test_carre_du_champ_symmetry_and_sign(self):
        u, v = bump(1, [0.1], 0.8), gaussian(1, [0.3], 0.5)
        for x in (-0.4, 0.0, 0.6):
            self.assertAlmostEqual(self.service.apply_B(u, v, self.spec, x, self.quad),
                                   self.service.apply_B(v, u, self.spec, x, self.quad), places=10)
            self.assertGreater(self.service.apply_B(u, u, self.spec, x, self.quad), 0.0)

    def test_carre_du_champ_with_constant(self):
        u = bump(1, [0.0], 1.0)
        self.assertAlmostEqual(self.service.apply_B(u, constant(1, 2.0), self.spec, 0.3, self.quad), 0.0, places=14)

    def test_windowed_carre_du_champ(self):
        u, v = bump(1, [0.0], 1.0), bump(1, [0.2], 0.8)
        x = 0.1
        full = self.service.apply_B(u, v, self.spec, x, self.quad)
        window = self.service.apply_B_window(u, v, self.spec, x, self.quad, 10.0)
        # beyond radius 10 both bumps vanish: the numerator is u(x) v(x) / 2 against K = 1 / (pi r^2)
        far = u.value_at(np.array([x])) * v.value_at(np.array([x])) / (10.0 * np.pi)
        self.assertLess(abs(full - window - far), 1e-4 * abs(full))
        with self.assertRaises(InputError):
            self.service.apply_B_window(u, v, self.spec, x, self.quad, 0.5 * self.quad.inner_radius)

    def test_product_rule_pointwise(self):
        u, v = bump(1, [0.1], 0.8), bump(1, [-0.2], 0.9, 0.5)
        scale = abs(self.service.apply_LK(u, self.spec, 0.0, self.quad))
        for x in (-0.3, 0.0, 0.4):
            residual = self.service.product_rule_residual(u, v, self.spec, x, self.quad)
            self.assertLess(abs(residual), 1e-3 * scale)

    def test_drifted_operator_adds_carre_du_champ(self):
        u, h = bump(1), gaussian(1, amplitude=0.3)
        drifted = self.service.apply_drifted(u, h, self.spec, 0.2, self.quad)
        expected = self.service.apply_LK(u, self.spec, 0.2, self.quad) + self.service.apply_B(u, h, self.spec, 0.2,
                                                                                              self.quad)
        self.assertAlmostEqual(drifted, expected, places=12)

    def test_two_dimensional_gaussian(self):
        spec = identity_spec(2, 0.5)
        quad = self.service.build_scheme(spec)
        # (-Delta)^s e^{-|x|^2/2} at 0 in 2D is 2^s Gamma(1 + s)
        value = self.service.apply_LK(gaussian(2), spec, [0.0, 0.0], quad)
        self.assertLess(abs(-value / (2.0 ** 0.5 * gamma_fn(1.5)) - 1.0), 2e-2)

    def test_tail_bound_shrinks_with_outer_radius(self):
        u = gaussian(1)
        near = self.service.tail_bound(u, self.spec, 0.0, self.service.build_scheme(self.spec, outer_radius=10.0))
        far = self.service.tail_bound(u, self.spec, 0.0, self.service.build_scheme(self.spec, outer_radius=40.0))
        self.assertGreater(near, far)
        self.assertGreater(far, 0.0)

    def test_missing_far_value(self):
        linear = SmoothFunction(lambda p: p[:, 0], 1, name="linear")
        with self.assertRaises(InputError):
            self.service.apply_LK(linear, self.spec, 0.0, self.quad)

    def test_bad_radii(self):
        with self.assertRaises(DomainError):
            self.service.build_scheme(self.spec, inner_radius=2.0, outer_radius=1.0)

    def test_unsupported_dimension(self):
        with self.assertRaises(InputError):
            self.service.directions(4)


if __name__ == '__main__':
    unittest.main()
