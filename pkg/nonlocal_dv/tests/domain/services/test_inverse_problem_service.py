import unittest

import numpy as np

from application.domain.models.errors import EllipticityError, InputError, ReconstructionError
from application.domain.models.functions import bump, constant, gaussian
from application.domain.models.kernel import AnisotropyField, EllipticityBounds, KernelSpec
from infrastructure.config.function_catalog import modulated_matrix
from tests.utils.builders import ServiceStack, constant_spec, identity_spec


class TestInverseProblemService(unittest.TestCase):
    def setUp(self):
        stack = ServiceStack()
        self.service = stack.inverse_service
        self.dv_service = stack.dv_service
        self.density = self.dv_service.density_from_root(bump(1))

    def test_fourier_energy_of_gaussian(self):
        # integral of |xi| exp(-xi^2) over R is 1
        self.assertLess(abs(self.service.fourier_energy(np.eye(1), gaussian(1), 0.5) - 1.0), 1e-2)

    def test_fourier_energy_scales_with_matrix(self):
        # B_{cA} = c^{-N/2 - s} B_A
        base = self.service.fourier_energy(np.eye(2), gaussian(2), 0.5)
        scaled = self.service.fourier_energy(4.0 * np.eye(2), gaussian(2), 0.5)
        self.assertLess(abs(scaled / base - 4.0 ** -1.5), 1e-6)

    def test_fourier_energy_needs_spd_matrix(self):
        with self.assertRaises(EllipticityError):
            self.service.fourier_energy(np.array([[1.0, 2.0], [2.0, 1.0]]), gaussian(2), 0.5)
        with self.assertRaises(EllipticityError):
            self.service.fourier_energy(np.array([[1.0, 0.2], [0.0, 1.0]]), gaussian(2), 0.5)
        with self.assertRaises(EllipticityError):
            self.service.fourier_energy(np.eye(3), gaussian(2), 0.5)

    def test_recover_diagonal_matrix(self):
        hidden = np.diag([4.0, 1.0])
        report = self.service.recover_matrix(lambda g: self.service.fourier_energy(hidden, g, 0.5), 2, 0.5)
        error = np.max(np.abs(report.recovered_matrix - hidden)) / np.max(np.abs(hidden))
        self.assertLess(error, 5e-2)
        self.assertLess(abs(report.rho - 1.0), 2e-2)
        self.assertEqual(len(report.probes), 4 * 3)

    def test_recover_rotated_matrix(self):
        for angle in (np.pi / 6.0, -np.pi / 6.0):
            R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
            hidden = R @ np.diag([2.0, 1.0]) @ R.T
            report = self.service.recover_matrix(lambda g: self.service.fourier_energy(hidden, g, 0.5), 2, 0.5)
            recovered = report.recovered_matrix
            self.assertEqual(np.sign(recovered[0, 1]), np.sign(hidden[0, 1]))
            self.assertLess(np.max(np.abs(recovered - hidden)) / np.max(np.abs(hidden)), 5e-2)
            self.assertLess(abs(report.rho - 1.0), 2e-2)

    def test_diffusion_limit_is_scale_free_for_constant_field(self):
        report = self.service.diffusion_limit(identity_spec(1, 0.5), self.density, [0.0])
        values = np.asarray(report["values"])
        self.assertLess(np.max(np.abs(values - values[0])), 1e-8 * abs(values[0]))
        self.assertLess(abs(report["limit"] - report["frozen"]), 1e-8 * abs(report["frozen"]))
        self.assertEqual(report["drift_terms"], [0.0] * 3)

    def test_diffusion_limit_of_separable_product_field(self):
        field = AnisotropyField.separable_product(modulated_matrix(np.eye(1), 0.5), 1)
        spec = KernelSpec(field, EllipticityBounds(2.0, 4.5, 0.5, 1))
        report = self.service.diffusion_limit(spec, self.density, [0.0])
        self.assertLess(abs(report["limit"] - report["frozen"]), 2e-2 * abs(report["frozen"]))

    def test_diffusion_rates_with_off_axis_drift(self):
        h = gaussian(1, [0.15], 0.7, 0.3)
        report = self.service.diffusion_limit(identity_spec(1, 0.5), self.density, [0.0], h=h)
        # the linear drift part decays like lambda^{2s}, the rest at least like lambda^{2-2s}
        self.assertTrue(all(d < 0.0 for d in report["drift_terms"]))
        self.assertGreaterEqual(report["reference_rate"], 0.8)
        self.assertTrue(report["remainder_rate"] is None or report["remainder_rate"] >= 0.8)

    def test_drift_probe_matches_pointwise_operator(self):
        h = bump(1, [0.0], 1.0)
        report = self.service.drift_probe(h, identity_spec(1, 0.5), self.density, [0.0])
        self.assertLess(report["pointwise"], 0.0)
        self.assertLess(abs(report["limit"] - report["pointwise"]), 2e-2 * abs(report["pointwise"]))

    def test_drift_probe_ignores_constant_shift(self):
        spec = identity_spec(1, 0.5)
        h = gaussian(1, scale=0.7, amplitude=0.3)
        first = self.service.drift_probe(h, spec, self.density, [0.0])
        second = self.service.drift_probe(h.add_constant(5.0), spec, self.density, [0.0])
        np.testing.assert_allclose(first["values"], second["values"], rtol=0.0, atol=1e-8)
        flat = self.service.drift_probe(constant(1, 3.0), spec, self.density, [0.0])
        self.assertLess(max(abs(v) for v in flat["values"]), 1e-8)

    def test_compare_operators(self):
        spec = identity_spec(1, 0.5)
        density = self.dv_service.density_from_root(bump(1, [0.0], 0.5))
        h = gaussian(1, scale=0.7, amplitude=0.3)
        same = self.service.compare_operators((spec, h), (spec, h.add_constant(5.0)), density, [0.0])
        self.assertTrue(same["diffusion_match"])
        self.assertTrue(same["drift_match"])
        other = self.service.compare_operators((spec, h), (constant_spec([[4.0]]), h.plus(bump(1, [0.3], 0.5))),
                                               density, [0.0])
        self.assertFalse(other["diffusion_match"])
        self.assertFalse(other["drift_match"])
        self.assertGreater(other["drift_gap"], 1e-3)

    def test_fisher_information_scaling(self):
        fisher = self.dv_service.fisher_information(self.density, 0.01)
        scaled = self.service.rescale_density(self.density, 0.5)
        self.assertGreater(fisher, 0.0)
        self.assertAlmostEqual(self.dv_service.fisher_information(scaled, 0.005) / fisher, 4.0, places=6)

    def test_local_limit_trend(self):
        trend = self.dv_service.local_limit_trend(self.density, [0.3, 0.5, 0.7], 1.0 / 12.0)
        self.assertEqual(trend["s"], [0.3, 0.5, 0.7])
        self.assertEqual(len(trend["energies"]), 3)
        self.assertTrue(all(e > 0.0 for e in trend["energies"]))
        self.assertGreater(trend["fisher"], 0.0)

    def test_recover_rejects_negative_oracle(self):
        hidden = np.diag([4.0, 1.0])
        with self.assertRaises(ReconstructionError):
            self.service.recover_matrix(lambda g: -self.service.fourier_energy(hidden, g, 0.5), 2, 0.5)

    def test_rescale_density(self):
        scaled = self.service.rescale_density(self.density, 0.5, [0.3])
        self.assertAlmostEqual(scaled.support.radius, 0.5)
        self.assertAlmostEqual(float(scaled.support.center[0]), 0.3)
        self.assertAlmostEqual(self.dv_service.mass(scaled.f), 1.0, places=6)
        with self.assertRaises(InputError):
            self.service.rescale_density(self.density, 0.0)

    def test_scales_must_decrease(self):
        with self.assertRaises(InputError):
            self.service.diffusion_limit(identity_spec(1, 0.5), self.density, lambdas=[0.25, 0.5, 0.125])

    def test_constancy_check(self):
        spec = identity_spec(1, 0.5)
        flat = self.service.constancy_check(constant(1, 2.0), spec, [[-0.5], [0.0], [0.5]])
        self.assertTrue(flat["harmonic"])
        self.assertTrue(flat["constant"])
        self.assertTrue(flat["consistent"])
        bumpy = self.service.constancy_check(bump(1, [0.0], 0.5), spec, [[-0.3], [0.0], [0.3]])
        self.assertFalse(bumpy["harmonic"])
        self.assertFalse(bumpy["constant"])
        self.assertTrue(bumpy["consistent"])


if __name__ == '__main__':
    unittest.main()
