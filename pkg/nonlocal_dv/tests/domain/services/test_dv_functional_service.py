import unittest

import numpy as np

from application.domain.models.errors import DomainError, InputError
from application.domain.models.functions import bump, dipole, gaussian
from tests.utils.builders import ServiceStack, identity_spec


class TestDVFunctionalService(unittest.TestCase):
    def setUp(self):
        stack = ServiceStack()
        self.discretize = stack.discretize_service
        self.service = stack.dv_service
        self.spec = identity_spec(1, 0.5)
        self.density = self.service.density_from_root(bump(1))
        self.lattice = self.service.density_lattice(self.density, 1.0 / 12.0)
        self.op = self.discretize.assemble(self.lattice, self.spec)
        self.f = self.service.density_grid(self.density, self.lattice)

    def test_density_is_normalised(self):
        self.assertAlmostEqual(self.f.integral(), 1.0, places=12)
        self.assertAlmostEqual(self.service.mass(self.density.f), 1.0, places=6)

    def test_mass_needs_compact_support(self):
        with self.assertRaises(InputError):
            self.service.mass(gaussian(1))

    def test_closed_form_matches_direct_minimisation(self):
        closed = self.service.I_closed_form_h0(self.f, self.op)
        direct = self.service.minimize_rayleigh(self.op, self.f)
        self.assertGreater(closed, 0.0)
        self.assertLess(abs(direct["I"] - closed), 1e-3 * closed)

    def test_sqrt_is_a_critical_point(self):
        residuals = self.service.sqrt_minimizer_residuals(self.op, self.f)
        self.assertLess(residuals["first_order"], 1e-6)
        self.assertLess(residuals["product_identity"], 1e-6)

    def test_rayleigh_integral_at_sqrt(self):
        root = self.f.with_values(np.sqrt(self.f.values))
        closed = self.service.I_closed_form_h0(self.f, self.op)
        self.assertAlmostEqual(self.service.rayleigh_integral(root, self.op, self.f), -closed, places=8)

    def test_rayleigh_integral_needs_positive_u(self):
        u = self.f.with_values(np.ones(self.f.values.size))
        u.values[self.f.values.argmax()] = 0.0
        with self.assertRaises(DomainError):
            self.service.rayleigh_integral(u, self.op, self.f)

    def test_decomposition_without_drift(self):
        result = self.service.decomposition(self.f, self.op)
        self.assertAlmostEqual(result["E"], 0.0, places=12)
        self.assertAlmostEqual(result["I"], self.service.I_closed_form_h0(self.f, self.op), places=10)

    def test_decomposition_with_drift_matches_direct(self):
        op = self.discretize.assemble(self.lattice, self.spec, dipole(1, amplitude=0.5))
        direct = self.service.minimize_rayleigh(op, self.f)["I"]
        decomposed = self.service.decomposition(self.f, op)
        self.assertLess(abs(decomposed["I"] - direct), 1e-2 * abs(direct))
        self.assertGreaterEqual(decomposed["E"], decomposed["floor"] - 1e-12)

    def test_constant_shift_of_drift(self):
        h = dipole(1, amplitude=0.3)
        first = self.service.decomposition(self.f, self.discretize.assemble(self.lattice, self.spec, h))
        second = self.service.decomposition(self.f, self.discretize.assemble(self.lattice, self.spec,
                                                                               h.add_constant(2.0)))
        self.assertLess(abs(first["I"] - second["I"]), 1e-7 * abs(first["I"]))

    def test_q_form_minimum(self):
        self.assertAlmostEqual(self.service.q_scalar_min(0.0), 0.0, places=10)
        self.assertAlmostEqual(self.service.q_scalar_min(1.0), np.sqrt(3.0) / 2.0, places=6)
        self.assertAlmostEqual(self.service.q_closed_form(1.0), np.sqrt(3.0) / 2.0, places=12)
        for hbar in np.linspace(-1.0, 1.0, 21):
            self.assertGreaterEqual(self.service.q_scalar_min(hbar), -1e-10)

    def test_displayed_variant_goes_negative_for_small_constant(self):
        # cross = 1 and C = 0.5: sqrt(1 - 0.81) - 1 + 0.25 * 0.81 < 0
        self.assertLess(self.service.q_scalar_min(0.9, C=0.5, cross=1.0), 0.0)

    def test_duality_lower_bounds(self):
        x = self.lattice.interior_nodes[:, 0]
        family = [np.zeros(self.op.size), -0.5 * x ** 2, -2.0 * x ** 2]
        report = self.service.dual_gap(self.f, self.op, family)
        scale = abs(report["I"])
        for entry in report["entries"]:
            self.assertGreaterEqual(entry["gap"], -1e-6 * scale)
        self.assertAlmostEqual(report["gap"], report["I"] - report["best"], places=12)


if __name__ == '__main__':
    unittest.main()
