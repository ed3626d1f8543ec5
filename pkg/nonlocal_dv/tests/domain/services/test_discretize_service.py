import unittest

import numpy as np

from application.domain.models.errors import CapacityError, InputError
from application.domain.models.functions import bump, constant, gaussian
from application.domain.models.lattice import DomainDescriptor, GridFunction, LatticeDomain
from tests.utils.builders import ServiceStack, identity_spec, interval_lattice


class TestDiscretizeService(unittest.TestCase):
    def setUp(self):
        self.stack = ServiceStack()
        self.service = self.stack.discretize_service
        self.spec = identity_spec(1, 0.5)
        self.lattice = interval_lattice(0.05)
        self.op = self.service.assemble(self.lattice, self.spec)

    def test_identities_hold_on_the_lattice(self):
        u = GridFunction.sampled(self.lattice, bump(1, [0.1], 0.7))
        v = GridFunction.sampled(self.lattice, gaussian(1, [-0.2], 0.4))
        residuals = self.service.identity_residuals(self.op, u, v)
        scale = float(np.max(np.abs(self.op.diffusion_matrix)))
        self.assertLess(residuals["product_rule"], 1e-10 * scale)
        self.assertLess(residuals["integration_by_parts"], 1e-10 * scale)

    def test_constant_with_matching_exterior_is_annihilated(self):
        u = GridFunction(self.lattice, np.full(self.lattice.n_interior, 2.0), exterior_value=2.0, name="c")
        result = self.service.apply_LK(self.op, u)
        scale = float(np.max(np.abs(self.op.diffusion_matrix)))
        self.assertLess(float(np.max(np.abs(result.values))), 1e-10 * scale)

    def test_exterior_mass_closed_form_on_interval(self):
        x = self.lattice.interior_nodes[:, 0]
        expected = (1.0 / (1.0 - x) + 1.0 / (1.0 + x)) / np.pi
        np.testing.assert_allclose(self.op.exterior_mass, expected, rtol=1e-10)

    def test_energy_form_is_symmetric_and_positive(self):
        u = GridFunction.sampled(self.lattice, bump(1, [0.0], 0.8))
        v = GridFunction.sampled(self.lattice, gaussian(1, [0.3], 0.3))
        self.assertAlmostEqual(self.service.energy_form(self.op, u, v), self.service.energy_form(self.op, v, u),
                               places=10)
        self.assertGreater(self.service.energy_form(self.op, u, u), 0.0)

    def test_seminorm_of_constant_vanishes(self):
        u = GridFunction(self.lattice, np.full(self.lattice.n_interior, 1.5), exterior_value=1.5, name="c")
        self.assertAlmostEqual(self.service.seminorm_HsK(u, self.spec, op=self.op), 0.0, places=8)

    def test_constant_drift_adds_nothing(self):
        op = self.service.assemble(self.lattice, self.spec, h=constant(1, 4.0))
        self.assertLess(float(np.max(np.abs(op.drift_matrix))), 1e-10)
        np.testing.assert_allclose(op.matrix, op.diffusion_matrix, atol=1e-10)

    def test_capacity_limit(self):
        small = ServiceStack(max_nodes=10).discretize_service
        with self.assertRaises(CapacityError):
            small.lattice(DomainDescriptor.interval(-1.0, 1.0), 0.1)

    def test_dimension_mismatch(self):
        with self.assertRaises(InputError):
            self.service.pair_weights(self.lattice, identity_spec(2, 0.5))

    def test_dirichlet_solve_residual(self):
        rhs = np.ones(self.op.size)
        u = self.service.dirichlet_solve(self.op, 0.0, rhs)
        np.testing.assert_allclose(self.op.matrix @ u.values, rhs, atol=1e-8)
        self.assertTrue(np.all(u.values < 0.0))

    def test_torsion_profile(self):
        # -(-Delta)^{1/2} (1 - x^2)^{1/2} = -1 on (-1, 1)
        u = self.service.dirichlet_solve(self.op, 0.0, -np.ones(self.op.size))
        x = self.lattice.interior_nodes[:, 0]
        center = int(np.argmin(np.abs(x)))
        self.assertLess(abs(u.values[center] - 1.0), 0.2)
        self.assertEqual(int(np.argmax(u.values)), center)

    def test_shift_estimate_is_negative_without_potential(self):
        self.assertLess(self.service.estimate_shift(self.op), 0.0)
        shifted = self.op.with_potential(1.0)
        self.assertAlmostEqual(self.service.estimate_shift(shifted), self.service.estimate_shift(self.op) + 1.0,
                               places=8)

    def test_ball_lattice_assembles(self):
        lattice = LatticeDomain(DomainDescriptor.ball([0.0, 0.0], 1.0), 0.25)
        op = self.service.assemble(lattice, identity_spec(2, 0.5))
        self.assertEqual(op.size, lattice.n_interior)
        self.assertTrue(np.all(op.exterior_mass > 0.0))


if __name__ == '__main__':
    unittest.main()
