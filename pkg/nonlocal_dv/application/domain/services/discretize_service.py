import logging
from typing import Optional

import numpy as np
from scipy.linalg import eigvalsh, get_lapack_funcs, lu_factor, lu_solve

from application.domain.models.errors import CapacityError, InputError, SolverError
from application.domain.models.functions import SmoothFunction
from application.domain.models.kernel import KernelSpec
from application.domain.models.lattice import AssembledOperator, DomainDescriptor, GridFunction, LatticeDomain
from application.domain.services.kernel_field_service import KernelFieldService
from application.domain.services.nonlocal_ops_service import NonlocalOpsService


logger = logging.getLogger('nonlocal_dv')


class DiscretizeService:
    """Collocation on a uniform lattice with pairwise kernel weights.

    W_ij = K(x_i, x_j) h^N for i != j, plus the self-cell second moment spread over nearest
    neighbours when ``cell_correction`` is on. The exterior of Omega enters through
    kappa_i = integral of K(x_i, y) over the complement, in closed form for constant fields on
    convex domains and by ray quadrature (or exterior box nodes) otherwise.
    """

    def __init__(self, kernel_service: KernelFieldService, ops_service: NonlocalOpsService,
                 max_nodes: int = 6000, cell_correction: bool = True, chunk_rows: int = 256,
                 angular: Optional[int] = None):
        self.kernel_service = kernel_service
        self.ops_service = ops_service
        self.max_nodes = max_nodes
        self.cell_correction = cell_correction
        self.chunk_rows = chunk_rows
        self.angular = angular

    # lattices

    def lattice(self, descriptor: DomainDescriptor, mesh: float, margin: float = 0.0) -> LatticeDomain:
        lattice = LatticeDomain(descriptor, mesh, margin)
        self.check_capacity(lattice)
        return lattice

    def check_capacity(self, lattice: LatticeDomain):
        if lattice.n_nodes > self.max_nodes:
            raise CapacityError(f"lattice has {lattice.n_nodes} nodes, dense storage is limited to {self.max_nodes}")

    # weights

    def _bases(self, spec: KernelSpec, points: np.ndarray) -> Optional[np.ndarray]:
        return None if spec.field.is_constant else spec.field.base_at(points)

    def _block_weights(self, spec: KernelSpec, xa, xb, ba, bb, vol: float) -> np.ndarray:
        q = spec.field.quadratic_form(xa[:, None, :], xb[None, :, :],
                                      None if ba is None else ba[:, None], None if bb is None else bb[None, :])
        # coincident pairs carry no weight
        q = np.where(q == 0.0, np.inf, q)
        return self.kernel_service.from_form(spec, q) * vol

    def cell_moments(self, spec: KernelSpec, points: np.ndarray) -> np.ndarray:
        """Second moments of K(x, x + z) over the unit cell centred at x, per axis."""
        dirs, weights = self.ops_service.directions(spec.dim, self.angular)
        matrices = spec.field.matrices(points, points)
        q = np.einsum("di,nij,dj->nd", dirs, matrices, dirs)
        reach = 0.5 / np.max(np.abs(dirs), axis=1)
        radial = reach ** (2.0 - 2.0 * spec.s) / (2.0 - 2.0 * spec.s)
        per_dir = weights * radial * q ** (-spec.bounds.exponent)
        return self.kernel_service.scale(spec) * per_dir @ (dirs ** 2)

    def neighbour_pairs(self, lattice: LatticeDomain):
        """Interior pairs (i, j, axis) with x_j = x_i + mesh e_axis."""
        shape = 2 * lattice.counts + 1
        position = -np.ones(lattice.n_nodes, dtype=int)
        ids = np.flatnonzero(lattice.interior_mask)
        position[ids] = np.arange(ids.size)
        pairs = []
        for k in range(lattice.dim):
            stride = int(np.prod(shape[k + 1:]))
            a = ids[lattice.indices[ids, k] < lattice.counts[k]]
            b = a + stride
            keep = lattice.interior_mask[b]
            pairs.append((position[a[keep]], position[b[keep]], k))
        return pairs

    def pair_weights(self, lattice: LatticeDomain, spec: KernelSpec) -> np.ndarray:
        if lattice.dim != spec.dim:
            raise InputError(f"lattice dimension {lattice.dim} differs from kernel dimension {spec.dim}")
        X = lattice.interior_nodes
        n = X.shape[0]
        bases = self._bases(spec, X)
        W = np.empty((n, n))
        for start in range(0, n, self.chunk_rows):
            stop = min(n, start + self.chunk_rows)
            W[start:stop] = self._block_weights(spec, X[start:stop], X, None if bases is None else bases[start:stop],
                                                bases, lattice.cell_volume)
        np.fill_diagonal(W, 0.0)
        W = 0.5 * (W + W.T)
        if self.cell_correction:
            moments = self.cell_moments(spec, X) * lattice.mesh ** (-2.0 * spec.s)
            for i, j, k in self.neighbour_pairs(lattice):
                extra = 0.25 * (moments[i, k] + moments[j, k])
                W[i, j] += extra
                W[j, i] += extra
        return W

    # exterior of Omega

    def _exterior_scheme(self, lattice: LatticeDomain, spec: KernelSpec):
        diameter = float(np.linalg.norm(lattice.descriptor.upper - lattice.descriptor.lower))
        return self.ops_service.build_scheme(spec, inner_radius=0.5 * lattice.mesh,
                                             outer_radius=max(50.0, 4.0 * diameter), outer_order=6,
                                             angular=self.angular, panel_width=0.5)

    def _box_exterior(self, lattice: LatticeDomain, spec: KernelSpec, h: Optional[SmoothFunction]):
        """kappa and the drift exterior integral from exterior box nodes plus a spherical tail."""
        X, Xe = lattice.interior_nodes, lattice.exterior_nodes
        dirs, dir_w = self.ops_service.directions(spec.dim, self.angular)
        lo = lattice.center - lattice.counts * lattice.mesh - 0.5 * lattice.mesh
        hi = lattice.center + lattice.counts * lattice.mesh + 0.5 * lattice.mesh
        radius = np.minimum(np.min(X - lo, axis=1), np.min(hi - X, axis=1))
        bases, bases_e = self._bases(spec, X), self._bases(spec, Xe)
        h_int = np.zeros(X.shape[0]) if h is None else h(X)
        h_ext = np.zeros(Xe.shape[0]) if h is None else h(Xe)
        far_h = 0.0 if h is None else self.ops_service.far_value_of(h)
        kappa = np.zeros(X.shape[0])
        drift = np.zeros(X.shape[0])
        for i in range(X.shape[0]):
            W = self._block_weights(spec, X[i:i + 1], Xe, None if bases is None else bases[i:i + 1], bases_e,
                                    lattice.cell_volume)[0]
            W[np.linalg.norm(Xe - X[i], axis=1) >= radius[i]] = 0.0
            far = X[i] + radius[i] * dirs
            q = spec.field.quadratic_form(X[i], far) / radius[i] ** 2
            tail = self.kernel_service.scale(spec) * float(np.sum(dir_w * q ** (-spec.bounds.exponent))) \
                * radius[i] ** (-2.0 * spec.s) / (2.0 * spec.s)
            kappa[i] = W.sum() + tail
            drift[i] = W @ (h_ext - h_int[i]) + (far_h - h_int[i]) * tail
        return kappa, drift

    def exterior_mass(self, lattice: LatticeDomain, spec: KernelSpec) -> np.ndarray:
        descriptor = lattice.descriptor
        if not descriptor.is_convex:
            return self._box_exterior(lattice, spec, None)[0]
        X = lattice.interior_nodes
        if spec.field.is_constant:
            dirs, dir_w = self.ops_service.directions(spec.dim, self.angular)
            q = np.einsum("di,ij,dj->d", dirs, spec.field.matrix, dirs)
            exits = np.array([descriptor.exit_distance(x, dirs) for x in X])
            per_dir = dir_w * q ** (-spec.bounds.exponent)
            return self.kernel_service.scale(spec) * (exits ** (-2.0 * spec.s) @ per_dir) / (2.0 * spec.s)
        quad = self._exterior_scheme(lattice, spec)
        return np.array([
            self.ops_service.ray_integral(x, spec, quad, descriptor.exit_distance(x, quad.directions), [],
                                          lambda p: np.ones(p.shape[0]), 1.0)
            for x in X
        ])

    def drift_exterior(self, lattice: LatticeDomain, spec: KernelSpec, h: SmoothFunction) -> np.ndarray:
        """Integral of (h(y) - h(x_i)) K(x_i, y) over the complement of Omega."""
        descriptor = lattice.descriptor
        if not descriptor.is_convex:
            return self._box_exterior(lattice, spec, h)[1]
        quad = self._exterior_scheme(lattice, spec)
        far_h = self.ops_service.far_value_of(h)
        out = np.empty(lattice.n_interior)
        for i, x in enumerate(lattice.interior_nodes):
            hx = h.value_at(x)
            out[i] = self.ops_service.ray_integral(x, spec, quad, descriptor.exit_distance(x, quad.directions), [h],
                                                   lambda p: h(p) - hx, far_h - hx)
        return out

    # assembly

    def assemble(self, lattice: LatticeDomain, spec: KernelSpec, h: Optional[SmoothFunction] = None,
                 V=None) -> AssembledOperator:
        self.check_capacity(lattice)
        n = lattice.n_interior
        if n == 0:
            raise InputError("lattice has no interior nodes")
        W = self.pair_weights(lattice, spec)
        kappa = self.exterior_mass(lattice, spec)
        diffusion = W - np.diag(W.sum(axis=1) + kappa)

        if h is None:
            h_int = np.zeros(n)
            drift_ext = np.zeros(n)
            drift = np.zeros((n, n))
        else:
            h_int = h(lattice.interior_nodes)
            drift_ext = self.drift_exterior(lattice, spec, h)
            dh = W * (h_int[None, :] - h_int[:, None])
            drift = 0.5 * dh - np.diag(0.5 * dh.sum(axis=1) + 0.5 * drift_ext)

        potential = np.zeros(n) if V is None else np.broadcast_to(np.asarray(V, dtype=float), (n,)).copy()
        logger.info(f"Assembled operator on {n} interior nodes (mesh {lattice.mesh:g}, s={spec.s:g}, "
                    f"field {spec.field.variant.value})")
        return AssembledOperator(
            lattice=lattice, kernel=spec,
            matrix=diffusion + drift + np.diag(potential),
            diffusion_matrix=diffusion, drift_matrix=drift,
            pair_weights=W, exterior_mass=kappa, potential=potential,
            drift_source=h_int, drift_exterior=drift_ext, drift=h,
        )

    # grid-level operators

    def apply(self, op: AssembledOperator, u: GridFunction) -> GridFunction:
        return u.with_values(op.matrix @ u.values + u.exterior_value * op.exterior_coupling, f"Lu[{u.name}]")

    def apply_LK(self, op: AssembledOperator, u: GridFunction) -> GridFunction:
        return u.with_values(op.diffusion_matrix @ u.values + u.exterior_value * op.exterior_mass, f"LKu[{u.name}]")

    def carre_du_champ(self, op: AssembledOperator, u: GridFunction, v: GridFunction) -> GridFunction:
        W, a, b = op.pair_weights, u.values, v.values
        interior = 0.5 * (W @ (a * b) - a * (W @ b) - b * (W @ a) + a * b * W.sum(axis=1))
        exterior = 0.5 * (u.exterior_value - a) * (v.exterior_value - b) * op.exterior_mass
        return u.with_values(interior + exterior, f"B[{u.name},{v.name}]")

    def integrate_B(self, op: AssembledOperator, u: GridFunction, v: GridFunction) -> float:
        """Lattice integral of B(u, v) over Omega."""
        return float(self.carre_du_champ(op, u, v).values.sum() * op.lattice.cell_volume)

    def identity_residuals(self, op: AssembledOperator, u: GridFunction, v: GridFunction) -> dict:
        """Residuals of L_K(uv) = u L_K v + v L_K u + 2 B(u, v) and of the integral of v L_K u + B(u, v) over R^N."""
        uv = u.times(v)
        Lu, Lv = self.apply_LK(op, u).values, self.apply_LK(op, v).values
        product = self.apply_LK(op, uv).values - u.values * Lv - v.values * Lu - 2.0 * self.carre_du_champ(op, u, v).values
        by_parts = float(np.sum(v.values * Lu) * op.lattice.cell_volume) + self.energy_form(op, u, v)
        return {"product_rule": float(np.max(np.abs(product))), "integration_by_parts": abs(by_parts)}

    def energy_form(self, op: AssembledOperator, u: GridFunction, v: GridFunction) -> float:
        """Integral of B(u, v) over R^N; equals -h^N v^T M_L u for exterior-zero grid functions."""
        W, a, b = op.pair_weights, u.values, v.values
        pairs = float(np.sum(a * b * W.sum(axis=1)) - a @ W @ b)
        outside = float(np.sum((a - u.exterior_value) * (b - v.exterior_value) * op.exterior_mass))
        return (pairs + outside) * op.lattice.cell_volume

    def drift_energy(self, op: AssembledOperator, f: GridFunction) -> float:
        """Integral of B(f, h) over R^N for an exterior-zero f, as -integral of f L_K h."""
        h = op.drift_source
        lh = op.pair_weights @ h - h * op.pair_weights.sum(axis=1) + op.drift_exterior
        return float(-np.sum(f.values * lh) * op.lattice.cell_volume)

    def seminorm_HsK(self, u: GridFunction, spec: KernelSpec, region_mask=None,
                     op: Optional[AssembledOperator] = None) -> float:
        """Squared seminorm: double sum of (u(x) - u(y))^2 K over the region.

        Without a mask the region is R^2N minus (Omega^c)^2.
        """
        W = op.pair_weights if op is not None else self.pair_weights(u.lattice, spec)
        vol = u.lattice.cell_volume
        a = u.values
        if region_mask is not None:
            mask = np.asarray(region_mask, dtype=bool)
            a, W = a[mask], W[np.ix_(mask, mask)]
            return float(max(0.0, 2.0 * (np.sum(a * a * W.sum(axis=1)) - a @ W @ a)) * vol)
        kappa = op.exterior_mass if op is not None else self.exterior_mass(u.lattice, spec)
        pairs = 2.0 * (np.sum(a * a * W.sum(axis=1)) - a @ W @ a)
        outside = 2.0 * np.sum((a - u.exterior_value) ** 2 * kappa)
        return float(max(0.0, pairs + outside) * vol)

    # Dirichlet problems

    def estimate_shift(self, op: AssembledOperator) -> float:
        """C0: largest eigenvalue of the symmetric part of the operator matrix."""
        sym = 0.5 * (op.matrix + op.matrix.T)
        return float(eigvalsh(sym, subset_by_index=[op.size - 1, op.size - 1])[0])

    def dirichlet_solve(self, op: AssembledOperator, C: float, rhs, rcond_floor: float = 1e-13) -> GridFunction:
        """Solve (L + B(., h) + V - C) u = rhs with u = 0 outside Omega."""
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (op.size,))
        shift = self.estimate_shift(op)
        if C < shift:
            logger.warning(f"Shift C={C:g} is below the coercivity estimate {shift:.4g}")
        system = op.matrix - C * np.eye(op.size)
        lu, piv = lu_factor(system, check_finite=True)
        if np.any(np.diag(lu) == 0.0):
            raise SolverError("Dirichlet system is singular", condition=np.inf)
        gecon = get_lapack_funcs("gecon", (lu,))
        rcond, _ = gecon(lu, np.linalg.norm(system, 1), norm="1")
        if rcond < rcond_floor:
            raise SolverError("Dirichlet system is ill-conditioned", condition=1.0 / max(rcond, 1e-300))
        u = lu_solve((lu, piv), rhs)
        residual = float(np.linalg.norm(system @ u - rhs))
        logger.debug(f"Dirichlet solve: residual {residual:.3e}, condition {1.0 / rcond:.3e}")
        return GridFunction(op.lattice, u, name="u", metadata={"residual": residual, "condition": 1.0 / rcond,
                                                                "shift": C, "shift_estimate": shift})
