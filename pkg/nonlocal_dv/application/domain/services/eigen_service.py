import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import eig, lu_factor, lu_solve

from application.domain.models.eigen import EigenPair
from application.domain.models.errors import InputError, IterationError, PositivityError
from application.domain.models.functions import exterior_step, fractional_profile
from application.domain.models.kernel import AnisotropyField, EllipticityBounds, KernelSpec
from application.domain.models.lattice import AssembledOperator, GridFunction
from application.domain.models.quadrature import QuadratureScheme
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.nonlocal_ops_service import NonlocalOpsService


logger = logging.getLogger('nonlocal_dv')


class EigenService:
    """Principal eigenpair of -(L + B(., h) + V) on the lattice and its characterisations."""

    def __init__(self, discretize_service: DiscretizeService, ops_service: NonlocalOpsService,
                 dense_reference_limit: int = 1500):
        self.discretize_service = discretize_service
        self.ops_service = ops_service
        self.dense_reference_limit = dense_reference_limit

    def _shift(self, op: AssembledOperator) -> float:
        top = self.discretize_service.estimate_shift(op)
        return top + 1e-2 * (1.0 + abs(top))

    def _values(self, phi) -> np.ndarray:
        return phi.values if isinstance(phi, GridFunction) else np.asarray(phi, dtype=float)

    def principal_eigenpair(self, op: AssembledOperator, tol: float = 1e-8, max_iter: int = 500,
                            reference: bool = True) -> EigenPair:
        """Shifted inverse iteration (M - sigma) u_{k+1} = -u_k with sup-normalisation.

        sigma lies to the right of the numerical range, so -(M - sigma)^{-1} keeps positive
        vectors positive and the rightmost eigenvalue of M dominates. The monotone scheme that
        builds lambda1 from subsolutions of the forced problem is ``monotone_iteration``; this
        solver is the fast path used everywhere else.
        """
        if op.drift_oscillation >= 1.0:
            logger.warning(f"osc(h) = {op.drift_oscillation:.3g} >= 1: the eigenfunction may change sign")
        M = op.matrix
        sigma = self._shift(op)
        lu = lu_factor(M - sigma * np.eye(op.size))
        u = np.ones(op.size)
        residual = np.inf
        for k in range(1, max_iter + 1):
            w = lu_solve(lu, -u)
            u = w / w[np.argmax(np.abs(w))]
            Mu = M @ u
            lam = -float(u @ Mu) / float(u @ u)
            r = Mu + lam * u
            residual = float(np.max(np.abs(r)) / np.max(np.abs(u)))
            residual_2 = float(np.linalg.norm(r) / np.linalg.norm(u))
            logger.debug(f"iteration {k}: lambda {lam:.12g}, residual {residual:.3e}")
            if residual < tol and residual_2 < tol:
                break
        else:
            raise IterationError(f"inverse iteration did not converge in {max_iter} steps", last_residual=residual)

        if np.min(u) <= 0.0:
            raise PositivityError(f"principal candidate changes sign (min {np.min(u):.3e})")
        pair = EigenPair(lambda1=lam, phi1=GridFunction(op.lattice, u, name="phi1"), residual=residual,
                         iterations=k, shift=sigma)
        if reference and op.size <= self.dense_reference_limit:
            ref, left = self.dense_principal(op)
            pair.reference_lambda1 = ref
            pair.left_vector = left
        logger.info(f"lambda1 = {lam:.10g} after {k} iterations (residual {residual:.2e}, "
                    f"dense reference {pair.reference_lambda1})")
        return pair

    def dense_principal(self, op: AssembledOperator):
        """Rightmost real eigenvalue of M with a one-signed eigenvector, from the full spectrum."""
        values, left, right = eig(op.matrix, left=True, right=True)
        scale = max(1.0, float(np.max(np.abs(values))))
        best, best_left = None, None
        for idx in np.argsort(-values.real):
            if abs(values[idx].imag) > 1e-8 * scale:
                continue
            vec = right[:, idx].real
            vec = vec / vec[np.argmax(np.abs(vec))]
            if np.all(vec > -1e-10):
                best = -float(values[idx].real)
                lvec = left[:, idx].real
                best_left = lvec / lvec[np.argmax(np.abs(lvec))]
                break
        if best is None:
            logger.warning("Dense spectrum has no real eigenvalue with a one-signed eigenvector")
        return best, best_left

    def sup_characterization_check(self, op: AssembledOperator, phi, lam: float, slack: float = 1e-8) -> dict:
        """Row-wise check of (L + V) phi <= -lam phi for a positive phi."""
        values = self._values(phi)
        if np.any(values <= 0):
            raise InputError("candidate must be strictly positive on interior nodes")
        Lphi = op.matrix @ values
        margins = -Lphi - lam * values
        margin = float(np.min(margins))
        allowance = slack * max(1.0, float(np.max(np.abs(Lphi))))
        return {
            "admissible": bool(margin >= -allowance),
            "margin": margin,
            "best_lambda": float(np.min(-Lphi / values)),
            "lambda": lam,
        }

    def _check_measures(self, measures: Sequence[np.ndarray], size: int) -> List[np.ndarray]:
        checked = []
        for m in measures:
            m = np.asarray(m, dtype=float)
            if m.shape != (size,) or np.any(m < 0) or abs(m.sum() - 1.0) > 1e-9:
                raise InputError("measures must be probability vectors on the interior nodes")
            checked.append(m)
        if not checked:
            raise InputError("measure family is empty")
        return checked

    def minmax_table(self, op: AssembledOperator, measures, tests) -> np.ndarray:
        measures = self._check_measures(measures, op.size)
        ratios = []
        for phi in tests:
            values = self._values(phi)
            if np.any(values <= 0):
                raise InputError("test functions must be strictly positive")
            ratios.append(-(op.matrix @ values) / values)
        if not ratios:
            raise InputError("test family is empty")
        return np.array([[m @ r for r in ratios] for m in measures])

    def minmax_value(self, op: AssembledOperator, measures, tests) -> float:
        """min over measures of max over tests of the integral of -(L + V) phi / phi."""
        return float(np.min(np.max(self.minmax_table(op, measures, tests), axis=1)))

    def test_family(self, op: AssembledOperator, count: int) -> List[np.ndarray]:
        """Nested positive test functions: the first ``count`` inverse-iteration iterates from 1."""
        lu = lu_factor(op.matrix - self._shift(op) * np.eye(op.size))
        family = [np.ones(op.size)]
        for _ in range(count - 1):
            w = lu_solve(lu, -family[-1])
            family.append(w / np.max(np.abs(w)))
        return family

    def stationary_measure(self, op: AssembledOperator, pair: Optional[EigenPair] = None) -> np.ndarray:
        """Normalised product of the right and left principal eigenvectors."""
        pair = pair or self.principal_eigenpair(op, reference=False)
        left = pair.left_vector
        if left is None:
            lu = lu_factor(op.matrix - self._shift(op) * np.eye(op.size))
            left = np.ones(op.size)
            for _ in range(200):
                w = lu_solve(lu, -left, trans=1)
                w = w / w[np.argmax(np.abs(w))]
                if np.max(np.abs(w - left)) < 1e-12:
                    left = w
                    break
                left = w
        mu = np.abs(pair.phi1.values * left)
        return mu / mu.sum()

    def point_masses(self, size: int, nodes: Sequence[int]) -> List[np.ndarray]:
        masses = []
        for i in nodes:
            m = np.zeros(size)
            m[i] = 1.0
            masses.append(m)
        return masses

    def monotone_iteration(self, op: AssembledOperator, lam: float, rhs, shift: Optional[float] = None,
                           max_iter: int = 500, tol: float = 1e-10, blowup: float = 1e12) -> dict:
        """(L + V - C) u_{k+1} = -(lam + C) u_k - f from u_0 = 0.

        Bounded nondecreasing iterates for lam < lambda1, geometric growth above it.
        """
        f = np.broadcast_to(np.asarray(rhs, dtype=float), (op.size,))
        if np.any(f < 0):
            raise InputError("monotone iteration needs a nonnegative right-hand side")
        C = shift if shift is not None else max(0.0, -lam) + max(0.0, self.discretize_service.estimate_shift(op)) + 1.0
        lu = lu_factor(op.matrix - C * np.eye(op.size))
        u = np.zeros(op.size)
        norms = []
        converged = False
        for k in range(1, max_iter + 1):
            nxt = lu_solve(lu, -(lam + C) * u - f)
            step = float(np.max(np.abs(nxt - u)))
            u = nxt
            norms.append(float(np.max(np.abs(u))))
            if step <= tol * max(1.0, norms[-1]):
                converged = True
                break
            if norms[-1] > blowup:
                break
        growth = norms[-1] / norms[-2] if len(norms) > 1 and norms[-2] > 0 else None
        logger.info(f"Monotone iteration at lambda={lam:g}: converged={converged} after {k} steps")
        return {
            "converged": converged,
            "iterations": k,
            "sup_norm": norms[-1],
            "growth": growth,
            "nonnegative": bool(np.all(u >= -1e-12)),
            "solution": GridFunction(op.lattice, u, name="u") if converged else None,
        }

    def maxprinciple_violation_demo(self, s: float, height: float = 200.0, width: float = 0.5,
                                    points: int = 39, quad: Optional[QuadratureScheme] = None,
                                    tol: float = 1e-6) -> dict:
        """(-Delta)^s u + B(h, u) on (-0.95, 0.95) for u = (1 - x^2)_+^{1+s} and h the exterior step.

        This value equals -(L u + B(u, -h)): u is a positive subsolution for the drift -h,
        vanishing outside (-1, 1), so no maximum principle holds once osc(h) is large.
        """
        spec = KernelSpec(AnisotropyField.identity(1), EllipticityBounds(1.0, 1.0, s, 1), normalized=True)
        quad = quad or self.ops_service.build_scheme(spec)
        u = fractional_profile(1, s)
        grid = np.linspace(-0.95, 0.95, points)
        h = exterior_step(1, height, width) if height != 0 else None
        values = []
        for x in grid:
            value = -self.ops_service.apply_LK(u, spec, x, quad)
            if h is not None:
                value += self.ops_service.apply_B(h, u, spec, x, quad)
            values.append(value)
        values = np.array(values)
        u0 = u.value_at(0.0)
        report = {
            "s": s,
            "height": height,
            "width": width,
            "drift_oscillation": abs(height),
            "grid": grid.tolist(),
            "values": values.tolist(),
            "max_value": float(values.max()),
            "u0": u0,
            "violation": bool(values.max() <= tol and u0 > 0),
        }
        logger.info(f"Maximum-principle demo s={s}: max value {report['max_value']:.4g}, violation={report['violation']}")
        return report
