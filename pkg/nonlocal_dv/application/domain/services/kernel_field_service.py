import logging
from typing import Iterable, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from application.domain.models.errors import DomainError, EllipticityError, InputError
from application.domain.models.kernel import KernelSpec


logger = logging.getLogger('nonlocal_dv')


def normalization_constant(N: int, s: float) -> float:
    """c_{N,s} = 4^s Gamma(N/2 + s) / (pi^{N/2} |Gamma(-s)|)."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"fractional order s must lie in (0,1), got {s}")
    if N < 1:
        raise DomainError(f"dimension must be positive, got {N}")
    return float(4.0 ** s * gamma_fn(0.5 * N + s) / (np.pi ** (0.5 * N) * abs(gamma_fn(-s))))


class KernelFieldService:
    def normalization_constant(self, N: int, s: float) -> float:
        return normalization_constant(N, s)

    def scale(self, spec: KernelSpec) -> float:
        return normalization_constant(spec.dim, spec.s) if spec.normalized else 1.0

    def from_form(self, spec: KernelSpec, q: np.ndarray) -> np.ndarray:
        """Kernel value for a quadratic-form value q = z^T A z."""
        q = np.asarray(q, dtype=float)
        if np.any(q <= 0):
            raise EllipticityError(f"quadratic form value {float(np.min(q)):.3e} is not positive")
        return self.scale(spec) * q ** (-spec.bounds.exponent)

    def kernel_values(self, spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.all(np.broadcast_to(x, np.broadcast(x, y).shape) == y, axis=-1)):
            raise DomainError("kernel evaluated at coincident points")
        return self.from_form(spec, spec.field.quadratic_form(x, y))

    def kernel_eval(self, spec: KernelSpec, x, y) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if x.shape != (spec.dim,) or y.shape != (spec.dim,):
            raise InputError(f"points must have {spec.dim} coordinates")
        return float(self.kernel_values(spec, x[None, :], y[None, :])[0])

    def validate_ellipticity(self, spec: KernelSpec, sample_pairs: Iterable[Tuple]) -> dict:
        pairs = list(sample_pairs)
        if not pairs:
            raise InputError("ellipticity validation needs at least one sample")
        x = np.array([np.atleast_1d(p[0]) for p in pairs], dtype=float)
        y = np.array([np.atleast_1d(p[1]) for p in pairs], dtype=float)
        xi = np.array([np.atleast_1d(p[2]) for p in pairs], dtype=float)
        norms = np.sum(xi ** 2, axis=-1)
        if np.any(norms == 0):
            raise InputError("test vectors must be nonzero")
        matrices = spec.field.matrices(x, y)
        quotients = np.einsum("mi,mij,mj->m", xi, matrices, xi) / norms
        asymmetry = float(np.max(np.abs(matrices - spec.field.matrices(y, x))))
        lo, hi = float(quotients.min()), float(quotients.max())
        passed = spec.bounds.gamma <= lo and hi <= spec.bounds.Gamma_
        if not passed:
            logger.warning(f"Ellipticity bounds violated: quotients in [{lo:.4g}, {hi:.4g}], "
                           f"bounds [{spec.bounds.gamma:.4g}, {spec.bounds.Gamma_:.4g}]")
        return {
            "min_quotient": lo,
            "max_quotient": hi,
            "gamma": spec.bounds.gamma,
            "Gamma": spec.bounds.Gamma_,
            "swap_asymmetry": asymmetry,
            "samples": len(pairs),
            "passed": bool(passed),
        }

    def random_sample_pairs(self, dim: int, count: int, rng: np.random.Generator, radius: float = 2.0):
        x = rng.uniform(-radius, radius, size=(count, dim))
        y = rng.uniform(-radius, radius, size=(count, dim))
        xi = rng.normal(size=(count, dim))
        return list(zip(x, y, xi))
