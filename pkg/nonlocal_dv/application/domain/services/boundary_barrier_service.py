import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.special import gamma as gamma_fn

from application.domain.models.barrier import BarrierConfig
from application.domain.models.errors import DomainError, EllipticityError, InputError, ResolutionError
from application.domain.models.functions import distance_power
from application.domain.models.kernel import EllipticityBounds, KernelSpec
from application.domain.models.lattice import DomainKind
from application.domain.services.extrapolation import Extrapolator
from application.domain.services.nonlocal_ops_service import NonlocalOpsService


logger = logging.getLogger('nonlocal_dv')


def _spd(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1] or not np.allclose(A, A.T, rtol=1e-12, atol=1e-14):
        raise EllipticityError(f"matrix of shape {A.shape} is not symmetric")
    if np.min(np.linalg.eigvalsh(A)) <= 0:
        raise EllipticityError("matrix is not positive definite")
    return A


class BoundaryBarrierService:
    """Boundary-layer integral J, the constant C* and the scan of L_K d^alpha + B(h, d^alpha)."""

    def __init__(self, ops_service: NonlocalOpsService, extrapolator: Extrapolator, threads: int = 1,
                 quadrature_tolerance: float = 1e-10, rate_tolerance: float = 0.2):
        self.ops_service = ops_service
        self.extrapolator = extrapolator
        self.threads = threads
        self.quadrature_tolerance = quadrature_tolerance
        self.rate_tolerance = rate_tolerance

    # constants

    def C_star(self, N: int, s: float) -> float:
        """Integral over R^{N-1} of (1 + |t|^2)^{-(N+2s)/2}; 1 for N = 1 (empty integral)."""
        if N < 1:
            raise DomainError(f"dimension must be positive, got {N}")
        if N == 1:
            return 1.0
        return float(np.pi ** (0.5 * (N - 1)) * gamma_fn(0.5 * (1.0 + 2.0 * s)) / gamma_fn(0.5 * (N + 2.0 * s)))

    def C_star_quadrature(self, N: int, s: float) -> float:
        p = 0.5 * (N + 2.0 * s)
        tol = self.quadrature_tolerance
        if N == 1:
            return 1.0
        if N == 2:
            value, _ = quad(lambda t: (1.0 + t * t) ** -p, -np.inf, np.inf, epsabs=tol, epsrel=tol)
        elif N == 3:
            value, _ = dblquad(lambda t2, t1: (1.0 + t1 * t1 + t2 * t2) ** -p, -np.inf, np.inf, -np.inf, np.inf,
                               epsabs=tol, epsrel=tol)
        else:
            # spherical shells in R^{N-1}
            area = 2.0 * np.pi ** (0.5 * (N - 1)) / gamma_fn(0.5 * (N - 1))
            radial, _ = quad(lambda r: r ** (N - 2) * (1.0 + r * r) ** -p, 0.0, np.inf, epsabs=tol, epsrel=tol)
            value = area * radial
        return float(value)

    def C_star_check(self, N: int, s: float) -> dict:
        closed, direct = self.C_star(N, s), self.C_star_quadrature(N, s)
        return {"N": N, "s": s, "closed_form": closed, "quadrature": direct, "difference": abs(closed - direct)}

    # boundary-layer integral

    def J_quadrature(self, A, y1: float, s: float) -> float:
        """Integral over y' of (y^T A y)^{-(N+2s)/2} at fixed y_1, through y' = |y_1| t."""
        A = _spd(A)
        if y1 == 0:
            raise DomainError("J is singular at y1 = 0")
        N = A.shape[0]
        p = 0.5 * (N + 2.0 * s)
        tol = self.quadrature_tolerance
        prefactor = abs(y1) ** (-(1.0 + 2.0 * s))
        sign = np.sign(y1)
        if N == 1:
            return float((A[0, 0] * y1 * y1) ** -p)
        if N == 2:
            form = lambda t: A[0, 0] + 2.0 * sign * A[0, 1] * t + A[1, 1] * t * t
            value, error = quad(lambda t: form(t) ** -p, -np.inf, np.inf, epsabs=tol, epsrel=tol, limit=200)
        elif N == 3:
            def integrand(t2, t1):
                v = np.array([sign, t1, t2])
                return float(v @ A @ v) ** -p
            value, error = dblquad(integrand, -np.inf, np.inf, -np.inf, np.inf, epsabs=tol, epsrel=tol)
        else:
            raise InputError(f"direct quadrature of J supports N <= 3, got {N}")
        if error > 1e-6 * abs(value):
            raise ResolutionError(f"J quadrature error estimate {error:.2e} for value {value:.6g}")
        return float(prefactor * value)

    def J_closed_form(self, A, y1: float, s: float) -> float:
        """|y_1|^{-(1+2s)} |det A'|^s |det A|^{-(1+2s)/2} C*, A' the trailing block of A."""
        A = _spd(A)
        if y1 == 0:
            raise DomainError("J is singular at y1 = 0")
        N = A.shape[0]
        det_tail = np.linalg.det(A[1:, 1:]) if N > 1 else 1.0
        return float(abs(y1) ** (-(1.0 + 2.0 * s)) * abs(det_tail) ** s
                     * abs(np.linalg.det(A)) ** (-(1.0 + 2.0 * s) / 2.0) * self.C_star(N, s))

    def J_block_form(self, A, y1: float, s: float) -> float:
        """a_11^{-s} |y_1|^{-(1+2s)} |det A|^{-1/2} C*, valid when the first row decouples."""
        A = _spd(A)
        if np.any(np.abs(A[0, 1:]) > 1e-14 * np.abs(A).max()):
            raise InputError("block form needs a vanishing coupling between y_1 and y'")
        if y1 == 0:
            raise DomainError("J is singular at y1 = 0")
        N = A.shape[0]
        return float(A[0, 0] ** (-s) * abs(y1) ** (-(1.0 + 2.0 * s)) * abs(np.linalg.det(A)) ** -0.5
                     * self.C_star(N, s))

    # barrier scan

    def _spec(self, config: BarrierConfig, points: np.ndarray) -> KernelSpec:
        field = config.field
        matrices = np.array([field.at(x, x) for x in points]) if not field.is_constant else field.matrix[None]
        eigen = np.linalg.eigvalsh(matrices)
        bounds = EllipticityBounds(float(eigen.min()), float(eigen.max()), config.s, config.domain.dim)
        return KernelSpec(field, bounds, normalized=config.normalized)

    def _geometry(self, config: BarrierConfig):
        domain = config.domain
        if domain.kind == DomainKind.BALL:
            center, radius = domain.center, domain.radius
        else:
            center, radius = 0.5 * (domain.lower + domain.upper), float(0.5 * (domain.upper - domain.lower)[0])
        normal = np.zeros(domain.dim)
        normal[0] = 1.0
        return center, radius, normal

    def barrier_scan(self, config: BarrierConfig) -> dict:
        """d^{2s-alpha} (L_K d^alpha + B(h, d^alpha)) at points x with d(x) in [d_min, delta].

        Points lie on the inward normal through center + radius e_1; the inner quadrature ball at
        distance d has radius d/4 so it never crosses the boundary.
        """
        center, radius, normal = self._geometry(config)
        distances = np.geomspace(config.d_min, config.delta, config.points)
        points = center + (radius - distances)[:, None] * normal
        spec = self._spec(config, points)
        u = distance_power(config.domain.dim, config.alpha, center, radius)
        s, alpha = config.s, config.alpha

        def evaluate(k):
            scheme = self.ops_service.build_scheme(spec, inner_radius=0.25 * distances[k])
            lk = self.ops_service.apply_LK(u, spec, points[k], scheme)
            drift = self.ops_service.apply_B(config.h, u, spec, points[k], scheme)
            near = self.ops_service.apply_B_window(config.h, u, spec, points[k], scheme, 0.5 * distances[k])
            return lk, drift, near

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                raw = list(pool.map(evaluate, range(len(distances))))
        else:
            raw = [evaluate(k) for k in range(len(distances))]
        lk = np.array([r[0] for r in raw])
        drift = np.array([r[1] for r in raw])
        near = np.array([r[2] for r in raw])
        weight = distances ** (2.0 * s - alpha)
        normalized = weight * (lk + drift)

        # the window |y - x| < d/2 rescales exactly; the rest of B tends to a constant when the rate is positive
        expected_rate = alpha - 2.0 * s + 1.0
        drift_rate = global_drift_rate = drift_rate_ok = bound = None
        if np.all(np.abs(near) > 0):
            drift_rate = self.extrapolator.fitted_rate(distances, near)
            drift_rate_ok = bool(abs(drift_rate - expected_rate) <= self.rate_tolerance)
        if np.all(np.abs(drift) > 0):
            global_drift_rate = self.extrapolator.fitted_rate(distances, drift)
            bound = "sharp" if abs(global_drift_rate - expected_rate) <= self.rate_tolerance else "not sharp"

        if alpha > s:
            prediction = "positive"
            holds = bool(normalized.min() > 0)
        elif alpha < s:
            prediction = "negative"
            holds = bool(normalized.max() < 0)
        else:
            prediction, holds = "threshold", None
        report = {
            "alpha": alpha,
            "s": s,
            "d_min": config.d_min,
            "delta": config.delta,
            "distances": distances.tolist(),
            "normalized": normalized.tolist(),
            "drift_term": drift.tolist(),
            "min": float(normalized.min()),
            "max": float(normalized.max()),
            "prediction": prediction,
            "sign_holds": holds,
            "near_drift_term": near.tolist(),
            "drift_rate": drift_rate,
            "expected_drift_rate": expected_rate,
            "drift_rate_ok": drift_rate_ok,
            "global_drift_rate": global_drift_rate,
            "drift_bound": bound,
            "normalized_drift_max": float(np.max(np.abs(weight * drift))),
        }
        logger.info(f"Barrier scan alpha={alpha:g}, s={s:g}: normalised values in [{report['min']:.4g}, "
                    f"{report['max']:.4g}], prediction {prediction} holds={holds}")
        if drift_rate_ok is False:
            logger.warning(f"Near-field drift rate {drift_rate:.3f} misses {expected_rate:.3f}")
        if bound == "not sharp":
            logger.info(f"Full drift term rate {global_drift_rate:.3f}: the bound d^{expected_rate:.3f} is not sharp")
        return report

    def scan_rows(self, report: dict):
        return [[d, v, b] for d, v, b in zip(report["distances"], report["normalized"], report["drift_term"])]
