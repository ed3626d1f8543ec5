import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from application.domain.models.density import DensitySpec
from application.domain.models.errors import (
    CapacityError, EllipticityError, InputError, OracleInconsistencyError, ReconstructionError, ResolutionError,
)
from application.domain.models.functions import Sphere, SmoothFunction, as_points, gaussian
from application.domain.models.kernel import KernelSpec
from application.domain.models.lattice import LatticeDomain
from application.domain.models.reconstruction import ProbeKind, ProbeResult, ReconstructionReport
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.dv_functional_service import DVFunctionalService
from application.domain.services.extrapolation import Extrapolator
from application.domain.services.kernel_field_service import KernelFieldService, normalization_constant
from application.domain.services.nonlocal_ops_service import NonlocalOpsService


logger = logging.getLogger('nonlocal_dv')

DEFAULT_LAMBDAS = (0.5, 0.25, 0.125)
# FFT points per axis by dimension
FOURIER_POINTS = {1: 1024, 2: 128, 3: 48}


def axis_swap(N: int, k: int) -> np.ndarray:
    E = np.eye(N)
    E[[0, k]] = E[[k, 0]]
    return E


def plane_rotation(N: int, k: int, m: int, sign: float = -1.0) -> np.ndarray:
    """Orthogonal E whose first row is (e_k + sign e_m) / sqrt 2."""
    rows = [np.zeros(N), np.zeros(N)]
    rows[0][k], rows[0][m] = 1.0, sign
    rows[1][k], rows[1][m] = 1.0, -sign
    rows = [r / np.sqrt(2.0) for r in rows]
    rows += [np.eye(N)[j] for j in range(N) if j not in (k, m)]
    return np.array(rows)


def probe_constant(N: int, s: float, normalized: bool = True) -> float:
    """lambda^{2s-1} limit of the Gaussian probe energy for A = Identity."""
    value = gamma_fn(s + 0.5) * np.pi ** (0.5 * (N - 1))
    return float(value if normalized else value / normalization_constant(N, s))


class InverseProblemService:
    """Scaling limits of I(f_lambda), the Fourier form of the energy and recovery of A and L_K h."""

    def __init__(self, kernel_service: KernelFieldService, ops_service: NonlocalOpsService,
                 discretize_service: DiscretizeService, dv_service: DVFunctionalService,
                 extrapolator: Extrapolator, threads: int = 1, cells: int = 12,
                 resolution_tolerance: float = 1e-2, consistency_tolerance: float = 5e-2):
        self.kernel_service = kernel_service
        self.ops_service = ops_service
        self.discretize_service = discretize_service
        self.dv_service = dv_service
        self.extrapolator = extrapolator
        self.threads = threads
        self.cells = cells
        self.resolution_tolerance = resolution_tolerance
        self.consistency_tolerance = consistency_tolerance

    # rescaled densities

    def rescale_density(self, f: DensitySpec, lambda_: float, x0=None,
                        lattice: Optional[LatticeDomain] = None) -> DensitySpec:
        """f_lambda(x) = lambda^{-N} f(c + (x - x0) / lambda), c the center of f."""
        if lambda_ <= 0:
            raise InputError(f"scale must be positive, got {lambda_}")
        N = f.dim
        x0 = f.center if x0 is None else as_points(x0, N)[0]
        c = f.center

        def rescaled(fn: SmoothFunction, power: float) -> SmoothFunction:
            factor = lambda_ ** (-power * N)
            grad = None
            if fn.gradient_evaluator is not None:
                grad = lambda p: factor / lambda_ * fn.gradient_evaluator(c + (p - x0) / lambda_)
            support = Sphere(x0 + lambda_ * (fn.support.center - c), lambda_ * fn.support.radius)
            return SmoothFunction(lambda p: factor * fn.evaluator(c + (p - x0) / lambda_), N,
                                  gradient_evaluator=grad, support=support, far_value=0.0,
                                  name=f"{fn.name}_lambda", params={"lambda": lambda_})

        scaled = DensitySpec(
            f=rescaled(f.f, 1.0),
            sqrt_f=None if f.sqrt_f is None else rescaled(f.sqrt_f, 0.5),
            sqrt_f_regularity=f.sqrt_f_regularity, center=x0, lambda_=f.lambda_ * lambda_,
            name=f"{f.name}[lambda={lambda_:g}]",
        )
        if lattice is not None:
            reach = np.linalg.norm(scaled.support.center - lattice.center) + scaled.support.radius
            half = 0.5 * (lattice.descriptor.upper - lattice.descriptor.lower).min() + lattice.margin
            if reach > half:
                raise CapacityError(f"{scaled.name}: support of radius {scaled.support.radius:g} escapes the lattice")
        mass = self.dv_service.mass(scaled.f)
        if abs(mass - 1.0) > 1e-6:
            logger.warning(f"{scaled.name}: mass {mass:.10f} after rescaling")
        return scaled

    def _terms_at(self, spec: KernelSpec, f: DensitySpec, h: Optional[SmoothFunction]) -> Tuple[float, float]:
        """I(f) on a lattice scaled with f, and its linear drift part integral of f L_K h / 2."""
        lattice = self.dv_service.density_lattice(f, f.support.radius / self.cells)
        op = self.discretize_service.assemble(lattice, spec, h)
        grid = self.dv_service.density_grid(f, lattice)
        if h is None:
            return self.dv_service.I_closed_form_h0(grid, op), 0.0
        result = self.dv_service.decomposition(grid, op)
        return result["I"], -0.5 * result["drift"]

    def _value_at(self, spec: KernelSpec, f: DensitySpec, h: Optional[SmoothFunction]) -> float:
        return self._terms_at(spec, f, h)[0]

    def _rate_against(self, lambdas, values, reference: float) -> Optional[float]:
        errors = np.abs(np.asarray(values) - reference)
        if np.all(errors > 1e-12 * max(1.0, abs(reference))):
            return self.extrapolator.fitted_rate(lambdas, errors)
        return None

    def diffusion_limit(self, spec: KernelSpec, f: DensitySpec, x0=None,
                        lambdas: Sequence[float] = DEFAULT_LAMBDAS, h: Optional[SmoothFunction] = None) -> dict:
        """lambda^{2s} I(f_lambda) on lattices scaled with lambda, extrapolated to lambda -> 0.

        Besides the Richardson rate the report fits two rates against the frozen closed form:
        ``reference_rate`` for the full values and ``remainder_rate`` once the linear drift part
        lambda^{2s} integral of f_lambda L_K h / 2 is taken out.
        """
        lambdas = [float(l) for l in lambdas]
        if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
            raise InputError(f"scale sequence must decrease, got {lambdas}")
        x0 = f.center if x0 is None else as_points(x0, spec.dim)[0]
        values, drift_terms = [], []
        for lam in lambdas:
            total, drift = self._terms_at(spec, self.rescale_density(f, lam, x0), h)
            values.append(lam ** (2.0 * spec.s) * total)
            drift_terms.append(lam ** (2.0 * spec.s) * drift)
            logger.debug(f"lambda={lam:g}: normalised functional {values[-1]:.10g}")
        fit = self.extrapolator.richardson(lambdas, values)
        frozen_spec = spec.with_field(spec.field.frozen(x0))
        frozen = self._value_at(frozen_spec, self.rescale_density(f, 1.0, x0), None)
        rate = self._rate_against(lambdas, values, fit.limit)
        remainders = [v - d for v, d in zip(values, drift_terms)]
        report = {"limit": fit.limit, "rate": rate, "richardson_rate": fit.rate, "monotone": fit.monotone,
                  "lambdas": lambdas, "values": values, "frozen": frozen, "x0": x0.tolist(),
                  "drift_terms": drift_terms,
                  "reference_rate": self._rate_against(lambdas, values, frozen),
                  "remainder_rate": self._rate_against(lambdas, remainders, frozen),
                  "max_remainder": float(np.max(np.abs(np.asarray(remainders) - frozen)))}
        logger.info(f"Diffusion limit at x0={x0.tolist()}: {fit.limit:.8g} (frozen {frozen:.8g}, rate {rate})")
        return report

    # Fourier side

    def _box(self, g: SmoothFunction) -> Tuple[np.ndarray, float]:
        if g.support is not None:
            return g.support.center, 2.0 * g.support.radius
        if "scale" in g.params:
            return np.asarray(g.params.get("center", np.zeros(g.dim)), dtype=float), 8.0 * g.params["scale"]
        return np.zeros(g.dim), 8.0

    def _spectral_sum(self, values: np.ndarray, B: np.ndarray, s: float, dx: float, shifted: bool) -> float:
        """Sum over frequencies of <B xi, xi>^s |g^(xi)|^2 dxi^N, on the FFT grid or on the half-shifted one."""
        N, n = values.ndim, values.shape[0]
        dxi = 2.0 * np.pi / (n * dx)
        if shifted:
            j = np.arange(n)
            phase = np.ones(values.shape, dtype=complex)
            for a in range(N):
                shape = [1] * N
                shape[a] = n
                phase = phase * np.exp(-1j * np.pi * j / n).reshape(shape)
            values = values * phase
        power = np.abs(np.fft.fftn(values)) ** 2 * dx ** (2 * N)
        freqs = 2.0 * np.pi * np.fft.fftfreq(n, dx) + (0.5 * dxi if shifted else 0.0)
        axes = np.meshgrid(*([freqs] * N), indexing="ij", sparse=True)
        form = sum(B[a, b] * axes[a] * axes[b] for a in range(N) for b in range(N))
        return float(np.sum(np.clip(form, 0.0, None) ** s * power) * dxi ** N)

    def _spectral_energy(self, base: SmoothFunction, B: np.ndarray, s: float, n: int, half_width: float,
                         center: np.ndarray) -> float:
        N = base.dim
        dx = 2.0 * half_width / n
        axis = (np.arange(n) - n // 2) * dx
        grid = np.meshgrid(*[center[a] + axis for a in range(N)], indexing="ij")
        values = base(np.stack([g.ravel() for g in grid], axis=-1)).reshape((n,) * N)
        # trapezoid and midpoint sums weighted to cancel the leading error of the |xi_1|^{2s} cusp
        alpha = (1.0 - 2.0 ** (-2.0 * s)) / (2.0 - 2.0 ** (-2.0 * s))
        return alpha * self._spectral_sum(values, B, s, dx, False) + \
            (1.0 - alpha) * self._spectral_sum(values, B, s, dx, True)

    def fourier_energy(self, A, g: SmoothFunction, s: float, normalized: bool = True,
                       points: Optional[int] = None, check: bool = True) -> float:
        """Integral of B_A(g, g) = (2 pi)^{-N} |det A|^{-1/2} integral of <A^{-1} xi, xi>^s |g^(xi)|^2.

        A function g = base(T x) is transformed through its base: the frequency form becomes
        T A^{-1} T^T and the prefactor picks up |det T|^{-1}.
        """
        A = np.atleast_2d(np.asarray(A, dtype=float))
        N = g.dim
        if A.shape != (N, N) or not np.allclose(A, A.T, atol=1e-12 * np.abs(A).max()):
            raise EllipticityError(f"matrix of shape {A.shape} is not a symmetric {N}x{N} matrix")
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise EllipticityError("matrix is not positive definite")
        base = g.base if g.base is not None else g
        T = g.linear_map if g.linear_map is not None else np.eye(N)
        B = T @ np.linalg.inv(A) @ T.T
        center, half_width = self._box(base)
        n = points or FOURIER_POINTS.get(N)
        if n is None:
            raise InputError(f"no FFT resolution configured for dimension {N}")
        value = self._spectral_energy(base, B, s, n, half_width, center)
        if check:
            doubled = self._spectral_energy(base, B, s, 2 * n, 2.0 * half_width, center)
            spread = abs(doubled - value) / max(abs(doubled), 1e-300)
            if spread > self.resolution_tolerance:
                raise ResolutionError(f"FFT energy changes by {spread:.2e} under grid doubling")
            value = doubled
        prefactor = (2.0 * np.pi) ** (-N) / np.sqrt(abs(np.linalg.det(A))) / abs(np.linalg.det(T))
        if not normalized:
            prefactor /= normalization_constant(N, s)
        return prefactor * value

    # recovery of the matrix

    def _probe(self, oracle: Callable[[SmoothFunction], float], base: SmoothFunction, E: np.ndarray, tag: str,
               s: float, lambdas: Sequence[float]) -> Tuple[List[ProbeResult], float]:
        results, normalized = [], []
        for lam in lambdas:
            stretch = np.eye(base.dim)
            stretch[0, 0] = 1.0 / lam
            raw = float(oracle(base.composed(stretch @ E)))
            norm = raw * lam ** (2.0 * s - 1.0)
            normalized.append(norm)
            results.append(ProbeResult(tag, lam, raw, norm, 0.0, s, ProbeKind.COORDINATE))
        fit = self.extrapolator.richardson(lambdas, normalized)
        for r in results:
            r.error_estimate = abs(r.normalized_energy - fit.limit)
        return results, fit.limit

    def _run_probes(self, jobs, oracle, base, s, lambdas):
        def run(job):
            tag, E = job
            return self._probe(oracle, base, E, tag, s, lambdas)

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(run, jobs))
        return [run(job) for job in jobs]

    def recover_matrix(self, oracle: Callable[[SmoothFunction], float], N: int, s: float,
                       lambdas: Sequence[float] = DEFAULT_LAMBDAS, normalized: bool = True) -> ReconstructionReport:
        """Recover a constant SPD matrix from the energies of stretched Gaussian probes.

        Axis probes give t_k = |det A|^{-1/2} ((A^{-1})_kk)^s, rotation probes give the same quantity for
        (A^{-1})_kk -/+ 2 (A^{-1})_km + (A^{-1})_mm over 2. This fixes A^{-1} up to a scalar, which the
        determinant closure then determines.
        """
        base = gaussian(N)
        C = probe_constant(N, s, normalized)
        jobs = [(f"axis_swap({k})", axis_swap(N, k)) for k in range(N)]
        pairs = [(k, m) for k in range(N) for m in range(k + 1, N)]
        jobs += [(f"rotation({k},{m})", plane_rotation(N, k, m, -1.0)) for k, m in pairs]
        jobs += [(f"rotation+({k},{m})", plane_rotation(N, k, m, 1.0)) for k, m in pairs]
        outcomes = self._run_probes(jobs, oracle, base, s, lambdas)
        probes = [p for results, _ in outcomes for p in results]
        limits = {tag: limit / C for (tag, _), (_, limit) in zip(jobs, outcomes)}
        if any(v <= 0 for v in limits.values()):
            raise ReconstructionError(f"non-positive probe limit in {limits}")

        P = np.zeros((N, N))
        residuals = np.zeros((N, N))
        for k in range(N):
            P[k, k] = limits[f"axis_swap({k})"] ** (1.0 / s)
        for k, m in pairs:
            minus = 0.5 * (P[k, k] + P[m, m]) - limits[f"rotation({k},{m})"] ** (1.0 / s)
            plus = limits[f"rotation+({k},{m})"] ** (1.0 / s) - 0.5 * (P[k, k] + P[m, m])
            spread = abs(minus - plus) / np.sqrt(P[k, k] * P[m, m])
            if spread > self.consistency_tolerance:
                raise OracleInconsistencyError(f"rotation probes ({k},{m}) disagree by {spread:.3e}")
            P[k, m] = P[m, k] = 0.5 * (minus + plus)
            residuals[k, m] = residuals[m, k] = spread

        det = np.linalg.det(P)
        if det <= 0:
            raise ReconstructionError(f"recovered inverse has determinant {det:.3e}")
        scale = det ** (1.0 / (N + 2.0 * s))
        inverse = P / scale
        try:
            np.linalg.cholesky(inverse)
        except np.linalg.LinAlgError:
            raise ReconstructionError("recovered inverse matrix is not positive definite")
        A = np.linalg.inv(inverse)
        A = 0.5 * (A + A.T)

        # isotropic probe at unit scale: A_true = rho A
        measured = float(oracle(base))
        predicted = self.fourier_energy(A, base, s, normalized)
        rho = (measured / predicted) ** (-2.0 / (N + 2.0 * s))
        if abs(rho - 1.0) > self.consistency_tolerance:
            raise OracleInconsistencyError(f"global scale rho = {rho:.4f} is not 1")
        for k in range(N):
            residuals[k, k] = max(p.error_estimate for p in probes if p.transform_tag == f"axis_swap({k})")
        logger.info(f"Recovered {N}x{N} matrix, rho = {rho:.6f}")
        return ReconstructionReport(recovered_matrix=A, rho=float(rho), per_entry_residuals=residuals,
                                    probes=probes, inverse_matrix=inverse, determinant_scale=float(scale))

    # drift

    def drift_probe(self, h: SmoothFunction, spec: KernelSpec, f: DensitySpec, x0=None,
                    lambdas: Sequence[float] = DEFAULT_LAMBDAS) -> dict:
        """Integral of f_lambda L_K h = -integral of B(f_lambda, h), extrapolated to L_K h(x0)."""
        x0 = f.center if x0 is None else as_points(x0, spec.dim)[0]
        values = []
        for lam in lambdas:
            f_lam = self.rescale_density(f, lam, x0)
            lattice = self.dv_service.density_lattice(f_lam, f_lam.support.radius / self.cells)
            op = self.discretize_service.assemble(lattice, spec, h)
            grid = self.dv_service.density_grid(f_lam, lattice)
            values.append(-self.discretize_service.drift_energy(op, grid))
        fit = self.extrapolator.richardson(lambdas, values)
        pointwise = self.ops_service.apply_LK(h, spec, x0, self.ops_service.build_scheme(spec))
        logger.info(f"Drift probe at x0={x0.tolist()}: {fit.limit:.8g} (pointwise {pointwise:.8g})")
        return {"limit": fit.limit, "rate": fit.rate, "monotone": fit.monotone, "lambdas": list(lambdas),
                "values": values, "pointwise": pointwise, "x0": x0.tolist()}

    def constancy_check(self, w: SmoothFunction, spec: KernelSpec, sample_points, tol: float = 1e-6) -> dict:
        """Diagnostic for bounded w with L_K w = 0: is w constant on the samples?"""
        points = as_points(sample_points, spec.dim)
        quad = self.ops_service.build_scheme(spec)
        lk = self.ops_service.apply_LK_many(w, spec, points, quad)
        max_lk = float(np.max(np.abs(lk)))
        osc = w.oscillation(points)
        harmonic = max_lk < tol
        return {"max_LK": max_lk, "oscillation": osc, "harmonic": bool(harmonic),
                "constant": bool(osc < tol), "consistent": bool(not harmonic or osc < tol)}

    def compare_operators(self, first: Tuple[KernelSpec, SmoothFunction], second: Tuple[KernelSpec, SmoothFunction],
                          f: DensitySpec, x0=None, lambdas: Sequence[float] = DEFAULT_LAMBDAS,
                          tol: float = 1e-6) -> dict:
        """Diffusion limits and drift probes of two (kernel, drift) pairs at x0."""
        (spec_a, h_a), (spec_b, h_b) = first, second
        diffusion = [self.diffusion_limit(spec, f, x0, lambdas)["limit"] for spec in (spec_a, spec_b)]
        drift_a = self.drift_probe(h_a, spec_a, f, x0, lambdas)
        drift_b = self.drift_probe(h_b, spec_b, f, x0, lambdas)
        per_lambda = float(np.max(np.abs(np.subtract(drift_a["values"], drift_b["values"]))))
        scale = max(1.0, abs(diffusion[0]))
        report = {
            "diffusion": diffusion,
            "diffusion_match": bool(abs(diffusion[0] - diffusion[1]) <= tol * scale),
            "drift": [drift_a, drift_b],
            "drift_gap": per_lambda,
            "drift_match": bool(per_lambda <= tol * max(1.0, abs(drift_a["limit"]))),
        }
        logger.info(f"Operator comparison: diffusion match {report['diffusion_match']}, "
                    f"drift gap {per_lambda:.3e}")
        return report
