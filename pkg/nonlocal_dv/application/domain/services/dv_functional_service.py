import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad as quad_1d
from scipy.optimize import minimize, minimize_scalar

from application.domain.models.density import DensitySpec, ExponentParam
from application.domain.models.errors import DomainError, InputError, OptimizationError
from application.domain.models.functions import SmoothFunction
from application.domain.models.kernel import AnisotropyField, EllipticityBounds, KernelSpec
from application.domain.models.lattice import AssembledOperator, DomainDescriptor, GridFunction, LatticeDomain
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.eigen_service import EigenService


logger = logging.getLogger('nonlocal_dv')


class DVFunctionalService:
    """I(mu) = -inf over u > 0 of the integral of (L u / u) f, for mu = f dx.

    On the lattice the infimum runs over u supported on the nodes where f exceeds
    ``support_floor`` times its maximum; u -> 0 elsewhere only lowers the quotient.
    """

    def __init__(self, discretize_service: DiscretizeService, eigen_service: EigenService,
                 support_floor: float = 1e-8, gtol: float = 1e-8, max_iter: int = 500, C: float = 2.0):
        self.discretize_service = discretize_service
        self.eigen_service = eigen_service
        self.support_floor = support_floor
        self.gtol = gtol
        self.max_iter = max_iter
        self.C = C

    # densities

    def mass(self, fn: SmoothFunction, resolution: int = 200) -> float:
        if fn.support is None:
            raise InputError(f"{fn.name} needs a compact support to be integrated")
        c, r = fn.support.center, fn.support.radius
        if fn.dim == 1:
            value, _ = quad_1d(lambda t: fn.value_at(t), c[0] - r, c[0] + r, limit=200)
            return float(value)
        lattice = LatticeDomain(DomainDescriptor.ball(c, r), 2.0 * r / resolution)
        return float(fn(lattice.interior_nodes).sum() * lattice.cell_volume)

    def density_from_root(self, root: SmoothFunction, name: str = "density") -> DensitySpec:
        """f = root^2 / mass, with the normalised root as the smooth square root."""
        mass = self.mass(root.times(root))
        if mass <= 0:
            raise InputError(f"{root.name} has zero mass")
        sqrt_f = root.scaled(1.0 / np.sqrt(mass))
        return DensitySpec(f=sqrt_f.times(sqrt_f), sqrt_f=sqrt_f, sqrt_f_regularity=True,
                           center=root.support.center, name=name)

    def density_lattice(self, f: DensitySpec, mesh: float) -> LatticeDomain:
        c, r = f.support.center, f.support.radius
        descriptor = DomainDescriptor.interval(c[0] - r, c[0] + r) if f.dim == 1 else DomainDescriptor.ball(c, r)
        return self.discretize_service.lattice(descriptor, mesh)

    def density_grid(self, f: DensitySpec, lattice: LatticeDomain) -> GridFunction:
        """Samples of f renormalised to unit lattice mass."""
        values = np.clip(lattice.sample(f.f), 0.0, None)
        total = values.sum() * lattice.cell_volume
        if total <= 0:
            raise InputError(f"{f.name}: support escapes the lattice")
        return GridFunction(lattice, values / total, name=f.name)

    def _support(self, f: GridFunction) -> np.ndarray:
        return f.values > self.support_floor * f.values.max()

    def _restricted(self, f: GridFunction) -> GridFunction:
        return f.with_values(np.where(self._support(f), f.values, 0.0))

    # functional

    def rayleigh_integral(self, u: GridFunction, op: AssembledOperator, f: GridFunction) -> float:
        support = f.values > 0
        if np.any(u.values[support] <= 0):
            raise DomainError("u must be positive on the support of f")
        Lu = self.discretize_service.apply(op, u).values
        return float(np.sum(f.values[support] * Lu[support] / u.values[support]) * op.lattice.cell_volume)

    def I_closed_form_h0(self, f: GridFunction, op: AssembledOperator, regular: bool = True) -> float:
        """Integral of B(sqrt f, sqrt f) over R^N."""
        if not regular:
            logger.warning(f"{f.name}: sqrt(f) regularity not asserted; the closed form may not be the infimum")
        root = self._restricted(f).with_values(np.sqrt(self._restricted(f).values), f"sqrt({f.name})")
        return self.discretize_service.energy_form(op, root, root)

    def closed_form(self, density: DensitySpec, op: AssembledOperator) -> float:
        return self.I_closed_form_h0(self.density_grid(density, op.lattice), op, density.sqrt_f_regularity)

    def minimize_rayleigh(self, op: AssembledOperator, f: GridFunction, w0: Optional[np.ndarray] = None) -> dict:
        """Quasi-Newton minimisation of G(w) = h^N sum_i f_i sum_j M_ij e^{w_j - w_i} over the support."""
        S = self._support(f)
        fS = f.values[S]
        M = op.matrix[np.ix_(S, S)]
        vol = op.lattice.cell_volume

        def objective(w):
            ew = np.exp(w)
            a = fS * np.exp(-w)
            Mv = M @ ew
            value = vol * float(a @ Mv)
            grad = vol * (ew * (M.T @ a) - a * Mv)
            return value, grad

        start = np.zeros(int(S.sum())) if w0 is None else np.asarray(w0, dtype=float)[S]
        result = minimize(objective, start, jac=True, method="L-BFGS-B",
                          options={"gtol": self.gtol, "maxiter": self.max_iter})
        if not np.isfinite(result.fun):
            raise OptimizationError(f"Rayleigh minimisation diverged: {result.message}")
        if not result.success:
            logger.warning(f"Rayleigh minimisation stopped early: {result.message}")
        w = np.full(f.values.size, -np.inf)
        w[S] = result.x
        logger.info(f"Direct minimisation: I = {-result.fun:.8g} after {result.nit} iterations")
        return {"I": -float(result.fun), "w": w, "iterations": int(result.nit), "success": bool(result.success)}

    def error_functional(self, op: AssembledOperator, f: GridFunction):
        """E(w) = h^N sum_ij W_ij sqrt(f_i f_j) (cosh dw - 1 + 1/2 sinh(dw) dh) and its gradient."""
        S = self._support(f)
        root = np.sqrt(f.values[S])
        Wf = op.pair_weights[np.ix_(S, S)] * np.outer(root, root)
        hS = op.drift_source[S]
        dh = hS[:, None] - hS[None, :]
        vol = op.lattice.cell_volume

        def objective(w):
            dw = w[:, None] - w[None, :]
            ch, sh = np.cosh(dw), np.sinh(dw)
            value = vol * float(np.sum(Wf * (ch - 1.0 + 0.5 * sh * dh)))
            grad = 2.0 * vol * np.sum(Wf * (sh + 0.5 * ch * dh), axis=1)
            return value, grad

        return S, objective

    def error_floor(self, op: AssembledOperator, f: GridFunction) -> float:
        """-h^N sum_ij W_ij sqrt(f_i f_j) C dh^2 / 2: E never drops below it."""
        S = self._support(f)
        root = np.sqrt(f.values[S])
        hS = op.drift_source[S]
        dh = hS[:, None] - hS[None, :]
        Wf = op.pair_weights[np.ix_(S, S)] * np.outer(root, root)
        return -0.5 * self.C * float(np.sum(Wf * dh ** 2)) * op.lattice.cell_volume

    def decomposition(self, f: GridFunction, op: AssembledOperator, w_init: Optional[ExponentParam] = None) -> dict:
        if op.drift_oscillation >= 1.0:
            logger.warning(f"osc(h) = {op.drift_oscillation:.3g} >= 1: the error form may be indefinite")
        S, objective = self.error_functional(op, f)
        trace: List[float] = []
        start = np.zeros(int(S.sum())) if w_init is None else w_init.w.values[S]
        result = minimize(objective, start, jac=True, method="L-BFGS-B",
                          callback=lambda wk: trace.append(objective(wk)[0]),
                          options={"gtol": self.gtol, "maxiter": self.max_iter})
        if not np.isfinite(result.fun):
            raise OptimizationError(f"error-form descent diverged after {len(trace)} iterates: {trace[-5:]}")
        if not result.success:
            logger.warning(f"Error-form descent stopped early: {result.message}")
        fS = self._restricted(f)
        root = fS.with_values(np.sqrt(fS.values), f"sqrt({f.name})")
        diffusion = self.discretize_service.energy_form(op, root, root)
        drift = self.discretize_service.drift_energy(op, fS)
        potential = float(np.sum(op.potential * fS.values) * op.lattice.cell_volume)
        E = float(result.fun)
        I = diffusion - 0.5 * drift - potential - E
        w = np.zeros(f.values.size)
        w[S] = result.x - np.mean(result.x)
        logger.info(f"Decomposition: I = {I:.8g} (diffusion {diffusion:.6g}, drift {drift:.6g}, E {E:.3e})")
        return {
            "I": I, "E": E, "diffusion": diffusion, "drift": drift, "potential": potential,
            "w": ExponentParam(GridFunction(op.lattice, w, name="w")),
            "iterations": int(result.nit), "trace": trace, "floor": self.error_floor(op, f),
        }

    def I_decomposed(self, f: GridFunction, op: AssembledOperator,
                     w_init: Optional[ExponentParam] = None) -> Tuple[float, float, ExponentParam]:
        result = self.decomposition(f, op, w_init)
        return result["I"], result["E"], result["w"]

    def sqrt_minimizer_residuals(self, op: AssembledOperator, f: GridFunction) -> dict:
        """Residuals at u = sqrt f of the first-order condition f L u / u^2 - L(f / u) and of
        2 (f / u) L u = L f - 2 B(f / u, u)."""
        fS = self._restricted(f)
        S = fS.values > 0
        u = fS.with_values(np.sqrt(fS.values), "u")
        ratio = fS.with_values(np.where(S, fS.values / np.where(S, u.values, 1.0), 0.0), "f/u")
        Lu = self.discretize_service.apply_LK(op, u).values
        first = fS.values * Lu / np.where(S, u.values, 1.0) ** 2 - self.discretize_service.apply_LK(op, ratio).values
        Lf = self.discretize_service.apply_LK(op, fS).values
        B = self.discretize_service.carre_du_champ(op, ratio, u).values
        product = 2.0 * ratio.values * Lu - (Lf - 2.0 * B)
        return {"first_order": float(np.max(np.abs(first[S]))), "product_identity": float(np.max(np.abs(product[S])))}

    # Q-form

    def Q_form(self, dh: float, dw: float, C: Optional[float] = None, cross: float = 0.5) -> float:
        """cosh(dw) - 1 + cross sinh(dw) dh + C dh^2 / 2; cross = 1 gives the displayed variant."""
        C = self.C if C is None else C
        return float(np.cosh(dw) - 1.0 + cross * np.sinh(dw) * dh + 0.5 * C * dh ** 2)

    def q_scalar_min(self, hbar: float, C: Optional[float] = None, cross: float = 0.5) -> float:
        result = minimize_scalar(lambda r: self.Q_form(hbar, r, C, cross), bracket=(-1.0, 1.0), tol=1e-12)
        return float(result.fun)

    def q_closed_form(self, hbar: float, C: Optional[float] = None, cross: float = 0.5) -> float:
        """Minimum at tanh r = -cross hbar, valid for |cross hbar| < 1."""
        C = self.C if C is None else C
        return float(np.sqrt(1.0 - (cross * hbar) ** 2) - 1.0 + 0.5 * C * hbar ** 2)

    # duality

    def dual_gap(self, f: GridFunction, op: AssembledOperator, V_family: Sequence[np.ndarray],
                 I_value: Optional[float] = None) -> dict:
        """lambda1(L + V) + integral of V dmu for each V, against I(mu)."""
        if I_value is None:
            I_value = self.minimize_rayleigh(op.with_potential(0.0), f)["I"]
        vol = op.lattice.cell_volume
        entries = []
        for V in V_family:
            V = np.broadcast_to(np.asarray(V, dtype=float), (op.size,))
            pair = self.eigen_service.principal_eigenpair(op.with_potential(V), reference=False)
            value = pair.lambda1 + float(np.sum(V * f.values) * vol)
            entries.append({"lambda1": pair.lambda1, "value": value, "gap": I_value - value})
        best = max(e["value"] for e in entries)
        return {"I": I_value, "entries": entries, "best": best, "gap": I_value - best}

    # local limit

    def fisher_information(self, density: DensitySpec, mesh: float) -> float:
        """Integral of |grad f|^2 / (4 f) = integral of |grad sqrt f|^2."""
        lattice = self.density_lattice(density, mesh)
        root = density.root()
        if root.gradient_evaluator is not None:
            grads = root.gradient(lattice.interior_nodes)
            return float(np.sum(grads ** 2) * lattice.cell_volume)
        full = LatticeDomain(lattice.descriptor, mesh, margin=2 * mesh)
        shape = tuple(2 * full.counts + 1)
        values = root(full.nodes).reshape(shape)
        grads = np.gradient(values, mesh)
        grads = grads if isinstance(grads, list) else [grads]
        return float(sum(np.sum(g ** 2) for g in grads) * full.cell_volume)

    def local_limit_trend(self, density: DensitySpec, s_values: Sequence[float], mesh: float) -> dict:
        """Normalised closed-form energy over an s-sweep, to be compared with the Fisher information."""
        lattice = self.density_lattice(density, mesh)
        f = self.density_grid(density, lattice)
        energies = []
        for s in s_values:
            spec = KernelSpec(AnisotropyField.identity(density.dim), EllipticityBounds(1.0, 1.0, s, density.dim),
                              normalized=True)
            op = self.discretize_service.assemble(lattice, spec)
            energies.append(self.I_closed_form_h0(f, op))
        return {"s": list(s_values), "energies": energies, "fisher": self.fisher_information(density, mesh)}
