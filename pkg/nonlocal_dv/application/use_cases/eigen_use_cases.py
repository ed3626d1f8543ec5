import logging

import numpy as np

from application.domain.models.errors import ConfigError
from application.domain.models.experiment import ExperimentConfig
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.eigen_service import EigenService
from application.use_cases.artifacts import publish
from infrastructure.config.function_catalog import FunctionCatalog
from interfaces.repositories.artifact_repository import ArtifactRepository

logger = logging.getLogger('nonlocal_dv')


class EigenUseCases:
    def __init__(self, eigen_service: EigenService, discretize_service: DiscretizeService,
                 catalog: FunctionCatalog, repository: ArtifactRepository):
        self.eigen_service = eigen_service
        self.discretize_service = discretize_service
        self.catalog = catalog
        self.repository = repository

    def solve(self, config: ExperimentConfig) -> dict:
        spec = self.catalog.kernel(config.kernel)
        descriptor = self.catalog.domain(config.domain)
        if descriptor.dim != spec.dim:
            raise ConfigError("domain", f"dimension {descriptor.dim} does not match the kernel ({spec.dim})")
        lattice = self.discretize_service.lattice(descriptor, float(config.domain.get("mesh", 0.1)))
        h = self.catalog.optional_function(config.drift, spec.dim, "drift")
        options = config.block("eigen") or {}
        V_fn = self.catalog.optional_function(options.get("potential"), spec.dim, "eigen.potential")
        V = None if V_fn is None else lattice.sample(V_fn)
        op = self.discretize_service.assemble(lattice, spec, h, V)

        tol = config.tolerance("eigen", 1e-8)
        max_iter = int(options.get("max_iter", 500))
        pair = self.eigen_service.principal_eigenpair(op, tol, max_iter)

        c = float(options.get("shift", 1.0))
        shifted = self.eigen_service.principal_eigenpair(op.with_potential(op.potential + c), tol, max_iter,
                                                         reference=False)
        sup = self.eigen_service.sup_characterization_check(op, pair.phi1, pair.lambda1, slack=10.0 * tol)

        # nested test families against the stationary measure
        size = int(options.get("family_size", 6))
        mu = self.eigen_service.stationary_measure(op, pair)
        tests = self.eigen_service.test_family(op, size)
        minmax = [self.eigen_service.minmax_value(op, [mu], tests[:k]) for k in range(1, size + 1)]
        gaps = [abs(value - pair.lambda1) for value in minmax]

        summary = {
            "kernel": spec.to_dict(),
            "operator": op.to_dict(),
            "eigenpair": pair.to_dict(),
            "dense_agreement": pair.reference_gap,
            "constant_shift": {"shift": c, "lambda1": shifted.lambda1,
                               "gap": abs(shifted.lambda1 - (pair.lambda1 - c))},
            "sup_characterization": sup,
            "minmax": {"values": minmax, "gaps": gaps,
                       "monotone": bool(all(b <= a + 10.0 * tol for a, b in zip(gaps, gaps[1:])))},
        }
        identities = ["principal_eigenpair", "constant_shift", "sup_characterization", "minmax_characterization"]
        if options.get("monotone_lambdas"):
            summary["monotone_iteration"] = [
                self._monotone_entry(op, float(lam))
                for lam in options["monotone_lambdas"]
            ]
            identities.append("monotone_iteration")
        if options.get("maxprinciple"):
            demo = options["maxprinciple"]
            summary["maxprinciple"] = self.eigen_service.maxprinciple_violation_demo(
                spec.s, float(demo.get("height", 200.0)), float(demo.get("width", 0.5)), int(demo.get("points", 39)))
            identities.append("maximum_principle_counterexample")
        table = (pair.phi1.header(), pair.phi1.to_rows())
        summary["files"] = publish(self.repository, config, "eigen", summary, identities, table)
        logger.info(f"Eigen pipeline finished: lambda1 = {pair.lambda1:.10g}")
        return summary

    def _monotone_entry(self, op, lam: float) -> dict:
        result = self.eigen_service.monotone_iteration(op, lam, 1.0)
        result.pop("solution")
        result["lambda"] = lam
        return result
