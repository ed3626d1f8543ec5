import logging

import numpy as np

from application.domain.models.errors import ConfigError
from application.domain.models.experiment import ExperimentConfig
from application.domain.models.lattice import GridFunction
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.nonlocal_ops_service import NonlocalOpsService
from application.use_cases.artifacts import config_points, publish, random_bump_pairs, scheme_options
from infrastructure.config.function_catalog import FunctionCatalog
from interfaces.repositories.artifact_repository import ArtifactRepository

logger = logging.getLogger('nonlocal_dv')


class OperatorUseCases:
    def __init__(self, ops_service: NonlocalOpsService, discretize_service: DiscretizeService,
                 catalog: FunctionCatalog, repository: ArtifactRepository):
        self.ops_service = ops_service
        self.discretize_service = discretize_service
        self.catalog = catalog
        self.repository = repository

    def evaluate(self, config: ExperimentConfig) -> dict:
        """L_K u, B_K(u, v) and the drifted operator at the configured points."""
        spec = self.catalog.kernel(config.kernel)
        u = self.catalog.function(config.block("function"), spec.dim, "function")
        v = self.catalog.optional_function(config.block("second"), spec.dim, "second") or u
        h = self.catalog.optional_function(config.drift, spec.dim, "drift")
        points = config_points(config.block("points"), spec.dim, "points")
        try:
            quad = self.ops_service.build_scheme(spec, **scheme_options(config))
        except ValueError as e:
            raise ConfigError("quadrature", str(e))

        rows = []
        for x in points:
            LK = self.ops_service.apply_LK(u, spec, x, quad)
            B = self.ops_service.apply_B(u, v, spec, x, quad)
            drifted = None if h is None else LK + self.ops_service.apply_B(u, h, spec, x, quad)
            residual = self.ops_service.product_rule_residual(u, v, spec, x, quad)
            tail = self.ops_service.tail_bound(u, spec, x, quad) if quad.tail_estimate_enabled else 0.0
            rows.append(x.tolist() + [LK, B, drifted if drifted is not None else "", residual, tail])
        header = [f"x{k}" for k in range(spec.dim)] + ["LK_u", "B_uv", "drifted", "product_residual", "tail_bound"]

        summary = {
            "kernel": spec.to_dict(),
            "quadrature": quad.to_dict(),
            "function": u.to_dict(),
            "second": v.to_dict(),
            "drift": None if h is None else h.to_dict(),
            "points": points.tolist(),
            "max_product_residual": float(max(abs(r[-2]) for r in rows)),
        }
        identities = ["pointwise_quadrature", "product_rule"]
        lattice_block = config.block("lattice")
        if lattice_block:
            summary["lattice_identities"] = self.lattice_identities(config, spec, lattice_block, h)
            identities.append("integration_by_parts")
        summary["files"] = publish(self.repository, config, "operator_eval", summary, identities, (header, rows))
        logger.info(f"Evaluated the operator at {len(rows)} points")
        return summary

    def lattice_identities(self, config: ExperimentConfig, spec, block: dict, h=None) -> dict:
        """Discrete product rule and integration by parts for random bump pairs."""
        descriptor = self.catalog.domain(block.get("domain", config.domain), "lattice.domain")
        lattice = self.discretize_service.lattice(descriptor, float(block.get("mesh", 0.1)))
        op = self.discretize_service.assemble(lattice, spec, h)
        rng = np.random.default_rng(config.seed)
        product, by_parts = [], []
        for a, b in random_bump_pairs(descriptor, int(block.get("pairs", 10)), rng):
            res = self.discretize_service.identity_residuals(op, GridFunction.sampled(lattice, a),
                                                             GridFunction.sampled(lattice, b))
            product.append(res["product_rule"])
            by_parts.append(res["integration_by_parts"])
        return {"mesh": lattice.mesh, "nodes": lattice.n_interior, "pairs": len(product),
                "max_product_rule": float(max(product)), "max_integration_by_parts": float(max(by_parts))}
