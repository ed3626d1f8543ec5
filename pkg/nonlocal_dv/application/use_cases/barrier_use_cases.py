import logging

from application.domain.models.barrier import BarrierConfig
from application.domain.models.errors import ConfigError
from application.domain.models.experiment import ExperimentConfig
from application.domain.models.functions import constant
from application.domain.services.boundary_barrier_service import BoundaryBarrierService
from application.use_cases.artifacts import publish
from infrastructure.config.function_catalog import FunctionCatalog
from interfaces.repositories.artifact_repository import ArtifactRepository

logger = logging.getLogger('nonlocal_dv')


class BarrierUseCases:
    def __init__(self, barrier_service: BoundaryBarrierService, catalog: FunctionCatalog,
                 repository: ArtifactRepository):
        self.barrier_service = barrier_service
        self.catalog = catalog
        self.repository = repository

    def _scan_config(self, config: ExperimentConfig, block: dict, alpha: float) -> BarrierConfig:
        spec = self.catalog.kernel(config.kernel)
        descriptor = self.catalog.domain(block.get("domain", config.domain), "barrier.domain")
        h = self.catalog.optional_function(block.get("h"), spec.dim, "barrier.h") or constant(spec.dim, 0.0)
        try:
            return BarrierConfig(domain=descriptor, alpha=alpha, delta=float(block.get("delta", 0.05)),
                                 field=spec.field, h=h, s=spec.s, mesh=float(block.get("mesh", 1e-4)),
                                 points=int(block.get("points", 12)), normalized=spec.normalized)
        except ValueError as e:
            raise ConfigError("barrier", str(e))

    def check(self, config: ExperimentConfig) -> dict:
        block = config.block("barrier")
        alphas = block.get("alphas", [block["alpha"]] if "alpha" in block else None)
        if not alphas:
            raise ConfigError("barrier.alphas", "missing")
        s = float(config.kernel.get("s", 0.5))

        scans, rows = [], []
        for alpha in alphas:
            report = self.barrier_service.barrier_scan(self._scan_config(config, block, float(alpha)))
            scans.append(report)
            rows += [[float(alpha)] + row for row in self.barrier_service.scan_rows(report)]

        dims = block.get("constant_dims", [2, 3])
        summary = {
            "s": s,
            "scans": scans,
            "sign_holds": all(r["sign_holds"] is not False for r in scans),
            "drift_rate_ok": all(r["drift_rate_ok"] is not False for r in scans),
            "drift_bound": [r["drift_bound"] for r in scans],
            "C_star": [self.barrier_service.C_star_check(int(N), s) for N in dims],
        }
        identities = ["barrier_sign", "c_star"]
        J = block.get("J")
        if J:
            y1 = float(J.get("y1", 1.0))
            entries = []
            for i, A in enumerate(J.get("matrices", [])):
                try:
                    direct = self.barrier_service.J_quadrature(A, y1, s)
                    closed = self.barrier_service.J_closed_form(A, y1, s)
                except ValueError as e:
                    raise ConfigError(f"barrier.J.matrices[{i}]", str(e))
                entries.append({"matrix": A, "quadrature": direct, "closed_form": closed,
                                "relative_difference": abs(direct - closed) / abs(closed)})
            summary["J"] = {"y1": y1, "entries": entries}
            identities.append("boundary_layer_integral")
        summary["files"] = publish(self.repository, config, "barrier", summary, identities,
                                   (["alpha", "d", "normalized", "drift_term"], rows))
        logger.info(f"Barrier check over alphas {alphas}: sign holds {summary['sign_holds']}, "
                    f"drift rate ok {summary['drift_rate_ok']}")
        return summary
