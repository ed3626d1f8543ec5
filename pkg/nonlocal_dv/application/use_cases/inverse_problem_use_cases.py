import logging

import numpy as np

from application.domain.models.errors import ConfigError
from application.domain.models.experiment import ExperimentConfig
from application.domain.models.reconstruction import PROBE_HEADER
from application.domain.services.dv_functional_service import DVFunctionalService
from application.domain.services.inverse_problem_service import DEFAULT_LAMBDAS, InverseProblemService
from application.use_cases.artifacts import build_density, config_points, publish
from infrastructure.config.function_catalog import FunctionCatalog
from interfaces.repositories.artifact_repository import ArtifactRepository

logger = logging.getLogger('nonlocal_dv')


class InverseProblemUseCases:
    def __init__(self, inverse_service: InverseProblemService, dv_service: DVFunctionalService,
                 catalog: FunctionCatalog, repository: ArtifactRepository):
        self.inverse_service = inverse_service
        self.dv_service = dv_service
        self.catalog = catalog
        self.repository = repository

    def recover_matrix(self, config: ExperimentConfig) -> dict:
        """Recover a hidden constant matrix from an energy oracle built on the Fourier form."""
        block = config.block("hidden_matrix")
        if "matrix" not in block:
            raise ConfigError("hidden_matrix.matrix", "missing")
        hidden = np.atleast_2d(np.asarray(block["matrix"], dtype=float))
        s = float(block.get("s", config.kernel.get("s", 0.5)))
        normalized = bool(block.get("normalized", True))
        lambdas = [float(x) for x in block.get("lambdas", DEFAULT_LAMBDAS)]
        if not 0.0 < s < 1.0:
            raise ConfigError("hidden_matrix.s", f"must lie in (0, 1), got {s}")

        def oracle(g):
            return self.inverse_service.fourier_energy(hidden, g, s, normalized)

        report = self.inverse_service.recover_matrix(oracle, hidden.shape[0], s, lambdas, normalized)
        errors = np.abs(report.recovered_matrix - hidden) / np.max(np.abs(hidden))
        summary = {
            "s": s,
            "hidden_matrix": hidden.tolist(),
            "report": report.to_dict(),
            "inverse_matrix": report.inverse_matrix.tolist(),
            "relative_errors": errors.tolist(),
            "max_relative_error": float(errors.max()),
        }
        table = (PROBE_HEADER, [p.to_row() for p in report.probes])
        summary["files"] = publish(self.repository, config, "recover_matrix", summary,
                                   ["fourier_energy", "rotation_probe", "determinant_closure"], table)
        logger.info(f"Recovered matrix with max relative error {summary['max_relative_error']:.3e}")
        return summary

    def recover_drift(self, config: ExperimentConfig) -> dict:
        """Compare two drifts through their probes and check whether their difference is constant."""
        spec = self.catalog.kernel(config.kernel)
        density = build_density(self.catalog, self.dv_service, config.density, spec.dim)
        block = config.block("drifts")
        h_first = self.catalog.function(block.get("first"), spec.dim, "drifts.first")
        h_second = self.catalog.function(block.get("second"), spec.dim, "drifts.second")
        second_spec = self.catalog.kernel(block["kernel"], "drifts.kernel") if "kernel" in block else spec
        x0 = config_points(block.get("x0", density.center.tolist()), spec.dim, "drifts.x0")[0]
        lambdas = [float(x) for x in block.get("lambdas", DEFAULT_LAMBDAS)]
        samples = config_points(block.get("samples", [x0.tolist()]), spec.dim, "drifts.samples")
        tol = config.tolerance("drift", 1e-6)

        comparison = self.inverse_service.compare_operators((spec, h_first), (second_spec, h_second), density, x0,
                                                            lambdas, tol)
        constancy = self.inverse_service.constancy_check(h_first.minus(h_second), spec, samples, tol)
        summary = {
            "kernel": spec.to_dict(),
            "density": density.to_dict(),
            "x0": x0.tolist(),
            "comparison": comparison,
            "constancy": constancy,
        }
        first, second = comparison["drift"]
        rows = [[lam, a, b] for lam, a, b in zip(first["lambdas"], first["values"], second["values"])]
        summary["files"] = publish(self.repository, config, "recover_drift", summary,
                                   ["drift_probe", "liouville_constancy"], (["lambda", "first", "second"], rows))
        return summary
