import logging

import numpy as np

from application.domain.models.experiment import ExperimentConfig
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.dv_functional_service import DVFunctionalService
from application.use_cases.artifacts import build_density, publish
from infrastructure.config.function_catalog import FunctionCatalog
from interfaces.repositories.artifact_repository import ArtifactRepository

logger = logging.getLogger('nonlocal_dv')

DEFAULT_WELLS = (0.25, 0.5, 1.0, 2.0)


class DVFunctionalUseCases:
    def __init__(self, dv_service: DVFunctionalService, discretize_service: DiscretizeService,
                 catalog: FunctionCatalog, repository: ArtifactRepository):
        self.dv_service = dv_service
        self.discretize_service = discretize_service
        self.catalog = catalog
        self.repository = repository

    def evaluate(self, config: ExperimentConfig) -> dict:
        spec = self.catalog.kernel(config.kernel)
        density = build_density(self.catalog, self.dv_service, config.density, spec.dim)
        h = self.catalog.optional_function(config.drift, spec.dim, "drift")
        options = config.block("dv") or {}
        mesh = float(config.density.get("mesh", density.support.radius / 12.0))
        lattice = self.dv_service.density_lattice(density, mesh)
        op = self.discretize_service.assemble(lattice, spec, h)
        f = self.dv_service.density_grid(density, lattice)

        direct = self.dv_service.minimize_rayleigh(op, f)
        decomposition = self.dv_service.decomposition(f, op)
        identities = ["error_decomposition", "q_form_positivity", "duality"]
        summary = {
            "kernel": spec.to_dict(),
            "density": density.to_dict(),
            "drift": None if h is None else h.to_dict(),
            "lattice": lattice.to_dict(),
            "I": decomposition["I"],
            "E": decomposition["E"],
            "iterations": decomposition["iterations"],
            "diffusion": decomposition["diffusion"],
            "drift_energy": decomposition["drift"],
            "error_floor": decomposition["floor"],
            "direct": {"I": direct["I"], "iterations": direct["iterations"], "success": direct["success"]},
            "relative_gap": abs(direct["I"] - decomposition["I"]) / max(abs(direct["I"]), 1e-300),
        }
        if h is None:
            summary["closed_form"] = self.dv_service.I_closed_form_h0(f, op, density.sqrt_f_regularity)
            summary["sqrt_residuals"] = self.dv_service.sqrt_minimizer_residuals(op, f)
            identities.append("sqrt_density_minimizer")

        rng = np.random.default_rng(config.seed)
        hbar = rng.uniform(-1.0, 1.0, int(options.get("q_samples", 1000)))
        q = np.array([self.dv_service.q_scalar_min(x) for x in hbar])
        summary["q_form"] = {"C": self.dv_service.C, "samples": int(hbar.size), "min": float(q.min()),
                             "closed_form_gap": float(np.max(np.abs(q - [self.dv_service.q_closed_form(x) for x in hbar]))),
                             "displayed_variant_min": float(min(self.dv_service.q_scalar_min(x, cross=1.0) for x in hbar[:50]))}

        wells = options.get("wells", list(DEFAULT_WELLS))
        r2 = np.sum((lattice.interior_nodes - density.center) ** 2, axis=-1)
        family = [np.zeros(op.size)] + [-float(a) * r2 for a in wells]
        summary["duality"] = self.dv_service.dual_gap(f, op, family, direct["I"])
        summary["duality"]["zero_potential_gap"] = summary["duality"]["entries"][0]["gap"]

        if options.get("s_values"):
            summary["local_limit"] = self.dv_service.local_limit_trend(density, options["s_values"], mesh)
            identities.append("local_limit")

        w = decomposition["w"].w
        rows = [row + [float(fv), float(wv)] for row, fv, wv in zip(
            [[i] + x.tolist() for i, x in enumerate(lattice.interior_nodes)], f.values, w.values)]
        header = ["index"] + [f"x{k}" for k in range(spec.dim)] + ["f", "w"]
        summary["files"] = publish(self.repository, config, "dv_functional", summary, identities, (header, rows))
        logger.info(f"I(mu) = {summary['I']:.8g} (direct {direct['I']:.8g})")
        return summary
