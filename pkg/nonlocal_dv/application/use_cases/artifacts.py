from typing import List, Optional, Sequence, Tuple

import numpy as np

from application.domain.models.density import DensitySpec
from application.domain.models.errors import ConfigError
from application.domain.models.experiment import ExperimentConfig
from application.domain.models.functions import SmoothFunction, as_points, bump
from application.domain.models.lattice import DomainDescriptor
from interfaces.repositories.artifact_repository import ArtifactRepository


SCHEME_OPTIONS = ("inner_radius", "outer_radius", "inner_order", "outer_order", "angular", "panel_width",
                  "tail_estimate_enabled")


def publish(repository: ArtifactRepository, config: ExperimentConfig, name: str, summary: dict,
            identities: List[str], table: Optional[Tuple[Sequence[str], Sequence[Sequence]]] = None) -> List[str]:
    """JSON summary with provenance, plus an optional CSV table under the same name."""
    payload = dict(summary)
    payload["provenance"] = config.provenance(identities)
    written = [repository.save_json(name, payload)]
    if table is not None:
        header, rows = table
        written.append(repository.save_csv(name, header, rows))
    return written


def scheme_options(config: ExperimentConfig) -> dict:
    block = config.block("quadrature") or {}
    if not isinstance(block, dict):
        raise ConfigError("quadrature", "expected an object")
    unknown = set(block) - set(SCHEME_OPTIONS)
    if unknown:
        raise ConfigError(f"quadrature.{sorted(unknown)[0]}", "not a quadrature option")
    return dict(block)


def config_points(raw, dim: int, path: str) -> np.ndarray:
    try:
        points = as_points(raw, dim)
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e))
    if points.shape[0] == 0:
        raise ConfigError(path, "no points")
    return points


def random_bump_pairs(descriptor: DomainDescriptor, count: int,
                      rng: np.random.Generator) -> List[Tuple[SmoothFunction, SmoothFunction]]:
    """Pairs of C-infinity bumps whose supports stay inside the bounding box of the domain."""
    half = 0.5 * float(np.min(descriptor.upper - descriptor.lower))
    middle = 0.5 * (descriptor.lower + descriptor.upper)
    dim = descriptor.dim
    pairs = []
    for _ in range(count):
        made = []
        for _ in range(2):
            radius = half * rng.uniform(0.25, 0.5)
            center = middle + rng.uniform(-1.0, 1.0, dim) * (half - radius) / np.sqrt(dim) * 0.9
            made.append(bump(dim, center, radius, rng.uniform(0.5, 1.5)))
        pairs.append(tuple(made))
    return pairs


def build_density(catalog, dv_service, block: dict, dim: int, path: str = "density") -> DensitySpec:
    """``{"root": ...}`` gives f = root^2 / mass with a regular square root; ``{"f": ...}`` takes f as is."""
    name = block.get("name", "density")
    if "root" in block:
        return dv_service.density_from_root(catalog.function(block["root"], dim, f"{path}.root"), name)
    if "f" in block:
        f = catalog.function(block["f"], dim, f"{path}.f")
        center = block.get("center", None if f.support is None else f.support.center)
        try:
            return DensitySpec(f=f.scaled(1.0 / dv_service.mass(f)), center=center, name=name)
        except ValueError as e:
            raise ConfigError(path, str(e))
    raise ConfigError(f"{path}.root", "missing (or give 'f')")
