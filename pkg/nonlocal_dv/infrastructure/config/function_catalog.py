"""JSON blocks -> domain objects.

Functions are written as ``{"family": "bump", "center": [0.0], "radius": 1.0}``; an optional
``"offset"`` adds a constant and ``{"family": "sum", "terms": [...]}`` adds functions together.
"""
from typing import Optional

import numpy as np

from application.domain.models.errors import ConfigError
from application.domain.models.functions import (
    SmoothFunction, bump, constant, dipole, distance_power, exterior_step, fractional_profile, gaussian,
)
from application.domain.models.kernel import AnisotropyField, EllipticityBounds, KernelSpec
from application.domain.models.lattice import DomainDescriptor


function_families = {
    "gaussian": (gaussian, ("center", "scale", "amplitude")),
    "bump": (bump, ("center", "radius", "amplitude")),
    "constant": (constant, ("value",)),
    "fractional_profile": (fractional_profile, ("s", "center", "radius")),
    "exterior_step": (exterior_step, ("height", "width")),
    "distance_power": (distance_power, ("alpha", "center", "radius")),
    "dipole": (dipole, ("center", "scale", "amplitude", "axis")),
}

field_variants = ("constant", "identity", "separable_sum", "separable_product")


def _require(block, key: str, path: str):
    if not isinstance(block, dict):
        raise ConfigError(path, "expected an object")
    if key not in block:
        raise ConfigError(f"{path}.{key}", "missing")
    return block[key]


def _number(value, path: str, cast=float):
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {value!r}")


def build_function(block: dict, dim: int, path: str = "function") -> SmoothFunction:
    family = _require(block, "family", path)
    if family == "sum":
        terms = _require(block, "terms", path)
        if not terms:
            raise ConfigError(f"{path}.terms", "empty sum")
        fn = build_function(terms[0], dim, f"{path}.terms[0]")
        for i, term in enumerate(terms[1:], start=1):
            fn = fn.plus(build_function(term, dim, f"{path}.terms[{i}]"))
    elif family in function_families:
        factory, allowed = function_families[family]
        unknown = set(block) - set(allowed) - {"family", "offset"}
        if unknown:
            raise ConfigError(f"{path}.{sorted(unknown)[0]}", f"not a parameter of '{family}'")
        kwargs = {k: block[k] for k in allowed if k in block}
        try:
            fn = factory(dim, **kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(path, str(e))
    else:
        raise ConfigError(f"{path}.family", f"unknown family '{family}'")
    if "offset" in block:
        fn = fn.add_constant(_number(block["offset"], f"{path}.offset"))
    return fn


def modulated_matrix(matrix, amplitude: float = 0.5, scale: float = 1.0, center=None):
    """x -> M (1 + amplitude exp(-|x - center|^2 / (2 scale^2))), a smooth SPD-valued map."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    c = np.zeros(M.shape[0]) if center is None else np.asarray(center, dtype=float)

    def base(points):
        weight = 1.0 + amplitude * np.exp(-np.sum((points - c) ** 2, axis=-1) / (2.0 * scale ** 2))
        return weight[:, None, None] * M[None, :, :]

    return base


def build_field(block: dict, dim: int, path: str = "kernel.field") -> AnisotropyField:
    variant = _require(block, "variant", path)
    try:
        if variant == "identity":
            return AnisotropyField.identity(dim)
        if variant == "constant":
            return AnisotropyField.constant(_require(block, "matrix", path))
        if variant in ("separable_sum", "separable_product"):
            M = block.get("matrix", np.eye(dim).tolist())
            base = modulated_matrix(M, block.get("amplitude", 0.5), block.get("scale", 1.0), block.get("center"))
            description = {"matrix": M, "amplitude": block.get("amplitude", 0.5), "scale": block.get("scale", 1.0)}
            factory = AnisotropyField.separable_sum if variant == "separable_sum" else AnisotropyField.separable_product
            field = factory(base, dim)
            field.description = description
            return field
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e))
    raise ConfigError(f"{path}.variant", f"unknown variant '{variant}', expected one of {field_variants}")


def build_kernel(block: dict, path: str = "kernel") -> KernelSpec:
    dim = _number(_require(block, "dim", path), f"{path}.dim", int)
    s = _number(_require(block, "s", path), f"{path}.s")
    field = build_field(block.get("field", {"variant": "identity"}), dim, f"{path}.field")
    if "gamma" in block and "Gamma" in block:
        gamma, Gamma = _number(block["gamma"], f"{path}.gamma"), _number(block["Gamma"], f"{path}.Gamma")
    elif field.is_constant:
        eigen = np.linalg.eigvalsh(field.matrix)
        gamma, Gamma = float(eigen.min()), float(eigen.max())
    else:
        raise ConfigError(f"{path}.gamma", "variable fields need explicit ellipticity bounds")
    try:
        bounds = EllipticityBounds(gamma, Gamma, s, dim)
    except ValueError as e:
        raise ConfigError(path, str(e))
    return KernelSpec(field, bounds, normalized=bool(block.get("normalized", True)))


def build_domain(block: dict, path: str = "domain") -> DomainDescriptor:
    kind = _require(block, "kind", path)
    try:
        if kind == "interval":
            return DomainDescriptor.interval(float(_require(block, "lower", path)), float(_require(block, "upper", path)))
        if kind == "ball":
            return DomainDescriptor.ball(_require(block, "center", path), float(_require(block, "radius", path)))
        if kind == "box":
            return DomainDescriptor.box(_require(block, "lower", path), _require(block, "upper", path))
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e))
    raise ConfigError(f"{path}.kind", f"unknown domain kind '{kind}'")


class FunctionCatalog:
    """Injected into the use cases so the application layer never parses JSON itself."""

    def function(self, block: dict, dim: int, path: str = "function") -> SmoothFunction:
        return build_function(block, dim, path)

    def optional_function(self, block: Optional[dict], dim: int, path: str) -> Optional[SmoothFunction]:
        return None if not block else build_function(block, dim, path)

    def kernel(self, block: dict, path: str = "kernel") -> KernelSpec:
        return build_kernel(block, path)

    def field(self, block: dict, dim: int, path: str = "kernel.field") -> AnisotropyField:
        return build_field(block, dim, path)

    def domain(self, block: dict, path: str = "domain") -> DomainDescriptor:
        return build_domain(block, path)
