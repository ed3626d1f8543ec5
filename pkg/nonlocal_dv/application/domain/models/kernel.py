from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from application.domain.models.errors import DomainError, EllipticityError, InputError


class FieldVariant(Enum):
    CONSTANT = "constant"
    SEPARABLE_SUM = "separable_sum"
    SEPARABLE_PRODUCT = "separable_product"


@dataclass
class EllipticityBounds:
    gamma: float
    Gamma_: float
    s: float
    dim: int

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"fractional order s must lie in (0,1), got {self.s}")
        if not 0.0 < self.gamma <= self.Gamma_ < np.inf:
            raise DomainError(f"ellipticity bounds must satisfy 0 < gamma <= Gamma < inf, got ({self.gamma}, {self.Gamma_})")
        if self.dim < 1:
            raise DomainError(f"dimension must be positive, got {self.dim}")

    @property
    def exponent(self) -> float:
        """(N + 2s) / 2, the power applied to the quadratic form."""
        return 0.5 * (self.dim + 2.0 * self.s)

    def to_dict(self):
        return {"gamma": self.gamma, "Gamma": self.Gamma_, "s": self.s, "dim": self.dim}


@dataclass
class AnisotropyField:
    """Matrix map A(x, y) defining the kernel.

    ``base`` is the map x -> Ã(x) for the separable variants. It must be vectorised:
    an array of points of shape (M, N) is mapped to matrices of shape (M, N, N).
    """
    variant: FieldVariant
    dim: int
    matrix: Optional[np.ndarray] = None
    base: Optional[Callable[[np.ndarray], np.ndarray]] = None
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant == FieldVariant.CONSTANT:
            if self.matrix is None:
                raise InputError("constant anisotropy field needs a matrix")
            self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
            if self.matrix.shape != (self.dim, self.dim):
                raise InputError(f"matrix shape {self.matrix.shape} does not match dimension {self.dim}")
            if not np.allclose(self.matrix, self.matrix.T, rtol=1e-12, atol=1e-14):
                raise EllipticityError("anisotropy matrix is not symmetric")
            try:
                np.linalg.cholesky(self.matrix)
            except np.linalg.LinAlgError:
                raise EllipticityError("anisotropy matrix is not positive definite")
        elif self.base is None:
            raise InputError(f"{self.variant.value} anisotropy field needs a base map")

    @classmethod
    def constant(cls, matrix) -> "AnisotropyField":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(FieldVariant.CONSTANT, dim=matrix.shape[0], matrix=matrix)

    @classmethod
    def identity(cls, dim: int) -> "AnisotropyField":
        return cls.constant(np.eye(dim))

    @classmethod
    def separable_sum(cls, base, dim: int) -> "AnisotropyField":
        return cls(FieldVariant.SEPARABLE_SUM, dim=dim, base=base)

    @classmethod
    def separable_product(cls, base, dim: int) -> "AnisotropyField":
        return cls(FieldVariant.SEPARABLE_PRODUCT, dim=dim, base=base)

    @property
    def is_constant(self) -> bool:
        return self.variant == FieldVariant.CONSTANT

    def base_at(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.dim)
        values = np.asarray(self.base(flat), dtype=float).reshape(flat.shape[0], self.dim, self.dim)
        return values.reshape(points.shape[:-1] + (self.dim, self.dim))

    def matrices(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if self.is_constant:
            return np.broadcast_to(self.matrix, x.shape[:-1] + (self.dim, self.dim))
        ax, ay = self.base_at(x), self.base_at(y)
        if self.variant == FieldVariant.SEPARABLE_SUM:
            return ax + ay
        return ax @ ay + ay @ ax

    def quadratic_form(self, x: np.ndarray, y: np.ndarray, base_x: Optional[np.ndarray] = None,
                       base_y: Optional[np.ndarray] = None) -> np.ndarray:
        """(x - y)^T A(x, y) (x - y), broadcast over leading axes.

        ``base_x`` and ``base_y`` may carry precomputed Ã values (broadcastable to x, y).
        """
        z = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.is_constant:
            return np.einsum("...i,ij,...j->...", z, self.matrix, z)
        ax = self.base_at(np.broadcast_to(x, z.shape)) if base_x is None else base_x
        ay = self.base_at(np.broadcast_to(y, z.shape)) if base_y is None else base_y
        if self.variant == FieldVariant.SEPARABLE_SUM:
            return np.einsum("...i,...ij,...j->...", z, ax, z) + np.einsum("...i,...ij,...j->...", z, ay, z)
        # z^T (Ax Ay + Ay Ax) z = 2 (Ax z) . (Ay z) for symmetric Ax, Ay
        return 2.0 * np.einsum("...i,...i->...", np.einsum("...ij,...j->...i", ax, z), np.einsum("...ij,...j->...i", ay, z))

    def at(self, x, y) -> np.ndarray:
        return np.array(self.matrices(np.atleast_1d(x)[None, :], np.atleast_1d(y)[None, :])[0])

    def frozen(self, x0) -> "AnisotropyField":
        """Constant field with the coefficient A(x0, x0)."""
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        return AnisotropyField.constant(self.at(x0, x0))

    def to_dict(self):
        payload = {"variant": self.variant.value, "dim": self.dim}
        if self.is_constant:
            payload["matrix"] = self.matrix.tolist()
        payload.update(self.description)
        return payload


@dataclass
class KernelSpec:
    """K(x, y) = |(x - y)^T A(x, y) (x - y)|^{-(N + 2s)/2}, times c_{N,s} when ``normalized``."""
    field: AnisotropyField
    bounds: EllipticityBounds
    normalized: bool = True

    def __post_init__(self):
        if self.field.dim != self.bounds.dim:
            raise InputError(f"field dimension {self.field.dim} differs from bounds dimension {self.bounds.dim}")

    @property
    def s(self) -> float:
        return self.bounds.s

    @property
    def dim(self) -> int:
        return self.bounds.dim

    def with_field(self, anisotropy: AnisotropyField) -> "KernelSpec":
        return KernelSpec(field=anisotropy, bounds=self.bounds, normalized=self.normalized)

    def to_dict(self):
        return {"field": self.field.to_dict(), "bounds": self.bounds.to_dict(), "normalized": self.normalized}
