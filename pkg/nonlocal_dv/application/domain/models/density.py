from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from application.domain.models.errors import InputError
from application.domain.models.functions import SmoothFunction
from application.domain.models.lattice import GridFunction


@dataclass
class DensitySpec:
    """Probability density f with compact support.

    ``sqrt_f`` is the smooth square root when it is known analytically; the
    ``sqrt_f_regularity`` flag asserts that it is regular enough for the closed form.
    ``center`` and ``lambda_`` record the rescaling f_lambda(x) = lambda^-N f((x - center) / lambda).
    """
    f: SmoothFunction
    sqrt_f: Optional[SmoothFunction] = None
    sqrt_f_regularity: bool = False
    center: np.ndarray = None
    lambda_: float = 1.0
    name: str = "density"

    def __post_init__(self):
        if self.lambda_ <= 0:
            raise InputError(f"scale must be positive, got {self.lambda_}")
        if self.center is None:
            self.center = np.zeros(self.f.dim)
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if self.f.support is None:
            raise InputError(f"{self.name}: density needs a compact support")
        if self.sqrt_f_regularity and self.sqrt_f is None:
            raise InputError(f"{self.name}: regularity flag set without a square root")

    @property
    def dim(self) -> int:
        return self.f.dim

    @property
    def support(self):
        return self.f.support

    def root(self) -> SmoothFunction:
        if self.sqrt_f is not None:
            return self.sqrt_f
        f = self.f
        return SmoothFunction(lambda p: np.sqrt(np.clip(f.evaluator(p), 0.0, None)), f.dim, support=f.support,
                              kinks=f.breakpoints(), far_value=0.0, name=f"sqrt({f.name})")

    def to_dict(self):
        return {
            "name": self.name,
            "f": self.f.to_dict(),
            "sqrt_f_regularity": self.sqrt_f_regularity,
            "center": self.center.tolist(),
            "lambda": self.lambda_,
        }


@dataclass
class ExponentParam:
    """w = log v for the positive multiplier v in u = sqrt(f) v."""
    w: GridFunction

    def __post_init__(self):
        if not np.all(np.isfinite(self.w.values)):
            raise InputError("exponent must be finite")

    @property
    def v(self) -> np.ndarray:
        return np.exp(self.w.values)

    def to_dict(self):
        return {"min_w": float(self.w.values.min()), "max_w": float(self.w.values.max())}
