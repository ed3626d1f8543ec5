from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from application.domain.models.lattice import GridFunction


@dataclass
class EigenPair:
    """Principal eigenpair of -(L + V): (L + V) phi1 = -lambda1 phi1 with phi1 > 0, sup-normalised."""
    lambda1: float
    phi1: GridFunction
    residual: float
    iterations: int
    reference_lambda1: Optional[float] = None
    shift: Optional[float] = None
    left_vector: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def reference_gap(self) -> Optional[float]:
        if self.reference_lambda1 is None:
            return None
        return abs(self.lambda1 - self.reference_lambda1)

    def to_dict(self):
        return {
            "lambda1": self.lambda1,
            "residual": self.residual,
            "iterations": self.iterations,
            "reference_lambda1": self.reference_lambda1,
            "shift": self.shift,
            "min_phi1": float(np.min(self.phi1.values)),
        }
