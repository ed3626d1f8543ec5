import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


logger = logging.getLogger('nonlocal_dv')


@dataclass
class Extrapolation:
    limit: float
    rate: Optional[float]
    monotone: bool
    lambdas: list
    values: list

    @property
    def error_estimate(self) -> float:
        return abs(self.values[-1] - self.limit)

    def to_dict(self):
        return {"limit": self.limit, "rate": self.rate, "monotone": self.monotone,
                "lambdas": list(self.lambdas), "values": list(self.values)}


class Extrapolator:
    """Three-point Richardson extrapolation to lambda -> 0 on a geometric sequence."""

    def __init__(self, flat_tolerance: float = 1e-12):
        self.flat_tolerance = flat_tolerance

    def richardson(self, lambdas: Sequence[float], values: Sequence[float]) -> Extrapolation:
        lambdas = [float(x) for x in lambdas]
        values = [float(v) for v in values]
        if len(values) < 3 or len(values) != len(lambdas):
            raise ValueError("Richardson extrapolation needs three values on three scales")
        ratio = lambdas[-3] / lambdas[-2]
        a1, a2, a3 = values[-3:]
        d1, d2 = a1 - a2, a2 - a3
        scale = max(abs(a1), abs(a2), abs(a3), 1e-300)
        if abs(d1) <= self.flat_tolerance * scale and abs(d2) <= self.flat_tolerance * scale:
            return Extrapolation(a3, None, True, lambdas, values)
        if d1 * d2 <= 0 or abs(d2) >= abs(d1):
            logger.warning(f"Non-monotone sequence {values}; returning the finest value")
            return Extrapolation(a3, None, False, lambdas, values)
        rate = float(np.log(d1 / d2) / np.log(ratio))
        limit = a3 - d2 / (ratio ** rate - 1.0)
        logger.debug(f"Richardson: rate {rate:.3f}, limit {limit:.6g}")
        return Extrapolation(float(limit), rate, True, lambdas, values)

    def fitted_rate(self, lambdas: Sequence[float], errors: Sequence[float]) -> float:
        """Slope of log|error| against log(lambda)."""
        errors = np.abs(np.asarray(errors, dtype=float))
        slope, _ = np.polyfit(np.log(np.asarray(lambdas, dtype=float)), np.log(errors), 1)
        return float(slope)
