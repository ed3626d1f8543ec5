from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from application.domain.models.errors import InputError


class ProbeKind(Enum):
    DIFFUSION = "diffusion"      # normalised by lambda^{2s}
    COORDINATE = "coordinate"    # normalised by lambda^{2s-1}


@dataclass
class ProbeResult:
    transform_tag: str
    lambda_: float
    raw_energy: float
    normalized_energy: float
    error_estimate: float
    s: float
    kind: ProbeKind = ProbeKind.COORDINATE

    def __post_init__(self):
        expected = self.raw_energy * self.lambda_ ** self.exponent
        if not np.isclose(expected, self.normalized_energy, rtol=1e-9, atol=0.0):
            raise InputError(f"probe {self.transform_tag}: normalisation does not match a {self.kind.value} probe")

    @property
    def exponent(self) -> float:
        return 2.0 * self.s if self.kind == ProbeKind.DIFFUSION else 2.0 * self.s - 1.0

    def to_row(self):
        return [self.transform_tag, self.lambda_, self.raw_energy, self.normalized_energy, self.error_estimate]

    def to_dict(self):
        return {
            "tag": self.transform_tag,
            "lambda": self.lambda_,
            "raw": self.raw_energy,
            "normalized": self.normalized_energy,
            "error": self.error_estimate,
            "kind": self.kind.value,
        }


PROBE_HEADER = ["tag", "lambda", "raw", "normalized", "error"]


@dataclass
class ReconstructionReport:
    recovered_matrix: np.ndarray
    rho: float
    per_entry_residuals: np.ndarray
    drift_values: List[float] = field(default_factory=list)
    probes: List[ProbeResult] = field(default_factory=list)
    inverse_matrix: Optional[np.ndarray] = None
    determinant_scale: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.recovered_matrix.shape[0]

    def to_dict(self):
        return {
            "recovered_matrix": np.asarray(self.recovered_matrix).tolist(),
            "rho": self.rho,
            "per_entry_residuals": np.asarray(self.per_entry_residuals).tolist(),
            "drift_values": list(self.drift_values),
            "determinant_scale": self.determinant_scale,
            "probes": len(self.probes),
        }
