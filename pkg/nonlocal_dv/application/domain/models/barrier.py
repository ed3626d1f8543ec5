from dataclasses import dataclass

from application.domain.models.errors import InputError
from application.domain.models.functions import SmoothFunction
from application.domain.models.kernel import AnisotropyField
from application.domain.models.lattice import DomainDescriptor, DomainKind


@dataclass
class BarrierConfig:
    """Boundary-layer scan of d^alpha on a ball or interval."""
    domain: DomainDescriptor
    alpha: float
    delta: float
    field: AnisotropyField
    h: SmoothFunction
    s: float
    mesh: float = 1e-4
    points: int = 12
    normalized: bool = True

    def __post_init__(self):
        if self.domain.kind not in (DomainKind.BALL, DomainKind.INTERVAL):
            raise InputError(f"barrier scans need an exact distance; got a {self.domain.kind.value} domain")
        if not 0.0 < self.alpha < 2.0 * self.s + 1.0:
            raise InputError(f"alpha must lie in (0, 2s + 1), got {self.alpha}")
        if self.delta <= 0:
            raise InputError(f"boundary layer width must be positive, got {self.delta}")
        if self.d_min >= self.delta:
            raise InputError(f"scan floor {self.d_min} is not below the layer width {self.delta}")
        if self.points < 3:
            raise InputError("a scan needs at least three points")

    @property
    def d_min(self) -> float:
        return 4.0 * self.mesh

    def to_dict(self):
        return {
            "domain": self.domain.to_dict(),
            "alpha": self.alpha,
            "delta": self.delta,
            "s": self.s,
            "d_min": self.d_min,
            "points": self.points,
            "field": self.field.to_dict(),
            "h": self.h.to_dict(),
        }
