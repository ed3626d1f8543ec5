from dataclasses import dataclass

import numpy as np

from application.domain.models.errors import DomainError, InputError


@dataclass
class QuadratureScheme:
    """Direction set plus radial rules for principal-value integrals around a point.

    The ball of radius ``inner_radius`` is integrated with the symmetrised integrand and a
    Gauss-Jacobi rule carrying the weight r^{1-2s} (``inner_nodes`` on (0, 1), scaled by the
    radius). The annulus up to ``outer_radius`` is split at kink crossings and integrated in
    log-radius with graded Gauss-Legendre panels. Beyond ``outer_radius`` the tail is added in
    closed form when ``tail_estimate_enabled``.
    """
    inner_radius: float
    outer_radius: float
    s: float
    directions: np.ndarray
    direction_weights: np.ndarray
    inner_nodes: np.ndarray
    inner_weights: np.ndarray
    outer_order: int = 8
    panel_width: float = 0.25
    grading_ratio: float = 0.15
    grading_levels: int = 6
    tail_estimate_enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.inner_radius < self.outer_radius:
            raise DomainError(f"need 0 < inner_radius < outer_radius, got ({self.inner_radius}, {self.outer_radius})")
        self.directions = np.atleast_2d(self.directions)
        reflected = -self.directions
        # every direction needs its antipode for the principal value
        gaps = np.min(np.linalg.norm(self.directions[:, None, :] - reflected[None, :, :], axis=-1), axis=1)
        if np.max(gaps) > 1e-10:
            raise InputError("direction set is not symmetric under theta -> -theta")

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def to_dict(self):
        return {
            "inner_radius": self.inner_radius,
            "outer_radius": self.outer_radius,
            "s": self.s,
            "directions": int(self.directions.shape[0]),
            "inner_order": int(self.inner_nodes.size),
            "outer_order": self.outer_order,
            "tail_estimate_enabled": self.tail_estimate_enabled,
        }
