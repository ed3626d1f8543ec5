from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from application.domain.models.errors import InputError
from application.domain.models.kernel import KernelSpec
from application.domain.models.functions import SmoothFunction


class DomainKind(Enum):
    INTERVAL = "interval"
    BALL = "ball"
    BOX = "box"
    SIGNED_DISTANCE = "signed_distance"


@dataclass
class DomainDescriptor:
    """Bounded open set Omega. ``signed_distance`` is negative inside."""
    kind: DomainKind
    lower: np.ndarray
    upper: np.ndarray
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    sdf: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or np.any(self.upper <= self.lower):
            raise InputError(f"invalid bounding box {self.lower.tolist()} .. {self.upper.tolist()}")
        if self.kind == DomainKind.SIGNED_DISTANCE and self.sdf is None:
            raise InputError("signed-distance domain needs a callable")

    @classmethod
    def interval(cls, a: float, b: float) -> "DomainDescriptor":
        return cls(DomainKind.INTERVAL, lower=[a], upper=[b])

    @classmethod
    def ball(cls, center, radius: float) -> "DomainDescriptor":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if radius <= 0:
            raise InputError(f"ball radius must be positive, got {radius}")
        return cls(DomainKind.BALL, lower=c - radius, upper=c + radius, center=c, radius=float(radius))

    @classmethod
    def box(cls, lower, upper) -> "DomainDescriptor":
        return cls(DomainKind.BOX, lower=lower, upper=upper)

    @classmethod
    def signed_distance(cls, sdf, lower, upper) -> "DomainDescriptor":
        return cls(DomainKind.SIGNED_DISTANCE, lower=lower, upper=upper, sdf=sdf)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def is_convex(self) -> bool:
        return self.kind != DomainKind.SIGNED_DISTANCE

    def distance(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.kind == DomainKind.BALL:
            return np.linalg.norm(points - self.center, axis=-1) - self.radius
        if self.kind in (DomainKind.INTERVAL, DomainKind.BOX):
            return np.max(np.maximum(self.lower - points, points - self.upper), axis=-1)
        return np.asarray(self.sdf(points), dtype=float)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.distance(points) < -tol

    def exit_distance(self, x: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Distance from an interior point x to the boundary along each direction."""
        if self.kind == DomainKind.BALL:
            offset = x - self.center
            b = directions @ offset
            return -b + np.sqrt(b ** 2 - (offset @ offset - self.radius ** 2))
        if self.kind in (DomainKind.INTERVAL, DomainKind.BOX):
            with np.errstate(divide="ignore", invalid="ignore"):
                to_upper = np.where(directions > 0, (self.upper - x) / directions, np.inf)
                to_lower = np.where(directions < 0, (self.lower - x) / directions, np.inf)
            return np.min(np.minimum(to_upper, to_lower), axis=1)
        raise InputError("exit distances are only available for convex descriptors")

    def scaled(self, factor: float, anchor) -> "DomainDescriptor":
        """Image under x -> anchor + factor * (x - anchor)."""
        anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
        lower = anchor + factor * (self.lower - anchor)
        upper = anchor + factor * (self.upper - anchor)
        if self.kind == DomainKind.BALL:
            return DomainDescriptor.ball(anchor + factor * (self.center - anchor), self.radius * factor)
        if self.kind == DomainKind.SIGNED_DISTANCE:
            sdf = self.sdf
            return DomainDescriptor.signed_distance(lambda p: factor * sdf(anchor + (p - anchor) / factor), lower, upper)
        return DomainDescriptor(self.kind, lower=lower, upper=upper)

    def to_dict(self):
        payload = {"kind": self.kind.value, "lower": self.lower.tolist(), "upper": self.upper.tolist()}
        if self.kind == DomainKind.BALL:
            payload.update({"center": self.center.tolist(), "radius": self.radius})
        return payload


@dataclass
class LatticeDomain:
    """Uniform lattice center + k * mesh covering Omega plus a margin.

    Nodes are aligned on the center of the bounding box, so scaling the domain and the
    mesh by the same factor about that center scales every node exactly.
    """
    descriptor: DomainDescriptor
    mesh: float
    margin: float = 0.0
    center: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    indices: np.ndarray = field(init=False)
    nodes: np.ndarray = field(init=False)
    interior_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.mesh <= 0:
            raise InputError(f"mesh width must be positive, got {self.mesh}")
        if self.margin < 0:
            raise InputError(f"margin must be nonnegative, got {self.margin}")
        d = self.descriptor
        self.center = 0.5 * (d.lower + d.upper)
        half = 0.5 * (d.upper - d.lower) + self.margin
        self.counts = np.floor(half / self.mesh + 1e-9).astype(int)
        axes = [np.arange(-k, k + 1) for k in self.counts]
        grid = np.meshgrid(*axes, indexing="ij")
        self.indices = np.stack([g.ravel() for g in grid], axis=-1)
        self.nodes = self.center + self.indices * self.mesh
        self.interior_mask = d.contains(self.nodes, tol=1e-9 * self.mesh)

    @property
    def dim(self) -> int:
        return self.descriptor.dim

    @property
    def cell_volume(self) -> float:
        return self.mesh ** self.dim

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[self.interior_mask]

    @property
    def exterior_nodes(self) -> np.ndarray:
        return self.nodes[~self.interior_mask]

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    def scaled(self, factor: float, anchor=None) -> "LatticeDomain":
        anchor = self.center if anchor is None else anchor
        return LatticeDomain(self.descriptor.scaled(factor, anchor), self.mesh * factor, self.margin * factor)

    def sample(self, fn: SmoothFunction, interior_only: bool = True) -> np.ndarray:
        return fn(self.interior_nodes if interior_only else self.nodes)

    def to_dict(self):
        return {
            "descriptor": self.descriptor.to_dict(),
            "mesh": self.mesh,
            "margin": self.margin,
            "center": self.center.tolist(),
            "counts": self.counts.tolist(),
            "n_interior": self.n_interior,
            "n_nodes": self.n_nodes,
        }


@dataclass
class GridFunction:
    """Values on the interior nodes; every exterior point carries ``exterior_value``."""
    lattice: LatticeDomain
    values: np.ndarray
    exterior_value: float = 0.0
    name: str = "u"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.lattice.n_interior:
            raise InputError(f"{self.name}: {self.values.size} values for {self.lattice.n_interior} interior nodes")
        if not np.all(np.isfinite(self.values)):
            raise InputError(f"{self.name}: values must be finite")

    @classmethod
    def sampled(cls, lattice: LatticeDomain, fn: SmoothFunction, name: Optional[str] = None) -> "GridFunction":
        return cls(lattice, lattice.sample(fn), name=name or fn.name)

    def with_values(self, values, name: Optional[str] = None) -> "GridFunction":
        return GridFunction(self.lattice, values, self.exterior_value, name or self.name)

    def times(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.lattice, self.values * other.values, self.exterior_value * other.exterior_value,
                            f"{self.name}*{other.name}")

    def integral(self) -> float:
        return float(self.values.sum() * self.lattice.cell_volume)

    def to_rows(self):
        coords = self.lattice.interior_nodes
        return [[i] + coords[i].tolist() + [float(v)] for i, v in enumerate(self.values)]

    def header(self):
        return ["index"] + [f"x{k}" for k in range(self.lattice.dim)] + [self.name]

    def to_dict(self):
        return {"name": self.name, "exterior_value": self.exterior_value, "lattice": self.lattice.to_dict(),
                "metadata": self.metadata}


@dataclass
class AssembledOperator:
    """Dense discretisation of L_K + B_K(., h) + V on the interior nodes.

    ``pair_weights`` W (zero diagonal) and ``exterior_mass`` kappa define the diffusion block
    M_L = W - diag(W 1) - diag(kappa). ``drift_exterior`` holds the integral of (h - h(x_i)) K
    over the complement of Omega. A grid function with exterior value c satisfies
    L u = matrix @ u + c * exterior_coupling.
    """
    lattice: LatticeDomain
    kernel: KernelSpec
    matrix: np.ndarray
    diffusion_matrix: np.ndarray
    drift_matrix: np.ndarray
    pair_weights: np.ndarray
    exterior_mass: np.ndarray
    potential: np.ndarray
    drift_source: np.ndarray
    drift_exterior: np.ndarray
    drift: Optional[SmoothFunction] = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def exterior_coupling(self) -> np.ndarray:
        return self.exterior_mass + 0.5 * self.drift_exterior

    @property
    def drift_oscillation(self) -> float:
        if self.drift is None:
            return 0.0
        return self.drift.oscillation(self.lattice.nodes)

    def with_potential(self, potential) -> "AssembledOperator":
        potential = np.broadcast_to(np.asarray(potential, dtype=float), (self.size,)).copy()
        return AssembledOperator(
            lattice=self.lattice, kernel=self.kernel,
            matrix=self.diffusion_matrix + self.drift_matrix + np.diag(potential),
            diffusion_matrix=self.diffusion_matrix, drift_matrix=self.drift_matrix,
            pair_weights=self.pair_weights, exterior_mass=self.exterior_mass,
            potential=potential, drift_source=self.drift_source, drift_exterior=self.drift_exterior,
            drift=self.drift,
        )

    def to_dict(self):
        return {
            "size": self.size,
            "kernel": self.kernel.to_dict(),
            "lattice": self.lattice.to_dict(),
            "drift": None if self.drift is None else self.drift.to_dict(),
            "drift_oscillation": self.drift_oscillation,
        }
