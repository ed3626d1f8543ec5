"""Analytic inputs of the operators: u, v, h, densities and the barrier d^alpha.

A ``SmoothFunction`` wraps a vectorised evaluator together with the metadata the
quadrature needs: where the function stops being smooth (``kinks``), the ball
outside of which it is constant (``support``) and that constant (``far_value``).
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from application.domain.models.errors import InputError


def as_points(x, dim: int) -> np.ndarray:
    """Coerce x to an (M, dim) array of points."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, dim)
    return arr.reshape(-1, dim)


@dataclass
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if self.radius < 0:
            raise InputError(f"sphere radius must be nonnegative, got {self.radius}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - self.center, axis=-1) < self.radius

    def crossings(self, x: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Distances t > 0 with |x + t theta - center| = radius, one row per direction.

        Returns a (D, 2) array with NaN where a root does not exist.
        """
        offset = x - self.center
        b = directions @ offset
        disc = b ** 2 - (offset @ offset - self.radius ** 2)
        roots = np.full((directions.shape[0], 2), np.nan)
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        roots[ok, 0] = -b[ok] - root[ok]
        roots[ok, 1] = -b[ok] + root[ok]
        roots[roots <= 0] = np.nan
        return roots

    def enclosing(self, other: "Sphere") -> "Sphere":
        return Sphere(self.center, max(self.radius, np.linalg.norm(other.center - self.center) + other.radius))

    def to_dict(self):
        return {"center": self.center.tolist(), "radius": self.radius}


@dataclass
class SmoothFunction:
    """Scalar function on R^N with quadrature metadata.

    ``support``: outside this ball the function equals ``far_value``.
    ``base`` and ``linear_map``: when set, the function is base(linear_map @ x).
    """
    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int
    gradient_evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: Optional[Sphere] = None
    kinks: List[Sphere] = field(default_factory=list)
    far_value: Optional[float] = None
    sup_norm: Optional[float] = None
    name: str = "function"
    params: dict = field(default_factory=dict)
    base: Optional["SmoothFunction"] = None
    linear_map: Optional[np.ndarray] = None

    @property
    def support_radius(self) -> Optional[float]:
        return None if self.support is None else self.support.radius

    @property
    def has_tail(self) -> bool:
        return self.far_value is not None

    def __call__(self, x) -> np.ndarray:
        points = as_points(x, self.dim)
        return np.asarray(self.evaluator(points), dtype=float).reshape(points.shape[0])

    def value_at(self, x) -> float:
        return float(self(x)[0])

    def gradient(self, x) -> np.ndarray:
        if self.gradient_evaluator is None:
            raise InputError(f"{self.name} has no gradient")
        points = as_points(x, self.dim)
        return np.asarray(self.gradient_evaluator(points), dtype=float).reshape(points.shape)

    def breakpoints(self) -> List[Sphere]:
        spheres = list(self.kinks)
        if self.support is not None:
            spheres.append(self.support)
        return spheres

    def oscillation(self, points) -> float:
        values = self(points)
        if self.far_value is not None:
            values = np.append(values, self.far_value)
        return float(values.max() - values.min())

    # algebra

    def _combine(self, other: "SmoothFunction", op, name: str, support: Optional[Sphere], far_value, grad=None):
        if other.dim != self.dim:
            raise InputError(f"cannot combine functions of dimension {self.dim} and {other.dim}")
        return SmoothFunction(
            evaluator=lambda p: op(self.evaluator(p), other.evaluator(p)),
            dim=self.dim,
            gradient_evaluator=grad,
            support=support,
            kinks=self.breakpoints() + other.breakpoints(),
            far_value=far_value,
            name=name,
        )

    def plus(self, other: "SmoothFunction") -> "SmoothFunction":
        support = None
        if self.support is not None and other.support is not None:
            support = self.support.enclosing(other.support)
        far = None if self.far_value is None or other.far_value is None else self.far_value + other.far_value
        grad = None
        if self.gradient_evaluator is not None and other.gradient_evaluator is not None:
            grad = lambda p: self.gradient_evaluator(p) + other.gradient_evaluator(p)
        return self._combine(other, np.add, f"({self.name} + {other.name})", support, far, grad)

    def minus(self, other: "SmoothFunction") -> "SmoothFunction":
        return self.plus(other.scaled(-1.0))

    def times(self, other: "SmoothFunction") -> "SmoothFunction":
        if self.support is not None and self.far_value == 0.0:
            support = self.support
        elif other.support is not None and other.far_value == 0.0:
            support = other.support
        elif self.support is not None and other.support is not None:
            support = self.support.enclosing(other.support)
        else:
            support = None
        far = None if self.far_value is None or other.far_value is None else self.far_value * other.far_value
        grad = None
        if self.gradient_evaluator is not None and other.gradient_evaluator is not None:
            grad = lambda p: (self.gradient_evaluator(p) * other.evaluator(p)[:, None]
                              + other.gradient_evaluator(p) * self.evaluator(p)[:, None])
        return self._combine(other, np.multiply, f"({self.name} * {other.name})", support, far, grad)

    def add_constant(self, c: float) -> "SmoothFunction":
        return SmoothFunction(
            evaluator=lambda p: self.evaluator(p) + c,
            dim=self.dim,
            gradient_evaluator=self.gradient_evaluator,
            support=self.support,
            kinks=list(self.kinks),
            far_value=None if self.far_value is None else self.far_value + c,
            sup_norm=None if self.sup_norm is None else self.sup_norm + abs(c),
            name=f"({self.name} + {c:g})",
        )

    def scaled(self, a: float) -> "SmoothFunction":
        grad = None if self.gradient_evaluator is None else (lambda p: a * self.gradient_evaluator(p))
        return SmoothFunction(
            evaluator=lambda p: a * self.evaluator(p),
            dim=self.dim,
            gradient_evaluator=grad,
            support=self.support,
            kinks=list(self.kinks),
            far_value=None if self.far_value is None else a * self.far_value,
            sup_norm=None if self.sup_norm is None else abs(a) * self.sup_norm,
            name=f"{a:g}*{self.name}",
        )

    def composed(self, matrix) -> "SmoothFunction":
        """x -> self(T x) for an invertible T. Kinks are not preserved."""
        T = np.atleast_2d(np.asarray(matrix, dtype=float))
        if T.shape != (self.dim, self.dim):
            raise InputError(f"linear map shape {T.shape} does not match dimension {self.dim}")
        support = None
        if self.support is not None:
            sigma_min = np.linalg.svd(T, compute_uv=False).min()
            support = Sphere(np.linalg.solve(T, self.support.center), self.support.radius / sigma_min)
        grad = None
        if self.gradient_evaluator is not None:
            grad = lambda p: self.gradient_evaluator(p @ T.T) @ T
        base = self.base if self.base is not None else self
        prior = self.linear_map if self.linear_map is not None else np.eye(self.dim)
        return SmoothFunction(
            evaluator=lambda p: self.evaluator(p @ T.T),
            dim=self.dim,
            gradient_evaluator=grad,
            support=support,
            far_value=self.far_value,
            sup_norm=self.sup_norm,
            name=f"{self.name}∘T",
            params={"linear_map": T.tolist()},
            base=base,
            linear_map=prior @ T,
        )

    def to_dict(self):
        payload = {"name": self.name, "dim": self.dim, "far_value": self.far_value}
        if self.support is not None:
            payload["support"] = self.support.to_dict()
        payload.update(self.params)
        return payload


# families

def gaussian(dim: int, center=None, scale: float = 1.0, amplitude: float = 1.0) -> SmoothFunction:
    c = np.zeros(dim) if center is None else np.atleast_1d(np.asarray(center, dtype=float))

    def evaluate(p):
        return amplitude * np.exp(-np.sum((p - c) ** 2, axis=-1) / (2.0 * scale ** 2))

    def grad(p):
        return -(p - c) / scale ** 2 * evaluate(p)[:, None]

    return SmoothFunction(evaluate, dim, gradient_evaluator=grad, far_value=0.0, sup_norm=abs(amplitude),
                          name="gaussian", params={"center": c.tolist(), "scale": scale, "amplitude": amplitude})


def bump(dim: int, center=None, radius: float = 1.0, amplitude: float = 1.0) -> SmoothFunction:
    """amplitude * exp(1 - 1/(1 - r^2)) with r = |x - center| / radius; equals amplitude at the center."""
    c = np.zeros(dim) if center is None else np.atleast_1d(np.asarray(center, dtype=float))

    def evaluate(p):
        q = 1.0 - np.sum((p - c) ** 2, axis=-1) / radius ** 2
        out = np.zeros(q.shape)
        inside = q > 0
        out[inside] = amplitude * np.exp(1.0 - 1.0 / q[inside])
        return out

    def grad(p):
        q = 1.0 - np.sum((p - c) ** 2, axis=-1) / radius ** 2
        coef = np.zeros(q.shape)
        inside = q > 0
        coef[inside] = amplitude * np.exp(1.0 - 1.0 / q[inside]) / q[inside] ** 2 * (-2.0 / radius ** 2)
        return (p - c) * coef[:, None]

    return SmoothFunction(evaluate, dim, gradient_evaluator=grad, support=Sphere(c, radius), far_value=0.0,
                          sup_norm=abs(amplitude), name="bump",
                          params={"center": c.tolist(), "radius": radius, "amplitude": amplitude})


def constant(dim: int, value: float) -> SmoothFunction:
    return SmoothFunction(lambda p: np.full(p.shape[0], float(value)), dim,
                          gradient_evaluator=lambda p: np.zeros(p.shape),
                          far_value=float(value), sup_norm=abs(value), name="constant", params={"value": value})


def fractional_profile(dim: int, s: float, center=None, radius: float = 1.0) -> SmoothFunction:
    """(1 - |x - center|^2 / radius^2)_+^{1+s}."""
    c = np.zeros(dim) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    boundary = Sphere(c, radius)

    def evaluate(p):
        q = 1.0 - np.sum((p - c) ** 2, axis=-1) / radius ** 2
        return np.clip(q, 0.0, None) ** (1.0 + s)

    return SmoothFunction(evaluate, dim, support=boundary, kinks=[boundary], far_value=0.0, sup_norm=1.0,
                          name="fractional_profile", params={"s": s, "center": c.tolist(), "radius": radius})


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity transition from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        left = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        right = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return left / (left + right)


def exterior_step(dim: int, height: float = 200.0, width: float = 0.5) -> SmoothFunction:
    """Zero on the unit ball, rising smoothly to ``height`` on |x| >= 1 + width."""
    origin = np.zeros(dim)

    def evaluate(p):
        return height * _smoothstep((np.linalg.norm(p, axis=-1) - 1.0) / width)

    return SmoothFunction(evaluate, dim, support=Sphere(origin, 1.0 + width),
                          kinks=[Sphere(origin, 1.0), Sphere(origin, 1.0 + width)],
                          far_value=height, sup_norm=abs(height), name="exterior_step",
                          params={"height": height, "width": width})


def distance_power(dim: int, alpha: float, center=None, radius: float = 1.0) -> SmoothFunction:
    """d(x)^alpha inside the ball, zero outside; d is the distance to the boundary sphere."""
    c = np.zeros(dim) if center is None else np.atleast_1d(np.asarray(center, dtype=float))

    def evaluate(p):
        d = radius - np.linalg.norm(p - c, axis=-1)
        return np.clip(d, 0.0, None) ** alpha

    boundary = Sphere(c, radius)
    return SmoothFunction(evaluate, dim, support=boundary, kinks=[boundary, Sphere(c, 0.0)], far_value=0.0,
                          sup_norm=radius ** alpha, name="distance_power",
                          params={"alpha": alpha, "center": c.tolist(), "radius": radius})


def dipole(dim: int, center=None, scale: float = 1.0, amplitude: float = 1.0, axis: int = 0) -> SmoothFunction:
    """amplitude * (x - center)_axis / scale * exp(-|x - center|^2 / (2 scale^2)); odd about the center."""
    c = np.zeros(dim) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    if not 0 <= axis < dim:
        raise InputError(f"axis {axis} out of range for dimension {dim}")

    def evaluate(p):
        z = p - c
        return amplitude * z[:, axis] / scale * np.exp(-np.sum(z ** 2, axis=-1) / (2.0 * scale ** 2))

    def grad(p):
        z = p - c
        g = np.exp(-np.sum(z ** 2, axis=-1) / (2.0 * scale ** 2))
        out = -z * (amplitude * z[:, axis] / scale ** 3 * g)[:, None]
        out[:, axis] += amplitude / scale * g
        return out

    return SmoothFunction(evaluate, dim, gradient_evaluator=grad, far_value=0.0,
                          sup_norm=abs(amplitude) * np.exp(-0.5), name="dipole",
                          params={"center": c.tolist(), "scale": scale, "amplitude": amplitude, "axis": axis})
