import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from application.domain.models.errors import InputError
from application.domain.models.functions import SmoothFunction, as_points
from application.domain.models.kernel import KernelSpec
from application.domain.models.quadrature import QuadratureScheme
from application.domain.services.kernel_field_service import KernelFieldService


logger = logging.getLogger('nonlocal_dv')


class NonlocalOpsService:
    """Pointwise principal-value quadrature for L_K u, B_K(u, v) and L_K u + B_K(u, h)."""

    def __init__(self, kernel_service: KernelFieldService):
        self.kernel_service = kernel_service

    # quadrature construction

    def directions(self, N: int, angular: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Unit directions and weights integrating over the sphere S^{N-1}."""
        if N == 1:
            return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
        if N == 2:
            m = angular or 64
            angles = 2.0 * np.pi * (np.arange(m) + 0.5) / m
            return np.stack([np.cos(angles), np.sin(angles)], axis=-1), np.full(m, 2.0 * np.pi / m)
        if N == 3:
            n_polar = angular or 12
            n_azimuth = 2 * n_polar
            cos_t, w_t = leggauss(n_polar)
            phi = 2.0 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
            sin_t = np.sqrt(1.0 - cos_t ** 2)
            dirs = np.stack([
                np.outer(sin_t, np.cos(phi)).ravel(),
                np.outer(sin_t, np.sin(phi)).ravel(),
                np.repeat(cos_t, n_azimuth),
            ], axis=-1)
            weights = np.repeat(w_t, n_azimuth) * (2.0 * np.pi / n_azimuth)
            return dirs, weights
        raise InputError(f"pointwise quadrature supports N <= 3, got {N}")

    def build_scheme(self, spec: KernelSpec, inner_radius: float = 0.01, outer_radius: float = 50.0,
                     inner_order: int = 16, outer_order: int = 8, angular: Optional[int] = None,
                     panel_width: float = 0.25, tail_estimate_enabled: bool = True) -> QuadratureScheme:
        dirs, weights = self.directions(spec.dim, angular)
        # Gauss-Jacobi for the weight (1 + xi)^{1-2s} on [-1, 1], mapped to r in (0, 1)
        xi, w = roots_jacobi(inner_order, 0.0, 1.0 - 2.0 * spec.s)
        return QuadratureScheme(
            inner_radius=inner_radius,
            outer_radius=outer_radius,
            s=spec.s,
            directions=dirs,
            direction_weights=weights,
            inner_nodes=0.5 * (xi + 1.0),
            inner_weights=w,
            outer_order=outer_order,
            panel_width=panel_width,
            tail_estimate_enabled=tail_estimate_enabled,
        )

    def _panels(self, ta: float, tb: float, quad: QuadratureScheme) -> np.ndarray:
        """Sub-panel edges on [ta, tb], uniform inside and graded geometrically toward both ends."""
        count = max(1, int(np.ceil((tb - ta) / quad.panel_width)))
        edges = np.linspace(ta, tb, count + 1)
        if count == 1:
            edges = np.array([ta, 0.5 * (ta + tb), tb])
        grading = quad.grading_ratio ** np.arange(quad.grading_levels, 0, -1)
        head = edges[0] + (edges[1] - edges[0]) * grading
        tail = edges[-1] - (edges[-1] - edges[-2]) * grading[::-1]
        return np.concatenate([edges[:1], head, edges[1:-1], tail, edges[-1:]])

    def radial_rule(self, breaks: np.ndarray, quad: QuadratureScheme) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes r and weights for the integral of F(r) r^N d(log r) over [breaks[0], breaks[-1]]."""
        base_nodes, base_weights = leggauss(quad.outer_order)
        nodes: List[np.ndarray] = []
        weights: List[np.ndarray] = []
        for ra, rb in zip(breaks[:-1], breaks[1:]):
            if rb - ra <= 1e-14 * rb:
                continue
            edges = self._panels(np.log(ra), np.log(rb), quad)
            left, right = edges[:-1, None], edges[1:, None]
            t = 0.5 * (right - left) * base_nodes[None, :] + 0.5 * (right + left)
            nodes.append(t.ravel())
            weights.append((0.5 * (right - left) * base_weights[None, :]).ravel())
        t = np.concatenate(nodes)
        return np.exp(t), np.concatenate(weights)

    # core integral

    def _reach(self, x: np.ndarray, functions: List[SmoothFunction], quad: QuadratureScheme) -> float:
        """Radius beyond which every function equals its far value."""
        radius = quad.outer_radius
        for fn in functions:
            if fn.support is not None:
                radius = max(radius, np.linalg.norm(x - fn.support.center) + fn.support.radius + 1e-9)
        return radius

    def _integrate(self, x: np.ndarray, spec: KernelSpec, quad: QuadratureScheme,
                   functions: List[SmoothFunction], numerator: Callable[[np.ndarray], np.ndarray],
                   far_numerator: float) -> float:
        """Integral of numerator(y) K(x, y) dy over R^N, numerator(x) = 0."""
        if quad.dim != spec.dim:
            raise InputError(f"quadrature built for dimension {quad.dim}, kernel has dimension {spec.dim}")
        starts = np.full(quad.directions.shape[0], quad.inner_radius)
        return float(self._inner_ball(x, spec, quad, numerator)
                     + self.ray_integral(x, spec, quad, starts, functions, numerator, far_numerator))

    def _inner_ball(self, x: np.ndarray, spec: KernelSpec, quad: QuadratureScheme,
                    numerator: Callable[[np.ndarray], np.ndarray]) -> float:
        """Principal value over the inner ball, symmetrised over y and 2x - y."""
        s, N = spec.s, spec.dim
        dirs, dir_w = quad.directions, quad.direction_weights
        rho = quad.inner_radius
        r = rho * quad.inner_nodes
        offsets = r[None, :, None] * dirs[:, None, :]
        plus, minus = x + offsets, x - offsets
        k_plus = self.kernel_service.kernel_values(spec, x, plus)
        k_minus = self.kernel_service.kernel_values(spec, x, minus)
        g_plus = numerator(plus.reshape(-1, N)).reshape(k_plus.shape)
        g_minus = numerator(minus.reshape(-1, N)).reshape(k_minus.shape)
        sym = 0.5 * (g_plus * k_plus + g_minus * k_minus) * r ** (N - 1) / r ** (1.0 - 2.0 * s)
        return float((0.5 * rho) ** (2.0 - 2.0 * s) * np.sum(dir_w[:, None] * quad.inner_weights[None, :] * sym))

    def ray_integral(self, x: np.ndarray, spec: KernelSpec, quad: QuadratureScheme, starts: np.ndarray,
                     functions: List[SmoothFunction], numerator: Callable[[np.ndarray], np.ndarray],
                     far_numerator: float, stop: Optional[float] = None) -> float:
        """Integral of numerator(y) K(x, y) over {x + r theta : r > starts[theta]}.

        Each ray is split at the kink crossings of ``functions``; beyond the reach of their
        supports the numerator equals ``far_numerator`` and the tail is summed in closed form.
        With ``stop`` the rays end at that radius and no tail is added.
        """
        N, s = spec.dim, spec.s
        dirs, dir_w = quad.directions, quad.direction_weights
        if stop is not None:
            reach = float(stop)
        else:
            reach = max(self._reach(x, functions, quad), 2.0 * float(np.max(starts)))
        spheres = [sp for fn in functions for sp in fn.breakpoints()]
        all_points, all_weights = [], []
        for d in range(dirs.shape[0]):
            start = starts[d]
            breaks = [start, reach]
            for sphere in spheres:
                roots = sphere.crossings(x, dirs[d:d + 1])[0]
                breaks.extend(t for t in roots if np.isfinite(t) and start < t < reach)
            radii, weights = self.radial_rule(np.unique(breaks), quad)
            all_points.append(x + radii[:, None] * dirs[d])
            all_weights.append(dir_w[d] * weights * radii ** N)
        points = np.concatenate(all_points)
        weights = np.concatenate(all_weights)
        body = float(np.sum(weights * numerator(points) * self.kernel_service.kernel_values(spec, x, points)))

        tail = 0.0
        if stop is None and quad.tail_estimate_enabled and far_numerator != 0.0:
            far = x + reach * dirs
            q = spec.field.quadratic_form(x, far) / reach ** 2
            tail = far_numerator * self.kernel_service.scale(spec) * float(
                np.sum(dir_w * q ** (-spec.bounds.exponent))) * reach ** (-2.0 * s) / (2.0 * s)
        return body + tail

    def far_value_of(self, fn: SmoothFunction) -> float:
        if fn.far_value is None:
            raise InputError(f"{fn.name} has no far-field value; its tail integral diverges")
        return fn.far_value

    def _point(self, x, spec: KernelSpec) -> np.ndarray:
        return as_points(x, spec.dim)[0]

    # operations

    def apply_LK(self, u: SmoothFunction, spec: KernelSpec, x, quad: QuadratureScheme) -> float:
        x = self._point(x, spec)
        far = self.far_value_of(u)
        ux = u.value_at(x)
        return self._integrate(x, spec, quad, [u], lambda p: u(p) - ux, far - ux)

    def apply_B(self, u: SmoothFunction, v: SmoothFunction, spec: KernelSpec, x,
                quad: QuadratureScheme) -> float:
        x = self._point(x, spec)
        far_u, far_v = self.far_value_of(u), self.far_value_of(v)
        ux, vx = u.value_at(x), v.value_at(x)
        return self._integrate(x, spec, quad, [u, v], lambda p: 0.5 * (u(p) - ux) * (v(p) - vx),
                               0.5 * (far_u - ux) * (far_v - vx))

    def apply_B_window(self, u: SmoothFunction, v: SmoothFunction, spec: KernelSpec, x,
                       quad: QuadratureScheme, radius: float) -> float:
        """B_K(u, v)(x) restricted to the ball |y - x| < radius."""
        if radius <= quad.inner_radius:
            raise InputError(f"window radius {radius} must exceed the inner radius {quad.inner_radius}")
        x = self._point(x, spec)
        ux, vx = u.value_at(x), v.value_at(x)
        numerator = lambda p: 0.5 * (u(p) - ux) * (v(p) - vx)
        starts = np.full(quad.directions.shape[0], quad.inner_radius)
        return self._inner_ball(x, spec, quad, numerator) + self.ray_integral(
            x, spec, quad, starts, [u, v], numerator, 0.0, stop=radius)

    def apply_drifted(self, u: SmoothFunction, h: SmoothFunction, spec: KernelSpec, x,
                      quad: QuadratureScheme) -> float:
        return self.apply_LK(u, spec, x, quad) + self.apply_B(u, h, spec, x, quad)

    def apply_LK_many(self, u: SmoothFunction, spec: KernelSpec, points, quad: QuadratureScheme) -> np.ndarray:
        return np.array([self.apply_LK(u, spec, p, quad) for p in as_points(points, spec.dim)])

    def apply_B_many(self, u: SmoothFunction, v: SmoothFunction, spec: KernelSpec, points,
                     quad: QuadratureScheme) -> np.ndarray:
        return np.array([self.apply_B(u, v, spec, p, quad) for p in as_points(points, spec.dim)])

    def tail_bound(self, u: SmoothFunction, spec: KernelSpec, x, quad: QuadratureScheme) -> float:
        """Bound on the far field beyond the outer radius: 2 sup|u| c Gamma^{-(N+2s)/2} |S| R^{-2s} / (2s)."""
        x = self._point(x, spec)
        sup = u.sup_norm if u.sup_norm is not None else float(np.max(np.abs(u(x))))
        reach = self._reach(x, [u], quad)
        far = x + reach * quad.directions
        q = spec.field.quadratic_form(x, far) / reach ** 2
        return 2.0 * sup * self.kernel_service.scale(spec) * float(
            np.sum(quad.direction_weights * q ** (-spec.bounds.exponent))) * reach ** (-2.0 * spec.s) / (2.0 * spec.s)

    def product_rule_residual(self, u: SmoothFunction, v: SmoothFunction, spec: KernelSpec, x,
                              quad: QuadratureScheme) -> float:
        """L_K(uv) - u L_K v - v L_K u - 2 B(u, v) at x; vanishes up to quadrature error."""
        x = self._point(x, spec)
        ux, vx = u.value_at(x), v.value_at(x)
        return (self.apply_LK(u.times(v), spec, x, quad) - ux * self.apply_LK(v, spec, x, quad)
                - vx * self.apply_LK(u, spec, x, quad) - 2.0 * self.apply_B(u, v, spec, x, quad))
