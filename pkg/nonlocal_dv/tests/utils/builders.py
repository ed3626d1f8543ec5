import numpy as np

from application.domain.models.kernel import AnisotropyField, EllipticityBounds, KernelSpec
from application.domain.models.lattice import DomainDescriptor, LatticeDomain
from application.domain.services.boundary_barrier_service import BoundaryBarrierService
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.dv_functional_service import DVFunctionalService
from application.domain.services.eigen_service import EigenService
from application.domain.services.extrapolation import Extrapolator
from application.domain.services.inverse_problem_service import InverseProblemService
from application.domain.services.kernel_field_service import KernelFieldService
from application.domain.services.nonlocal_ops_service import NonlocalOpsService


def identity_spec(dim: int = 1, s: float = 0.5, normalized: bool = True) -> KernelSpec:
    return KernelSpec(AnisotropyField.identity(dim), EllipticityBounds(1.0, 1.0, s, dim), normalized=normalized)


def constant_spec(matrix, s: float = 0.5, normalized: bool = True) -> KernelSpec:
    field = AnisotropyField.constant(matrix)
    eigen = np.linalg.eigvalsh(field.matrix)
    return KernelSpec(field, EllipticityBounds(float(eigen.min()), float(eigen.max()), s, field.dim),
                      normalized=normalized)


def interval_lattice(mesh: float = 0.1, a: float = -1.0, b: float = 1.0) -> LatticeDomain:
    return LatticeDomain(DomainDescriptor.interval(a, b), mesh)


class ServiceStack:
    """The service graph the container builds, without the container."""

    def __init__(self, threads: int = 1, max_nodes: int = 6000):
        self.kernel_service = KernelFieldService()
        self.ops_service = NonlocalOpsService(self.kernel_service)
        self.discretize_service = DiscretizeService(self.kernel_service, self.ops_service, max_nodes=max_nodes)
        self.eigen_service = EigenService(self.discretize_service, self.ops_service)
        self.dv_service = DVFunctionalService(self.discretize_service, self.eigen_service)
        self.extrapolator = Extrapolator()
        self.inverse_service = InverseProblemService(self.kernel_service, self.ops_service, self.discretize_service,
                                                     self.dv_service, self.extrapolator, threads=threads)
        self.barrier_service = BoundaryBarrierService(self.ops_service, self.extrapolator, threads=threads)
