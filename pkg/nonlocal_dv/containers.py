"""containers.py

This module defines the NonlocalDVContainer, which wires the experiment pipeline together with the
`dependency_injector` library.

The container:
- Chooses the artifact repository from the NONLOCAL_DV_STORE environment variable: JSON/CSV files in the
  output directory (`filesystem`, the default) or an in-memory store (`memory`, used by the tests).
- Uses `Singleton` providers for the repository and the stateless kernel service, so every service of one
  run shares them.
- Uses `Factory` providers for the numerical services, the use cases and the experiment controller.
- Exposes `output_dir`, `threads` and `max_nodes` as `Object` providers; `app.main` overrides them from the
  command line before anything is built.

Swapping an implementation (another repository, a service with different tolerances) only touches this file.

"""

import os
from dotenv import load_dotenv
from dependency_injector import containers, providers

from infrastructure.config.function_catalog import FunctionCatalog
from infrastructure.persistence.filesystem import FileSystemArtifactRepository
from infrastructure.persistence.in_memory import InMemoryArtifactRepository

from application.domain.services.kernel_field_service import KernelFieldService
from application.domain.services.nonlocal_ops_service import NonlocalOpsService
from application.domain.services.discretize_service import DiscretizeService
from application.domain.services.eigen_service import EigenService
from application.domain.services.dv_functional_service import DVFunctionalService
from application.domain.services.extrapolation import Extrapolator
from application.domain.services.inverse_problem_service import InverseProblemService
from application.domain.services.boundary_barrier_service import BoundaryBarrierService

from application.use_cases.operator_use_cases import OperatorUseCases
from application.use_cases.eigen_use_cases import EigenUseCases
from application.use_cases.dv_functional_use_cases import DVFunctionalUseCases
from application.use_cases.inverse_problem_use_cases import InverseProblemUseCases
from application.use_cases.barrier_use_cases import BarrierUseCases
from application.use_cases.verification_use_cases import VerificationUseCases

from interfaces.controllers.experiment_controller import ExperimentController


load_dotenv()


class NonlocalDVContainer(containers.DeclarativeContainer):
    output_dir = providers.Object("results")
    threads = providers.Object(int(os.getenv("NONLOCAL_DV_THREADS", "1")))
    max_nodes = providers.Object(int(os.getenv("NONLOCAL_DV_MAX_NODES", "6000")))

    # Repositories
    store = os.getenv("NONLOCAL_DV_STORE", "filesystem")
    if store == "memory":
        artifact_repo = providers.Singleton(InMemoryArtifactRepository)
    else:
        artifact_repo = providers.Singleton(FileSystemArtifactRepository, base_dir=output_dir)

    catalog = providers.Singleton(FunctionCatalog)

    # Services
    kernel_service = providers.Singleton(KernelFieldService)
    ops_service = providers.Factory(NonlocalOpsService, kernel_service=kernel_service)
    discretize_service = providers.Factory(DiscretizeService, kernel_service=kernel_service,
                                           ops_service=ops_service, max_nodes=max_nodes)
    eigen_service = providers.Factory(EigenService, discretize_service=discretize_service, ops_service=ops_service)
    dv_service = providers.Factory(DVFunctionalService, discretize_service=discretize_service,
                                   eigen_service=eigen_service)
    extrapolator = providers.Factory(Extrapolator)
    inverse_service = providers.Factory(InverseProblemService, kernel_service=kernel_service, ops_service=ops_service,
                                        discretize_service=discretize_service, dv_service=dv_service,
                                        extrapolator=extrapolator, threads=threads)
    barrier_service = providers.Factory(BoundaryBarrierService, ops_service=ops_service, extrapolator=extrapolator,
                                        threads=threads)

    # Use Cases
    operator_use_cases = providers.Factory(OperatorUseCases, ops_service=ops_service,
                                           discretize_service=discretize_service, catalog=catalog,
                                           repository=artifact_repo)
    eigen_use_cases = providers.Factory(EigenUseCases, eigen_service=eigen_service,
                                        discretize_service=discretize_service, catalog=catalog,
                                        repository=artifact_repo)
    dv_functional_use_cases = providers.Factory(DVFunctionalUseCases, dv_service=dv_service,
                                                discretize_service=discretize_service, catalog=catalog,
                                                repository=artifact_repo)
    inverse_problem_use_cases = providers.Factory(InverseProblemUseCases, inverse_service=inverse_service,
                                                  dv_service=dv_service, catalog=catalog, repository=artifact_repo)
    barrier_use_cases = providers.Factory(BarrierUseCases, barrier_service=barrier_service, catalog=catalog,
                                          repository=artifact_repo)
    verification_use_cases = providers.Factory(VerificationUseCases, ops_service=ops_service,
                                               discretize_service=discretize_service, eigen_service=eigen_service,
                                               dv_service=dv_service, inverse_service=inverse_service,
                                               barrier_service=barrier_service, repository=artifact_repo)

    # Controllers
    experiment_controller = providers.Factory(
        ExperimentController,
        operator_use_cases=operator_use_cases,
        eigen_use_cases=eigen_use_cases,
        dv_functional_use_cases=dv_functional_use_cases,
        inverse_problem_use_cases=inverse_problem_use_cases,
        barrier_use_cases=barrier_use_cases,
        verification_use_cases=verification_use_cases,
    )
