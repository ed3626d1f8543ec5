import json

import pytest
from dependency_injector import providers

from application.domain.models.experiment import Command, ExperimentConfig
from containers import NonlocalDVContainer
from infrastructure.persistence.in_memory import InMemoryArtifactRepository
from interfaces.controllers.experiment_controller import EXIT_OK


@pytest.fixture(scope="module")
def container():
    container = NonlocalDVContainer()
    container.artifact_repo.override(providers.Singleton(InMemoryArtifactRepository))
    container.threads.override(providers.Object(2))
    yield container
    container.artifact_repo.reset_override()
    container.threads.reset_override()


def test_repository_is_shared(container):
    assert container.artifact_repo() is container.artifact_repo()
    first = container.operator_use_cases()
    second = container.inverse_problem_use_cases()
    assert first.repository is second.repository


def test_threads_reach_the_services(container):
    assert container.inverse_service().threads == 2
    assert container.barrier_service().threads == 2


def test_controller_runs_against_memory_store(container):
    config = ExperimentConfig(command=Command.RECOVER_MATRIX,
                              blocks={"hidden_matrix": {"matrix": [[2.0, 0.0], [0.0, 1.0]], "s": 0.5}})
    controller = container.experiment_controller()

    assert controller.run(config) == EXIT_OK
    repository = container.artifact_repo()
    assert repository.find_all() == ["recover_matrix.csv", "recover_matrix.json"]
    summary = json.loads(repository.get("recover_matrix.json"))
    assert summary["provenance"]["identities"] == sorted(["fourier_energy", "rotation_probe",
                                                          "determinant_closure"])
