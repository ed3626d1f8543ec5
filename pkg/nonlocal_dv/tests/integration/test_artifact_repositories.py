import json

import numpy as np
import pytest

from infrastructure.persistence.filesystem import FileSystemArtifactRepository
from infrastructure.persistence.in_memory import InMemoryArtifactRepository


@pytest.fixture(scope="module", params=["filesystem", "memory"])
def repository(request, tmp_path_factory):
    if request.param == "filesystem":
        return FileSystemArtifactRepository(str(tmp_path_factory.mktemp("artifacts") / "run"))
    return InMemoryArtifactRepository()


def test_empty_store(repository):
    assert repository.get("nothing.json") is None
    assert repository.delete("nothing.json") is False


def test_save_and_get_json(repository):
    repository.save_json("summary", {"value": np.float64(0.25), "vector": np.arange(3), "ok": np.bool_(True)})
    payload = json.loads(repository.get("summary.json"))
    assert payload == {"ok": True, "value": 0.25, "vector": [0, 1, 2]}


def test_json_is_canonical(repository):
    repository.save_json("ordered", {"b": 1, "a": 2})
    text = repository.get("ordered.json")
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")


def test_save_csv_keeps_full_precision(repository):
    repository.save_csv("table", ["x", "value"], [[1, 0.1 + 0.2], [2, np.float64(1.0 / 3.0)]])
    lines = repository.get("table.csv").splitlines()
    assert lines[0] == "x,value"
    assert float(lines[1].split(",")[1]) == 0.1 + 0.2
    assert float(lines[2].split(",")[1]) == 1.0 / 3.0


def test_find_all_and_delete(repository):
    repository.save_json("temporary", {})
    assert "temporary.json" in repository.find_all()
    assert repository.delete("temporary.json") is True
    assert "temporary.json" not in repository.find_all()


def test_unserialisable_payload(repository):
    with pytest.raises(TypeError):
        repository.save_json("broken", {"value": object()})
