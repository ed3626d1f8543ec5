from typing import List, Optional, Sequence

from infrastructure.persistence.serialization import to_csv, to_json
from interfaces.repositories.artifact_repository import ArtifactRepository


class InMemoryArtifactRepository(ArtifactRepository):
    def __init__(self):
        self.storage = {}

    def save_json(self, name: str, payload: dict) -> str:
        key = f"{name}.json"
        self.storage[key] = to_json(payload)
        return key

    def save_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
        key = f"{name}.csv"
        self.storage[key] = to_csv(header, rows)
        return key

    def get(self, name: str) -> Optional[str]:
        return self.storage.get(name)

    def find_all(self) -> List[str]:
        return sorted(self.storage)

    def delete(self, name: str) -> bool:
        if name in self.storage:
            del self.storage[name]
            return True
        return False
