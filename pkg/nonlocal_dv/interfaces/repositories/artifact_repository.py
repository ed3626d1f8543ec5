from abc import ABC, abstractmethod
from typing import List, Optional, Sequence


class ArtifactRepository(ABC):
    @abstractmethod
    def save_json(self, name: str, payload: dict) -> str:
        pass

    @abstractmethod
    def save_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
        pass

    @abstractmethod
    def get(self, name: str) -> Optional[str]:
        pass

    @abstractmethod
    def find_all(self) -> List[str]:
        pass

    @abstractmethod
    def delete(self, name: str) -> bool:
        pass
