import logging
import os
from typing import List, Optional, Sequence

from infrastructure.persistence.serialization import to_csv, to_json
from interfaces.repositories.artifact_repository import ArtifactRepository

logger = logging.getLogger('nonlocal_dv')


class FileSystemArtifactRepository(ArtifactRepository):
    def __init__(self, base_dir: str):
        self.base_dir = base_dir

    def _write(self, name: str, text: str) -> str:
        os.makedirs(self.base_dir, exist_ok=True)
        path = os.path.join(self.base_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info(f"Wrote {path}")
        return path

    def save_json(self, name: str, payload: dict) -> str:
        return self._write(f"{name}.json", to_json(payload))

    def save_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
        return self._write(f"{name}.csv", to_csv(header, rows))

    def get(self, name: str) -> Optional[str]:
        path = os.path.join(self.base_dir, name)
        if not os.path.isfile(path):
            return None
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()

    def find_all(self) -> List[str]:
        if not os.path.isdir(self.base_dir):
            return []
        return sorted(os.listdir(self.base_dir))

    def delete(self, name: str) -> bool:
        path = os.path.join(self.base_dir, name)
        if os.path.isfile(path):
            os.remove(path)
            return True
        return False
