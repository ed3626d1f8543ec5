import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


@dataclass
class Settings:
    log_level: str = "INFO"
    log_file: str = os.path.join("logs", "nonlocal_dv.log")
    store: str = "filesystem"
    max_nodes: int = 6000
    threads: int = 1


def get_settings() -> Settings:
    return Settings(
        log_level=os.getenv("NONLOCAL_DV_LOG", "INFO").upper(),
        log_file=os.getenv("NONLOCAL_DV_LOG_FILE", os.path.join("logs", "nonlocal_dv.log")),
        store=os.getenv("NONLOCAL_DV_STORE", "filesystem"),
        max_nodes=int(os.getenv("NONLOCAL_DV_MAX_NODES", "6000")),
        threads=int(os.getenv("NONLOCAL_DV_THREADS", "1")),
    )
