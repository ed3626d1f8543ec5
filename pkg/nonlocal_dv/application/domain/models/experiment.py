import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional


class Command(Enum):
    OPERATOR_EVAL = "operator-eval"
    EIGEN = "eigen"
    DV_FUNCTIONAL = "dv-functional"
    RECOVER_MATRIX = "recover-matrix"
    RECOVER_DRIFT = "recover-drift"
    BARRIER_CHECK = "barrier-check"
    VERIFY = "verify"


# blocks each command reads from the config file
REQUIRED_BLOCKS = {
    Command.OPERATOR_EVAL: ("kernel", "function", "points"),
    Command.EIGEN: ("kernel", "domain"),
    Command.DV_FUNCTIONAL: ("kernel", "density"),
    Command.RECOVER_MATRIX: ("hidden_matrix",),
    Command.RECOVER_DRIFT: ("kernel", "density", "drifts"),
    Command.BARRIER_CHECK: ("kernel", "barrier"),
    Command.VERIFY: (),
}


@dataclass
class ExperimentConfig:
    command: Command
    kernel: dict = field(default_factory=dict)
    domain: dict = field(default_factory=dict)
    density: dict = field(default_factory=dict)
    drift: dict = field(default_factory=dict)
    blocks: dict = field(default_factory=dict)
    output_dir: str = "results"
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    raw: dict = field(default_factory=dict)

    def block(self, name: str) -> Optional[dict]:
        if name in ("kernel", "domain", "density", "drift"):
            return getattr(self, name) or None
        return self.blocks.get(name)

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def to_dict(self):
        return {
            "command": self.command.value,
            "kernel": self.kernel,
            "domain": self.domain,
            "density": self.density,
            "drift": self.drift,
            "blocks": self.blocks,
            "output_dir": self.output_dir,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "threads": self.threads,
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, without the output directory and thread count."""
        payload = {k: v for k, v in self.to_dict().items() if k not in ("output_dir", "threads")}
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def provenance(self, identities: List[str]) -> dict:
        return {"command": self.command.value, "seed": self.seed, "config_sha256": self.digest(),
                "identities": sorted(identities)}
