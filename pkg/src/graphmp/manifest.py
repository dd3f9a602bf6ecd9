"""Run manifests: enough context to reproduce any run bit-for-bit.

Every service request (and hence every CLI run) emits one. Deterministic
computations reproduce exactly from an identical manifest; Monte-Carlo ones
reproduce exactly too, because all sampling is counter-based on the seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    command: str
    input_path: str | None
    input_sha256: str
    config: dict
    seed: int | None = None
    tool_version: str = __version__
    started_utc: str = field(default_factory=_now)
    finished_utc: str | None = None

    def finish(self) -> "RunManifest":
        self.finished_utc = _now()
        return self

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input_path": self.input_path,
            "input_sha256": self.input_sha256,
            "config": self.config,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "started_utc": self.started_utc,
            "finished_utc": self.finished_utc,
        }
