"""Adapter configuration: one model spec per role, or the echo stub.

Every role must be resolvable at startup or explicitly stubbed; resolution
failures are startup errors, not request-time surprises.
"""

import json
from dataclasses import dataclass, field, fields
from typing import Dict, Optional

ROLE_NAMES = ("caption", "embed", "detect", "ocr", "frame_sim", "analyze")

STUB = "stub"


class AdapterConfigError(Exception):
    pass


@dataclass
class AdapterConfig:
    # role -> model identifier, or "stub"
    roles: Dict[str, str] = field(default_factory=lambda: {r: STUB for r in ROLE_NAMES})
    device: str = "cpu"
    video_root: Optional[str] = None        # required when any role decodes frames
    stub_fixtures: Optional[str] = None     # fixture dir for stubbed roles
    max_edge: int = 720
    max_batch: int = 32
    frame_cache_size: int = 256

    def __post_init__(self):
        unknown = set(self.roles) - set(ROLE_NAMES)
        if unknown:
            raise AdapterConfigError(f"unknown roles configured: {sorted(unknown)}")
        for role in ROLE_NAMES:
            self.roles.setdefault(role, STUB)
        if self.all_stubbed():
            if not self.stub_fixtures:
                raise AdapterConfigError("stub mode requires stub_fixtures")
        elif any(self.roles[r] != STUB for r in ("caption", "detect", "ocr",
                                                 "frame_sim", "analyze")):
            # any frame-consuming real role needs somewhere to decode from
            if not self.video_root:
                raise AdapterConfigError("real perception roles require video_root")
        if any(self.roles[r] == STUB for r in ROLE_NAMES) and not self.stub_fixtures:
            raise AdapterConfigError("stubbed roles require stub_fixtures")

    def all_stubbed(self) -> bool:
        return all(self.roles[r] == STUB for r in ROLE_NAMES)

    @classmethod
    def from_file(cls, path: str) -> "AdapterConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise AdapterConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def stub_only(cls, fixture_dir: str) -> "AdapterConfig":
        return cls(stub_fixtures=fixture_dir)
