"""Engine configuration with the documented defaults.

Every tunable the runtime, tools, or graph builder consults lives here so a
single JSON file (--config) can override them.
"""

import json
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Optional, Tuple


@dataclass
class EngineConfig:
    # database construction
    clip_len: float = 5.0                # clip segment length, seconds
    fps: float = 2.0                     # frame sampling rate
    max_edge: int = 720                  # longest frame edge requested from backends
    caption_retries: int = 2             # extra attempts per clip on captioner failure
    embed_dim: Optional[int] = None      # None: take the embedder's dimension

    # retrieval / tools
    top_k: int = 16                      # clip_retrieve default
    iou_threshold: float = 0.5           # object_detect dedup
    max_frames: int = 64                 # frame_analysis budget
    merge_gap: Optional[float] = None    # clip_merge max gap; None means clip_len
    coherence_threshold: float = 0.5     # clip_merge caption cosine floor
    payload_budget: int = 4000           # rendered observation size cap
    boundary_tau_scale: float = 0.8      # boundary_detect threshold = scale * max score

    # entity graph
    lambdas: Tuple[float, float, float] = (0.4, 0.3, 0.3)
    window_size: int = 16                # captions per extraction window
    window_overlap: int = 2
    identity_threshold: float = 0.85     # null-id subject merge cosine
    seed_threshold: float = 0.35         # graph query seed cosine
    max_hops: int = 2
    traversal_cap: int = 32              # graph query result cap
    cluster_k_range: Tuple[int, int] = (3, 8)
    cluster_seed: int = 0

    # agent runtime
    n_max: int = 10
    strict_switch: bool = False

    # backends
    chat_endpoint: Optional[str] = None       # full chat-completions URL
    chat_model: str = ""
    perception_endpoint: Optional[str] = None  # base URL of the perception adapter
    api_token: Optional[str] = None
    chat_timeout: float = 120.0
    perception_timeout: float = 60.0

    def __post_init__(self):
        if isinstance(self.lambdas, list):
            self.lambdas = tuple(self.lambdas)
        if isinstance(self.cluster_k_range, list):
            self.cluster_k_range = tuple(self.cluster_k_range)

    @property
    def effective_merge_gap(self) -> float:
        return self.clip_len if self.merge_gap is None else self.merge_gap

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EngineConfig":
        known = {f.name for f in fields(cls)}
        # accept "lambda" as the documented key for the weighting triple
        data = dict(data)
        if "lambda" in data:
            data["lambdas"] = data.pop("lambda")
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "EngineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out
