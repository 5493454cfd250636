"""Compiled video knowledge base: clips, captions, embeddings, graph.

On-disk layout (one directory per video):

    manifest.json    UTF-8 JSON, schema_version 1
    clips.jsonl      one clip record per line
    graph.json       temporal knowledge graph (see graph.py)
    embeddings.bin   magic "AVIE", three LE uint32 (format version=1,
                     row count, dimension), then row-major LE float32

The loaded KnowledgeBase is immutable in practice: nothing mutates it after
construction, so any number of concurrent episodes may share it. Search is
an exact exhaustive cosine scan (clip counts stay small), which keeps the
oracle tests meaningful.
"""

import json
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .graph import TemporalKnowledgeGraph, graph_from_dict, graph_to_dict
from .intervals import TimeRange
from .util import extract_json_object, parse_seconds

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EMBEDDINGS_MAGIC = b"AVIE"
EMBEDDINGS_FORMAT_VERSION = 1


class KBError(Exception):
    """Base class for knowledge-base persistence problems."""


class SchemaVersionError(KBError):
    """The directory was written by an incompatible schema version."""


class CorruptKBError(KBError):
    """Stored artifacts disagree with their own declared sizes."""


@dataclass
class SubjectEntry:
    local_key: str
    name: str
    appearance: List[str] = field(default_factory=list)
    identity: List[str] = field(default_factory=list)
    first_seen: float = 0.0


@dataclass
class ClipRecord:
    clip_id: int
    span: TimeRange
    caption: str
    subject_registry: List[SubjectEntry] = field(default_factory=list)


@dataclass
class BuildCost:
    """One-time database construction cost (amortized across questions)."""

    tokens_in: int = 0
    tokens_out: int = 0
    seconds: float = 0.0
    calls: int = 0

    def add_usage(self, usage) -> None:
        self.tokens_in += usage.tokens_in
        self.tokens_out += usage.tokens_out
        self.seconds += usage.seconds
        self.calls += 1

    def to_dict(self) -> Dict[str, Any]:
        return {"tokens_in": self.tokens_in, "tokens_out": self.tokens_out,
                "seconds": self.seconds, "calls": self.calls}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BuildCost":
        return cls(tokens_in=int(data.get("tokens_in", 0)),
                   tokens_out=int(data.get("tokens_out", 0)),
                   seconds=float(data.get("seconds", 0.0)),
                   calls=int(data.get("calls", 0)))


@dataclass
class Manifest:
    schema_version: int
    video_id: str
    duration: float
    clip_len: float
    fps: float
    embed_dim: int
    clip_count: int
    node_count: int
    video_ref: str = ""
    diagnostics: List[str] = field(default_factory=list)
    build_cost: BuildCost = field(default_factory=BuildCost)

    def __post_init__(self):
        if self.clip_len <= 0 or self.fps <= 0 or self.embed_dim <= 0:
            raise ValueError("clip_len, fps, and embed_dim must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "video_id": self.video_id,
            "duration": self.duration,
            "clip_len": self.clip_len,
            "fps": self.fps,
            "embed_dim": self.embed_dim,
            "clip_count": self.clip_count,
            "node_count": self.node_count,
            "video_ref": self.video_ref,
            "diagnostics": list(self.diagnostics),
            "build_cost": self.build_cost.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Manifest":
        return cls(
            schema_version=int(data["schema_version"]),
            video_id=str(data["video_id"]),
            duration=float(data["duration"]),
            clip_len=float(data["clip_len"]),
            fps=float(data["fps"]),
            embed_dim=int(data["embed_dim"]),
            clip_count=int(data["clip_count"]),
            node_count=int(data["node_count"]),
            video_ref=str(data.get("video_ref", "")),
            diagnostics=list(data.get("diagnostics", [])),
            build_cost=BuildCost.from_dict(data.get("build_cost", {})),
        )


@dataclass
class KnowledgeBase:
    manifest: Manifest
    clips: List[ClipRecord]
    embeddings: np.ndarray  # (N, d) float32, unit-norm rows
    graph: TemporalKnowledgeGraph
    video_ref: str

    def __post_init__(self):
        if self.embeddings.shape[0] != len(self.clips):
            raise ValueError(
                f"{self.embeddings.shape[0]} embedding rows for {len(self.clips)} clips")

    def clip_ranges(self) -> List[TimeRange]:
        return [c.span for c in self.clips]

    def search(self, query_vec: np.ndarray, k: int) -> List[Tuple[int, float]]:
        return top_k_search(self, query_vec, k)


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------


def plan_segments(duration: float, clip_len: float) -> List[TimeRange]:
    """Tile [0, duration] with clip_len segments; a shorter remainder clip is
    kept so no content is unreachable."""
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if clip_len <= 0:
        raise ValueError(f"clip_len must be positive, got {clip_len}")
    segments: List[TimeRange] = []
    i = 0
    while True:
        # boundaries computed by multiplication so consecutive segments share
        # bit-identical endpoints
        start = i * clip_len
        if start >= duration:
            break
        segments.append(TimeRange(start, min((i + 1) * clip_len, duration)))
        i += 1
    return segments


# ---------------------------------------------------------------------------
# Caption document parsing
# ---------------------------------------------------------------------------


@dataclass
class ParsedCaption:
    caption: str
    registry: List[SubjectEntry]
    diagnostics: List[str] = field(default_factory=list)


def parse_caption_document(raw_reply: str, clip_span: Optional[TimeRange] = None) -> ParsedCaption:
    """Extract clip_description and subject_registry from a captioner reply.

    Unknown fields are ignored; subject timestamps are clamped into the
    clip's range when one is supplied. An unparseable reply (after the
    single bracket-scan repair) degrades to the raw text as caption.
    """
    obj = extract_json_object(raw_reply)
    if obj is None:
        return ParsedCaption(caption=raw_reply.strip(), registry=[],
                             diagnostics=["caption reply was not a JSON object"])
    diagnostics: List[str] = []
    caption = obj.get("clip_description")
    if not isinstance(caption, str):
        caption = ""
        diagnostics.append("caption reply missing clip_description")

    registry: List[SubjectEntry] = []
    raw_registry = obj.get("subject_registry")
    items: List[Tuple[str, Any]]
    if isinstance(raw_registry, dict):
        items = list(raw_registry.items())
    elif isinstance(raw_registry, list):
        items = [(f"subject_{i + 1}", entry) for i, entry in enumerate(raw_registry)]
    else:
        items = []
    for local_key, entry in items:
        if not isinstance(entry, dict):
            diagnostics.append(f"subject {local_key} is not an object")
            continue
        name = str(entry.get("name") or "").strip()
        if not name:
            diagnostics.append(f"subject {local_key} has no name")
            continue
        first_seen = parse_seconds(entry.get("first_seen"))
        if first_seen is None:
            first_seen = clip_span.start if clip_span else 0.0
        if clip_span is not None:
            first_seen = min(max(first_seen, clip_span.start), clip_span.end)

        def _as_list(value) -> List[str]:
            if isinstance(value, str):
                return [value]
            if isinstance(value, list):
                return [str(v) for v in value]
            return []

        registry.append(SubjectEntry(local_key=str(local_key), name=name,
                                     appearance=_as_list(entry.get("appearance")),
                                     identity=_as_list(entry.get("identity")),
                                     first_seen=first_seen))
    return ParsedCaption(caption=caption, registry=registry, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def normalize_rows(matrix: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """L2-normalize rows; all-zero rows become e1. Returns (matrix, fixed rows)."""
    out = matrix.astype(np.float32).copy()
    fixed: List[int] = []
    for i in range(out.shape[0]):
        norm = float(np.linalg.norm(out[i]))
        if norm == 0.0:
            out[i, :] = 0.0
            out[i, 0] = 1.0
            fixed.append(i)
        else:
            out[i] = out[i] / norm
    return out, fixed


def top_k_search(kb: KnowledgeBase, query_vec: np.ndarray, k: int) -> List[Tuple[int, float]]:
    """Exact top-min(k, N) clips by cosine, descending; ties break toward the
    lower clip_id. Stored rows are unit-norm so cosine is a dot product; the
    query is normalized defensively."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if query.shape[0] != kb.manifest.embed_dim:
        raise ValueError(
            f"query dimension {query.shape[0]} != embed_dim {kb.manifest.embed_dim}")
    n = kb.embeddings.shape[0]
    if n == 0:
        return []
    norm = float(np.linalg.norm(query))
    if norm == 0.0:
        query = np.zeros_like(query)
        query[0] = 1.0
    else:
        query = query / norm
    scores = kb.embeddings.astype(np.float64) @ query
    order = np.argsort(-scores, kind="stable")[: min(k, n)]
    return [(int(i), float(scores[i])) for i in order]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _clip_to_dict(clip: ClipRecord) -> Dict[str, Any]:
    return {
        "clip_id": clip.clip_id,
        "t_start": clip.span.start,
        "t_end": clip.span.end,
        "caption": clip.caption,
        "subject_registry": [
            {"local_key": s.local_key, "name": s.name, "appearance": list(s.appearance),
             "identity": list(s.identity), "first_seen": s.first_seen}
            for s in clip.subject_registry
        ],
    }


def _clip_from_dict(data: Dict[str, Any]) -> ClipRecord:
    return ClipRecord(
        clip_id=int(data["clip_id"]),
        span=TimeRange(float(data["t_start"]), float(data["t_end"])),
        caption=str(data["caption"]),
        subject_registry=[
            SubjectEntry(local_key=s["local_key"], name=s["name"],
                         appearance=list(s.get("appearance", [])),
                         identity=list(s.get("identity", [])),
                         first_seen=float(s.get("first_seen", 0.0)))
            for s in data.get("subject_registry", [])
        ],
    )


def save_kb(kb: KnowledgeBase, dir_path: str) -> None:
    os.makedirs(dir_path, exist_ok=True)
    with open(os.path.join(dir_path, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(kb.manifest.to_dict(), fh, indent=2)
        fh.write("\n")
    with open(os.path.join(dir_path, "clips.jsonl"), "w", encoding="utf-8") as fh:
        for clip in kb.clips:
            fh.write(json.dumps(_clip_to_dict(clip)) + "\n")
    with open(os.path.join(dir_path, "graph.json"), "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(kb.graph), fh, indent=2)
        fh.write("\n")
    rows, dim = kb.embeddings.shape
    with open(os.path.join(dir_path, "embeddings.bin"), "wb") as fh:
        fh.write(EMBEDDINGS_MAGIC)
        fh.write(struct.pack("<III", EMBEDDINGS_FORMAT_VERSION, rows, dim))
        fh.write(np.ascontiguousarray(kb.embeddings, dtype="<f4").tobytes())


def load_kb(dir_path: str) -> KnowledgeBase:
    manifest_path = os.path.join(dir_path, "manifest.json")
    if not os.path.exists(manifest_path):
        raise KBError(f"no manifest.json under {dir_path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = Manifest.from_dict(json.load(fh))
    if manifest.schema_version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"schema_version {manifest.schema_version} != supported {SCHEMA_VERSION}")

    clips: List[ClipRecord] = []
    with open(os.path.join(dir_path, "clips.jsonl"), "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                clips.append(_clip_from_dict(json.loads(line)))

    with open(os.path.join(dir_path, "graph.json"), "r", encoding="utf-8") as fh:
        graph = graph_from_dict(json.load(fh))

    with open(os.path.join(dir_path, "embeddings.bin"), "rb") as fh:
        blob = fh.read()
    if blob[:4] != EMBEDDINGS_MAGIC:
        raise CorruptKBError("embeddings.bin has a bad magic header")
    version, rows, dim = struct.unpack("<III", blob[4:16])
    if version != EMBEDDINGS_FORMAT_VERSION:
        raise SchemaVersionError(f"embeddings format version {version} unsupported")
    payload = blob[16:]
    if len(payload) != rows * dim * 4:
        raise CorruptKBError(
            f"embeddings payload is {len(payload)} bytes, expected {rows * dim * 4}")
    embeddings = np.frombuffer(payload, dtype="<f4").reshape(rows, dim).copy()

    if manifest.clip_count != len(clips):
        raise CorruptKBError(
            f"manifest clip_count {manifest.clip_count} != {len(clips)} stored clips")
    if rows != len(clips):
        raise CorruptKBError(f"{rows} embedding rows for {len(clips)} clips")
    if manifest.node_count != len(graph.nodes):
        raise CorruptKBError(
            f"manifest node_count {manifest.node_count} != {len(graph.nodes)} stored nodes")
    if dim != manifest.embed_dim:
        raise CorruptKBError(f"embedding dim {dim} != manifest embed_dim {manifest.embed_dim}")

    return KnowledgeBase(manifest=manifest, clips=clips, embeddings=embeddings,
                         graph=graph, video_ref=manifest.video_ref)


def kb_equal(a: KnowledgeBase, b: KnowledgeBase) -> bool:
    """Round-trip equality: embeddings bytewise, everything else structural."""
    return (a.manifest.to_dict() == b.manifest.to_dict()
            and [_clip_to_dict(c) for c in a.clips] == [_clip_to_dict(c) for c in b.clips]
            and graph_to_dict(a.graph) == graph_to_dict(b.graph)
            and a.embeddings.shape == b.embeddings.shape
            and a.embeddings.tobytes() == b.embeddings.tobytes()
            and a.video_ref == b.video_ref)
