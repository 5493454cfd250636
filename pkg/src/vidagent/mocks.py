"""Deterministic in-process mock backends.

Everything here is a pure function of (script, fixtures, call sequence), so
full-system tests and golden traces need no model and no network. The chat
mock replays canned replies by call index; perception mocks read fixture
annotation stores keyed by frame_time rounded to 3 decimals.
"""

import json
import os
import threading
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .backends import (
    AnalyzeReply,
    BackendError,
    BackendSuite,
    CaptionReply,
    ChatReply,
    ChatRequest,
    DetectReply,
    Detection,
    EmbedReply,
    FrameScore,
    FrameSimReply,
    OcrItem,
    OcrReply,
    ToolCall,
    Usage,
    round_times,
)
from .util import stable_token_hash

DEFAULT_MOCK_DIM = 256


def _approx_tokens(text: str) -> int:
    return len(text) // 4


def _message_tokens(messages: Sequence[Dict[str, Any]]) -> int:
    total = 0
    for m in messages:
        content = m.get("content") or ""
        total += _approx_tokens(content if isinstance(content, str) else json.dumps(content))
    return total


@dataclass
class MockScript:
    """Ordered canned chat replies, matched by call index.

    Each entry is {"text": str, "tool_calls": [{"name":..., "arguments": {...}}]}.
    Exhaustion policy is explicit: "fail" raises, "repeat_last" keeps
    returning the final entry.
    """

    replies: List[Dict[str, Any]]
    on_exhausted: str = "fail"

    def __post_init__(self):
        if self.on_exhausted not in ("fail", "repeat_last"):
            raise ValueError(f"unknown exhaustion policy {self.on_exhausted!r}")

    @classmethod
    def from_file(cls, path: str) -> "MockScript":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if isinstance(data, list):
            return cls(replies=data)
        return cls(replies=data["replies"], on_exhausted=data.get("on_exhausted", "fail"))


class ScriptedChat:
    """Chat backend replaying a MockScript; cursor advances atomically."""

    def __init__(self, script: MockScript):
        self.script = script
        self._cursor = 0
        self._lock = threading.Lock()

    @property
    def calls_made(self) -> int:
        return self._cursor

    def chat(self, request: ChatRequest) -> ChatReply:
        with self._lock:
            index = self._cursor
            self._cursor += 1
        replies = self.script.replies
        if index >= len(replies):
            if self.script.on_exhausted == "repeat_last" and replies:
                index = len(replies) - 1
            else:
                raise BackendError(f"chat script exhausted at call {index + 1}")
        entry = replies[index]
        text = entry.get("text", "") or ""
        calls = [
            ToolCall(name=tc["name"], arguments=dict(tc.get("arguments", {})),
                     call_id=f"call_{index}_{i}")
            for i, tc in enumerate(entry.get("tool_calls") or [])
        ]
        out_tokens = _approx_tokens(text) + sum(
            _approx_tokens(json.dumps(c.arguments, sort_keys=True)) for c in calls)
        usage = Usage(tokens_in=_message_tokens(request.messages),
                      tokens_out=out_tokens, seconds=0.0)
        return ChatReply(text=text, tool_calls=calls, usage=usage)


class HashEmbedder:
    """Deterministic bag-of-tokens embedding.

    Lowercase, split on non-alphanumerics, each token increments component
    hash(token) mod d, then L2-normalize. Empty token sets map to the e1
    unit vector so the output is always unit-norm.
    """

    def __init__(self, dim: int = DEFAULT_MOCK_DIM):
        if dim <= 0:
            raise ValueError("embedding dimension must be positive")
        self.dim = dim

    @staticmethod
    def tokenize(text: str) -> List[str]:
        out: List[str] = []
        current: List[str] = []
        for ch in text.lower():
            if ch.isalnum():
                current.append(ch)
            elif current:
                out.append("".join(current))
                current = []
        if current:
            out.append("".join(current))
        return out

    def component(self, token: str) -> int:
        return stable_token_hash(token) % self.dim

    def embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float32)
        for token in self.tokenize(text):
            vec[self.component(token)] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm

    def embed(self, texts: Sequence[str]) -> EmbedReply:
        vectors = np.stack([self.embed_one(t) for t in texts]) if texts else \
            np.zeros((0, self.dim), dtype=np.float32)
        usage = Usage(tokens_in=sum(_approx_tokens(t) for t in texts), seconds=0.0)
        return EmbedReply(vectors=vectors.astype(np.float32), usage=usage)


class ScriptedCaptioner:
    """Captioner replies keyed by clip start time; optional failure injection."""

    def __init__(self, replies_by_start: Dict[float, str],
                 fail_counts: Optional[Dict[float, int]] = None):
        self.replies = {round(k, 3): v for k, v in replies_by_start.items()}
        self._remaining_failures = {round(k, 3): n for k, n in (fail_counts or {}).items()}
        self.requests: List[Dict[str, Any]] = []  # captured for assertions
        self._lock = threading.Lock()

    def caption(self, video_ref: str, span, fps: float, max_edge: int) -> CaptionReply:
        key = round(span.start, 3)
        with self._lock:
            self.requests.append({"video_ref": video_ref, "t_start": span.start,
                                  "t_end": span.end, "fps": fps, "max_edge": max_edge})
            if self._remaining_failures.get(key, 0) > 0:
                self._remaining_failures[key] -= 1
                raise BackendError(f"scripted captioner failure at t={key}")
        raw = self.replies.get(key, "")
        return CaptionReply(raw=raw, usage=Usage(tokens_out=_approx_tokens(raw), seconds=0.0))


class FixtureStore:
    """JSONL annotation store keyed by round(frame_time, 3)."""

    def __init__(self, entries: Sequence[Dict[str, Any]]):
        self.by_time: Dict[float, List[Dict[str, Any]]] = {}
        for entry in entries:
            key = round(float(entry["frame_time"]), 3)
            self.by_time.setdefault(key, []).append(entry)

    @classmethod
    def from_jsonl(cls, path: str) -> "FixtureStore":
        entries = []
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        entries.append(json.loads(line))
        return cls(entries)

    def at(self, frame_times: Sequence[float]) -> List[Dict[str, Any]]:
        out: List[Dict[str, Any]] = []
        for t in round_times(frame_times):
            out.extend(self.by_time.get(t, []))
        return out


class FixtureDetector:
    def __init__(self, store: FixtureStore):
        self.store = store

    def detect(self, video_ref: str, frame_times: Sequence[float], query: str) -> DetectReply:
        dets = [Detection(box=[float(v) for v in e["box"]], label=str(e["label"]),
                          confidence=float(e["confidence"]), frame_time=float(e["frame_time"]))
                for e in self.store.at(frame_times)]
        return DetectReply(detections=dets, usage=Usage(seconds=0.0))


class FixtureOcr:
    def __init__(self, store: FixtureStore):
        self.store = store

    def ocr(self, video_ref: str, frame_times: Sequence[float]) -> OcrReply:
        items = [OcrItem(frame_time=float(e["frame_time"]), text=str(e["text"]))
                 for e in self.store.at(frame_times)]
        return OcrReply(items=items, usage=Usage(seconds=0.0))


class FixtureFrameSim:
    def __init__(self, store: FixtureStore):
        self.store = store

    def frame_sim(self, video_ref: str, frame_times: Sequence[float], query: str) -> FrameSimReply:
        scores = [FrameScore(frame_time=float(e["frame_time"]), score=float(e["score"]))
                  for e in self.store.at(frame_times)]
        return FrameSimReply(scores=scores, usage=Usage(seconds=0.0))


class ScriptedFrameVLM:
    """Frame-analysis replies popped in order; repeats the last by default."""

    def __init__(self, replies: Sequence[str], on_exhausted: str = "repeat_last"):
        self.replies = list(replies)
        self.on_exhausted = on_exhausted
        self._cursor = 0
        self._lock = threading.Lock()

    def analyze(self, video_ref: str, frame_times: Sequence[float], query: str) -> AnalyzeReply:
        with self._lock:
            index = self._cursor
            self._cursor += 1
        if index >= len(self.replies):
            if self.on_exhausted == "repeat_last" and self.replies:
                index = len(self.replies) - 1
            else:
                raise BackendError("frame analysis script exhausted")
        text = self.replies[index]
        return AnalyzeReply(text=text, usage=Usage(tokens_out=_approx_tokens(text), seconds=0.0))


# ---------------------------------------------------------------------------
# Fixture-directory wiring
# ---------------------------------------------------------------------------


def load_fixture_meta(fixture_dir: str) -> Dict[str, Any]:
    with open(os.path.join(fixture_dir, "meta.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


def build_mock_suite(fixture_dir: str, clip_len: float, dim: int = DEFAULT_MOCK_DIM,
                     chat_script: Optional[MockScript] = None,
                     episode_key: Optional[str] = None) -> BackendSuite:
    """Assemble a BackendSuite from a fixture directory.

    Layout: meta.json, captions.json (raw captioner replies in clip order),
    chat_ingest.json, detections.jsonl, ocr.jsonl, framesim.jsonl,
    analysis.json, episodes/<key>.json.
    """
    meta = load_fixture_meta(fixture_dir)
    duration = float(meta["duration"])

    captions_path = os.path.join(fixture_dir, "captions.json")
    replies_by_start: Dict[float, str] = {}
    if os.path.exists(captions_path):
        with open(captions_path, "r", encoding="utf-8") as fh:
            captions = json.load(fh)
        start = 0.0
        for raw in captions:
            if start >= duration:
                break
            replies_by_start[round(start, 3)] = raw
            start += clip_len

    analysis_replies: Optional[List[str]] = None
    if chat_script is None:
        if episode_key is not None:
            script_path = os.path.join(fixture_dir, "episodes", f"{episode_key}.json")
        else:
            script_path = os.path.join(fixture_dir, "chat_ingest.json")
        if os.path.exists(script_path):
            with open(script_path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            if isinstance(data, list):
                chat_script = MockScript(replies=data)
            else:
                chat_script = MockScript(replies=data["replies"],
                                         on_exhausted=data.get("on_exhausted", "fail"))
                # episode files may carry their own frame-analysis replies
                analysis_replies = data.get("analysis")
        else:
            chat_script = MockScript(replies=[], on_exhausted="fail")

    if analysis_replies is None:
        analysis_path = os.path.join(fixture_dir, "analysis.json")
        if os.path.exists(analysis_path):
            with open(analysis_path, "r", encoding="utf-8") as fh:
                analysis_replies = json.load(fh)
        else:
            analysis_replies = ["no analysis available"]

    return BackendSuite(
        chat=ScriptedChat(chat_script),
        captioner=ScriptedCaptioner(replies_by_start),
        embedder=HashEmbedder(dim=dim),
        detector=FixtureDetector(FixtureStore.from_jsonl(os.path.join(fixture_dir, "detections.jsonl"))),
        ocr=FixtureOcr(FixtureStore.from_jsonl(os.path.join(fixture_dir, "ocr.jsonl"))),
        frame_sim=FixtureFrameSim(FixtureStore.from_jsonl(os.path.join(fixture_dir, "framesim.jsonl"))),
        frame_vlm=ScriptedFrameVLM(analysis_replies),
    )
