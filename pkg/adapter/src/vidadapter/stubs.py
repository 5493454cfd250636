"""Echo stubs: fixture-backed role implementations.

These serve the same annotation files the engine's in-process mocks read
(detections.jsonl, ocr.jsonl, framesim.jsonl keyed by frame_time rounded to
3 decimals, captions.json keyed by clip start, analysis.json in call order),
so the golden wire-contract suite is satisfiable with no model loaded.

The stub embedder reproduces the deterministic bag-of-tokens embedding
bit for bit: lowercase, split on non-alphanumerics, each token increments
component blake2b(token) mod d, L2-normalized, empty text -> e1.
"""

import hashlib
import json
import os
import threading
from typing import Any, Dict, List, Optional

import numpy as np

STUB_EMBED_DIM = 256


class UnknownVideoError(Exception):
    pass


def _load_jsonl(path: str) -> List[Dict[str, Any]]:
    rows = []
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(json.loads(line))
    return rows


class FixtureBundle:
    """All annotation stores of one fixture directory."""

    def __init__(self, fixture_dir: str):
        with open(os.path.join(fixture_dir, "meta.json"), "r", encoding="utf-8") as fh:
            self.meta = json.load(fh)
        self.video_ref = self.meta.get("video_ref", "")
        self.duration = float(self.meta.get("duration", 0.0))
        self.clip_len = float(self.meta.get("clip_len", 5.0))

        self.captions_by_start: Dict[float, str] = {}
        captions_path = os.path.join(fixture_dir, "captions.json")
        if os.path.exists(captions_path):
            with open(captions_path, "r", encoding="utf-8") as fh:
                captions = json.load(fh)
            start = 0.0
            for raw in captions:
                if start >= self.duration:
                    break
                self.captions_by_start[round(start, 3)] = raw
                start += self.clip_len

        def by_time(rows):
            out: Dict[float, List[Dict[str, Any]]] = {}
            for row in rows:
                out.setdefault(round(float(row["frame_time"]), 3), []).append(row)
            return out

        self.detections = by_time(_load_jsonl(os.path.join(fixture_dir, "detections.jsonl")))
        self.ocr = by_time(_load_jsonl(os.path.join(fixture_dir, "ocr.jsonl")))
        self.framesim = by_time(_load_jsonl(os.path.join(fixture_dir, "framesim.jsonl")))

        analysis_path = os.path.join(fixture_dir, "analysis.json")
        if os.path.exists(analysis_path):
            with open(analysis_path, "r", encoding="utf-8") as fh:
                self.analysis_replies = json.load(fh)
        else:
            self.analysis_replies = ["(no analysis scripted)"]

    def check_video(self, video_ref: str) -> None:
        if video_ref != self.video_ref:
            raise UnknownVideoError(video_ref)


def _round_times(frame_times: List[float]) -> List[float]:
    return [round(float(t), 3) for t in frame_times]


class StubCaptioner:
    def __init__(self, bundle: FixtureBundle):
        self.bundle = bundle

    def caption(self, video_ref: str, t_start: float, t_end: float,
                fps: float, max_edge: int) -> str:
        self.bundle.check_video(video_ref)
        return self.bundle.captions_by_start.get(round(t_start, 3), "")


class StubEmbedder:
    def __init__(self, dim: int = STUB_EMBED_DIM):
        self.dim = dim

    def _embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float32)
        token: List[str] = []
        for ch in text.lower() + "\0":  # sentinel flushes the last token
            if ch.isalnum():
                token.append(ch)
            elif token:
                word = "".join(token)
                token = []
                digest = hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest()
                vec[int.from_bytes(digest, "little") % self.dim] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm

    def embed(self, texts: List[str]) -> List[List[float]]:
        return [self._embed_one(t).tolist() for t in texts]


class StubDetector:
    def __init__(self, bundle: FixtureBundle):
        self.bundle = bundle

    def detect(self, video_ref: str, frame_times: List[float], query: str
               ) -> List[Dict[str, Any]]:
        self.bundle.check_video(video_ref)
        out = []
        for t in _round_times(frame_times):
            for row in self.bundle.detections.get(t, []):
                out.append({"frame_time": row["frame_time"], "box": row["box"],
                            "label": row["label"], "confidence": row["confidence"]})
        return out


class StubOcr:
    def __init__(self, bundle: FixtureBundle):
        self.bundle = bundle

    def ocr(self, video_ref: str, frame_times: List[float]) -> List[Dict[str, Any]]:
        self.bundle.check_video(video_ref)
        out = []
        for t in _round_times(frame_times):
            for row in self.bundle.ocr.get(t, []):
                out.append({"frame_time": row["frame_time"], "text": row["text"]})
        return out


class StubFrameSim:
    """One score per requested frame_time; unkeyed times score 0.0."""

    def __init__(self, bundle: FixtureBundle):
        self.bundle = bundle

    def frame_sim(self, video_ref: str, frame_times: List[float], query: str
                  ) -> List[Dict[str, Any]]:
        self.bundle.check_video(video_ref)
        out = []
        for t in _round_times(frame_times):
            rows = self.bundle.framesim.get(t)
            if rows:
                out.append({"frame_time": rows[0]["frame_time"],
                            "score": rows[0]["score"]})
            else:
                out.append({"frame_time": t, "score": 0.0})
        return out


class StubAnalyzer:
    def __init__(self, bundle: FixtureBundle):
        self.bundle = bundle
        self._cursor = 0
        self._lock = threading.Lock()

    def analyze(self, video_ref: str, frame_times: List[float], query: str) -> str:
        self.bundle.check_video(video_ref)
        with self._lock:
            index = min(self._cursor, len(self.bundle.analysis_replies) - 1)
            self._cursor += 1
        return self.bundle.analysis_replies[index]


def build_stubs(fixture_dir: str) -> Dict[str, Any]:
    bundle = FixtureBundle(fixture_dir)
    return {
        "caption": StubCaptioner(bundle),
        "embed": StubEmbedder(),
        "detect": StubDetector(bundle),
        "ocr": StubOcr(bundle),
        "frame_sim": StubFrameSim(bundle),
        "analyze": StubAnalyzer(bundle),
    }
