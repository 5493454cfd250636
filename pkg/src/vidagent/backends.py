"""Model-backend contracts and the network clients that speak them.

Two wire shapes exist:

* chat: the de-facto chat-completions JSON (messages / tools / tool_calls),
  so any compatible server works unchanged;
* perception: a small bespoke JSON contract (POST /caption, /embed, /detect,
  /ocr, /frame_sim, /analyze) served by the adapter package or by fixtures.

Every backend call returns a reply object carrying a Usage record; callers
append exactly one ledger entry per call.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import httpx
import numpy as np

from .intervals import TimeRange

logger = logging.getLogger(__name__)

RETRY_BACKOFF = (0.5, 1.0)  # seconds before 1st and 2nd retry


class BackendError(Exception):
    """Transport failure or server error after retries were exhausted."""


class ProtocolError(BackendError):
    """Endpoint answered but the body does not match the wire contract."""

    def __init__(self, message: str, raw_body: str = ""):
        super().__init__(message)
        self.raw_body = raw_body


class BackendConfigError(Exception):
    """Suite-level misconfiguration (e.g. embedder dimension disagreement)."""


@dataclass
class Usage:
    tokens_in: int = 0
    tokens_out: int = 0
    seconds: float = 0.0
    attempts: int = 1

    def __post_init__(self):
        if self.tokens_in < 0 or self.tokens_out < 0:
            raise ValueError("usage counts must be non-negative")


@dataclass
class ToolCall:
    name: str
    arguments: Dict[str, Any]
    call_id: str = ""


@dataclass
class ChatRequest:
    messages: List[Dict[str, Any]]
    tools: List[Dict[str, Any]] = field(default_factory=list)
    temperature: float = 0.0
    max_tokens: Optional[int] = None


@dataclass
class ChatReply:
    text: str
    tool_calls: List[ToolCall] = field(default_factory=list)
    usage: Usage = field(default_factory=Usage)


@dataclass
class CaptionReply:
    raw: str
    usage: Usage = field(default_factory=Usage)


@dataclass
class EmbedReply:
    vectors: np.ndarray  # (n, d) float32
    usage: Usage = field(default_factory=Usage)


@dataclass
class Detection:
    box: List[float]  # x1, y1, x2, y2 in pixels of the 720p frame
    label: str
    confidence: float
    frame_time: float

    def __post_init__(self):
        x1, y1, x2, y2 = self.box
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"degenerate box {self.box}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass
class OcrItem:
    frame_time: float
    text: str


@dataclass
class FrameScore:
    frame_time: float
    score: float


@dataclass
class DetectReply:
    detections: List[Detection]
    usage: Usage = field(default_factory=Usage)


@dataclass
class OcrReply:
    items: List[OcrItem]
    usage: Usage = field(default_factory=Usage)


@dataclass
class FrameSimReply:
    scores: List[FrameScore]
    usage: Usage = field(default_factory=Usage)


@dataclass
class AnalyzeReply:
    text: str
    usage: Usage = field(default_factory=Usage)


@dataclass
class BackendSuite:
    """The seven model roles the engine talks to, real or mock."""

    chat: Any
    captioner: Any
    embedder: Any
    detector: Any
    ocr: Any
    frame_sim: Any
    frame_vlm: Any

    def __post_init__(self):
        dim = getattr(self.embedder, "dim", None)
        if dim is not None and dim <= 0:
            raise BackendConfigError(f"embedder dimension {dim} must be positive")


def round_times(frame_times: Sequence[float]) -> List[float]:
    """Wire-contract addressing granularity: 3 decimals."""
    return [round(float(t), 3) for t in frame_times]


# ---------------------------------------------------------------------------
# HTTP plumbing
# ---------------------------------------------------------------------------


def _post_with_retry(client: httpx.Client, url: str, payload: Dict[str, Any],
                     backoff: Sequence[float] = RETRY_BACKOFF) -> "tuple[httpx.Response, int, float]":
    """POST with retries on transport errors and 5xx; returns (resp, attempts, secs)."""
    attempts = 0
    started = time.monotonic()
    last_error: Optional[Exception] = None
    for wait in (None,) + tuple(backoff):
        if wait is not None:
            time.sleep(wait)
        attempts += 1
        try:
            resp = client.post(url, json=payload)
        except httpx.TransportError as exc:
            last_error = exc
            logger.warning("transport error on %s (attempt %d): %s", url, attempts, exc)
            continue
        if resp.status_code >= 500:
            last_error = BackendError(f"server error {resp.status_code} from {url}")
            logger.warning("5xx from %s (attempt %d)", url, attempts)
            continue
        if resp.status_code >= 400:
            raise BackendError(f"request rejected ({resp.status_code}) by {url}: {resp.text[:500]}")
        return resp, attempts, time.monotonic() - started
    raise BackendError(f"backend unreachable after {attempts} attempts: {last_error}")


def _parse_json_body(resp: httpx.Response) -> Dict[str, Any]:
    try:
        body = resp.json()
    except (json.JSONDecodeError, ValueError) as exc:
        raise ProtocolError(f"non-JSON reply: {exc}", raw_body=resp.text) from exc
    if not isinstance(body, dict):
        raise ProtocolError("reply is not a JSON object", raw_body=resp.text)
    return body


class HttpChatBackend:
    """Client for a chat-completions-compatible endpoint."""

    def __init__(self, url: str, model: str = "", timeout: float = 120.0,
                 token: Optional[str] = None, backoff: Sequence[float] = RETRY_BACKOFF,
                 transport: Optional[httpx.BaseTransport] = None):
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self.url = url
        self.model = model
        self.backoff = tuple(backoff)
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def chat(self, request: ChatRequest) -> ChatReply:
        payload: Dict[str, Any] = {
            "model": self.model,
            "messages": request.messages,
            "temperature": request.temperature,
        }
        if request.tools:
            payload["tools"] = request.tools
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        resp, attempts, seconds = _post_with_retry(self._client, self.url, payload, self.backoff)
        body = _parse_json_body(resp)
        try:
            message = body["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"missing choices[0].message: {exc}", raw_body=resp.text) from exc
        calls: List[ToolCall] = []
        for i, tc in enumerate(message.get("tool_calls") or []):
            fn = tc.get("function")
            if not isinstance(fn, dict) or "name" not in fn:
                raise ProtocolError("tool call without function.name", raw_body=resp.text)
            raw_args = fn.get("arguments", "{}")
            if isinstance(raw_args, dict):
                args = raw_args
            else:
                try:
                    args = json.loads(raw_args)
                    if not isinstance(args, dict):
                        args = {"_raw_arguments": raw_args}
                except (json.JSONDecodeError, ValueError):
                    # model emitted broken JSON; surface it to the runtime,
                    # which treats unexpected parameters as a violation
                    args = {"_raw_arguments": raw_args}
            calls.append(ToolCall(name=fn["name"], arguments=args,
                                  call_id=tc.get("id", f"call_{i}")))
        usage_raw = body.get("usage") or {}
        usage = Usage(
            tokens_in=int(usage_raw.get("prompt_tokens", 0)),
            tokens_out=int(usage_raw.get("completion_tokens", 0)),
            seconds=seconds,
            attempts=attempts,
        )
        return ChatReply(text=message.get("content") or "", tool_calls=calls, usage=usage)


class HttpPerceptionBackend:
    """Client for the perception adapter; one instance serves all six roles."""

    def __init__(self, base_url: str, timeout: float = 60.0, token: Optional[str] = None,
                 backoff: Sequence[float] = RETRY_BACKOFF, embed_dim: Optional[int] = None,
                 transport: Optional[httpx.BaseTransport] = None):
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self.base_url = base_url.rstrip("/")
        self.backoff = tuple(backoff)
        self._dim = embed_dim
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    def _call(self, path: str, payload: Dict[str, Any]) -> "tuple[Dict[str, Any], Usage]":
        resp, attempts, seconds = _post_with_retry(
            self._client, f"{self.base_url}{path}", payload, self.backoff)
        return _parse_json_body(resp), Usage(seconds=seconds, attempts=attempts)

    def caption(self, video_ref: str, span: TimeRange, fps: float, max_edge: int) -> CaptionReply:
        body, usage = self._call("/caption", {
            "video_ref": video_ref, "t_start": span.start, "t_end": span.end,
            "fps": fps, "max_edge": max_edge,
        })
        if "raw" not in body:
            raise ProtocolError("caption reply missing 'raw'", raw_body=json.dumps(body))
        return CaptionReply(raw=str(body["raw"]), usage=usage)

    def embed(self, texts: Sequence[str]) -> EmbedReply:
        body, usage = self._call("/embed", {"texts": list(texts)})
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProtocolError("embed reply cardinality mismatch", raw_body=json.dumps(body))
        arr = np.asarray(vectors, dtype=np.float32)
        if arr.ndim != 2:
            raise ProtocolError("embed vectors are not a matrix", raw_body=json.dumps(body))
        if self._dim is None:
            self._dim = int(arr.shape[1])
        elif arr.shape[1] != self._dim:
            raise BackendConfigError(
                f"embedder returned dimension {arr.shape[1]}, suite expects {self._dim}")
        return EmbedReply(vectors=arr, usage=usage)

    def detect(self, video_ref: str, frame_times: Sequence[float], query: str) -> DetectReply:
        body, usage = self._call("/detect", {
            "video_ref": video_ref, "frame_times": round_times(frame_times), "query": query,
        })
        try:
            dets = [Detection(box=[float(v) for v in d["box"]], label=str(d["label"]),
                              confidence=float(d["confidence"]),
                              frame_time=float(d["frame_time"]))
                    for d in body.get("detections", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad detection entry: {exc}", raw_body=json.dumps(body)) from exc
        return DetectReply(detections=dets, usage=usage)

    def ocr(self, video_ref: str, frame_times: Sequence[float]) -> OcrReply:
        body, usage = self._call("/ocr", {
            "video_ref": video_ref, "frame_times": round_times(frame_times),
        })
        try:
            items = [OcrItem(frame_time=float(i["frame_time"]), text=str(i["text"]))
                     for i in body.get("items", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad ocr entry: {exc}", raw_body=json.dumps(body)) from exc
        return OcrReply(items=items, usage=usage)

    def frame_sim(self, video_ref: str, frame_times: Sequence[float], query: str) -> FrameSimReply:
        body, usage = self._call("/frame_sim", {
            "video_ref": video_ref, "frame_times": round_times(frame_times), "query": query,
        })
        try:
            scores = [FrameScore(frame_time=float(s["frame_time"]), score=float(s["score"]))
                      for s in body.get("scores", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad frame_sim entry: {exc}", raw_body=json.dumps(body)) from exc
        return FrameSimReply(scores=scores, usage=usage)

    def analyze(self, video_ref: str, frame_times: Sequence[float], query: str) -> AnalyzeReply:
        body, usage = self._call("/analyze", {
            "video_ref": video_ref, "frame_times": round_times(frame_times), "query": query,
        })
        if "text" not in body:
            raise ProtocolError("analyze reply missing 'text'", raw_body=json.dumps(body))
        return AnalyzeReply(text=str(body["text"]), usage=usage)


def build_http_suite(config) -> BackendSuite:
    """Wire a BackendSuite from configured endpoints."""
    if not config.chat_endpoint or not config.perception_endpoint:
        raise BackendConfigError("chat_endpoint and perception_endpoint must be configured")
    chat = HttpChatBackend(config.chat_endpoint, model=config.chat_model,
                           timeout=config.chat_timeout, token=config.api_token)
    perception = HttpPerceptionBackend(config.perception_endpoint,
                                       timeout=config.perception_timeout,
                                       token=config.api_token, embed_dim=config.embed_dim)
    return BackendSuite(chat=chat, captioner=perception, embedder=perception,
                        detector=perception, ocr=perception, frame_sim=perception,
                        frame_vlm=perception)
