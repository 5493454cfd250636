"""The perception wire contract as a FastAPI service.

Exactly six POST endpoints plus GET /healthz. Handlers are synchronous and
execution is serialized per role (model runtimes are not assumed
thread-safe); the service keeps no request state beyond the frame cache.

Error shape: unknown video_ref -> 404 {"error", "video_ref"}; role/model
failure -> 500 {"error", "role"}.
"""

import logging
import threading
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import stubs as stubs_mod
from .config import ROLE_NAMES, STUB, AdapterConfig, AdapterConfigError
from .frames import FrameDecoder, UnknownVideoError as FrameUnknownVideo
from .stubs import UnknownVideoError as StubUnknownVideo, build_stubs

logger = logging.getLogger(__name__)


class CaptionRequest(BaseModel):
    video_ref: str
    t_start: float
    t_end: float
    fps: float = 2.0
    max_edge: int = 720


class EmbedRequest(BaseModel):
    texts: List[str]


class FramesQueryRequest(BaseModel):
    video_ref: str
    frame_times: List[float]
    query: str


class FramesRequest(BaseModel):
    video_ref: str
    frame_times: List[float]


def _build_roles(config: AdapterConfig) -> Dict[str, Any]:
    """Resolve every role at startup: stub or a loaded runtime."""
    roles: Dict[str, Any] = {}
    stub_impls = build_stubs(config.stub_fixtures) if config.stub_fixtures else {}
    decoder: Optional[FrameDecoder] = None
    if config.video_root:
        decoder = FrameDecoder(config.video_root, max_edge=config.max_edge,
                               cache_size=config.frame_cache_size)

    from . import real

    builders = {
        "caption": lambda m: real.RealCaptioner(m, config.device, decoder),
        "embed": lambda m: real.RealEmbedder(m, config.device, config.max_batch),
        "detect": lambda m: real.RealDetector(m, config.device, decoder),
        "ocr": lambda m: real.RealOcr(m, config.device, decoder),
        "frame_sim": lambda m: real.RealFrameSim(m, config.device, decoder,
                                                 config.max_batch),
        "analyze": lambda m: real.RealAnalyzer(m, config.device, decoder),
    }
    for role in ROLE_NAMES:
        spec = config.roles[role]
        if spec == STUB:
            roles[role] = stub_impls[role]
        else:
            try:
                roles[role] = builders[role](spec)
            except AdapterConfigError:
                raise
            except Exception as exc:
                raise AdapterConfigError(f"role {role} ({spec}) failed to load: {exc}")
    return roles


def create_app(config: AdapterConfig) -> FastAPI:
    roles = _build_roles(config)
    stubbed = {role: ("stubbed" if config.roles[role] == STUB else "loaded")
               for role in ROLE_NAMES}
    locks = {role: threading.Lock() for role in ROLE_NAMES}
    app = FastAPI(title="perception adapter")

    def call(role: str, fn, *args):
        with locks[role]:  # per-model serialized execution
            return fn(*args)

    def unknown_video(video_ref: str) -> JSONResponse:
        return JSONResponse(status_code=404,
                            content={"error": "unknown video_ref",
                                     "video_ref": video_ref})

    def role_failure(role: str, exc: Exception) -> JSONResponse:
        logger.exception("role %s failed", role)
        return JSONResponse(status_code=500,
                            content={"error": str(exc), "role": role})

    @app.get("/healthz")
    def healthz():
        return {"roles": stubbed}

    @app.post("/caption")
    def caption(req: CaptionRequest):
        try:
            raw = call("caption", roles["caption"].caption, req.video_ref,
                       req.t_start, req.t_end, req.fps, req.max_edge)
        except (StubUnknownVideo, FrameUnknownVideo):
            return unknown_video(req.video_ref)
        except Exception as exc:
            return role_failure("caption", exc)
        return {"raw": raw}

    @app.post("/embed")
    def embed(req: EmbedRequest):
        try:
            vectors = call("embed", roles["embed"].embed, req.texts)
        except Exception as exc:
            return role_failure("embed", exc)
        return {"vectors": vectors}

    @app.post("/detect")
    def detect(req: FramesQueryRequest):
        try:
            detections = call("detect", roles["detect"].detect, req.video_ref,
                              req.frame_times, req.query)
        except (StubUnknownVideo, FrameUnknownVideo):
            return unknown_video(req.video_ref)
        except Exception as exc:
            return role_failure("detect", exc)
        return {"detections": detections}

    @app.post("/ocr")
    def ocr(req: FramesRequest):
        try:
            items = call("ocr", roles["ocr"].ocr, req.video_ref, req.frame_times)
        except (StubUnknownVideo, FrameUnknownVideo):
            return unknown_video(req.video_ref)
        except Exception as exc:
            return role_failure("ocr", exc)
        return {"items": items}

    @app.post("/frame_sim")
    def frame_sim(req: FramesQueryRequest):
        try:
            scores = call("frame_sim", roles["frame_sim"].frame_sim, req.video_ref,
                          req.frame_times, req.query)
        except (StubUnknownVideo, FrameUnknownVideo):
            return unknown_video(req.video_ref)
        except Exception as exc:
            return role_failure("frame_sim", exc)
        return {"scores": scores}

    @app.post("/analyze")
    def analyze(req: FramesQueryRequest):
        try:
            text = call("analyze", roles["analyze"].analyze, req.video_ref,
                        req.frame_times, req.query)
        except (StubUnknownVideo, FrameUnknownVideo):
            return unknown_video(req.video_ref)
        except Exception as exc:
            return role_failure("analyze", exc)
        return {"text": text}

    return app
