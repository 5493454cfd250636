import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # make oracles importable

from vidagent.backends import BackendSuite
from vidagent.config import EngineConfig
from vidagent.graph import (
    EntityAction,
    EntityNode,
    RelationEdge,
    TemporalKnowledgeGraph,
)
from vidagent.intervals import TimeRange
from vidagent.kb import (
    BuildCost,
    ClipRecord,
    KnowledgeBase,
    Manifest,
    SCHEMA_VERSION,
    normalize_rows,
)
from vidagent.mocks import (
    FixtureDetector,
    FixtureFrameSim,
    FixtureOcr,
    FixtureStore,
    HashEmbedder,
    MockScript,
    ScriptedCaptioner,
    ScriptedChat,
    ScriptedFrameVLM,
)

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURE_DIR = os.path.join(REPO_ROOT, "fixtures", "video")
GOLDEN_KB_DIR = os.path.join(REPO_ROOT, "fixtures", "golden_kb")
ITEMS_FILE = os.path.join(REPO_ROOT, "fixtures", "qa_items.jsonl")
WIRE_GOLDEN = os.path.join(REPO_ROOT, "fixtures", "wire", "cases.json")


@pytest.fixture
def config():
    return EngineConfig()


def make_graph(node_specs, edge_specs):
    """node_specs: {id: (name, attrs, timeline pairs)}; edge_specs: (src, dst, desc, (a, b))."""
    graph = TemporalKnowledgeGraph()
    for node_id, (name, attrs, timeline) in node_specs.items():
        graph.nodes[node_id] = EntityNode(
            node_id=node_id, name=name, attributes=list(attrs),
            timeline=[TimeRange(a, b) for a, b in timeline])
    for src, dst, desc, (a, b) in edge_specs:
        graph.edges.append(RelationEdge(src=src, dst=dst, description=desc,
                                        span=TimeRange(a, b)))
    graph.validate()
    return graph


def make_kb(captions, clip_len=5.0, graph=None, embedder=None, video_id="test_video",
            fps=2.0, duration=None, build_cost=None):
    """Assemble a small in-memory KB from caption texts."""
    embedder = embedder or HashEmbedder()
    duration = duration if duration is not None else clip_len * len(captions)
    clips = []
    start = 0.0
    for i, caption in enumerate(captions):
        end = min(start + clip_len, duration)
        clips.append(ClipRecord(clip_id=i, span=TimeRange(start, end), caption=caption))
        start = end
    if captions:
        vectors, _ = normalize_rows(embedder.embed(captions).vectors)
    else:
        vectors = np.zeros((0, embedder.dim), dtype=np.float32)
    graph = graph or TemporalKnowledgeGraph()
    manifest = Manifest(
        schema_version=SCHEMA_VERSION, video_id=video_id, duration=duration,
        clip_len=clip_len, fps=fps, embed_dim=embedder.dim, clip_count=len(clips),
        node_count=len(graph.nodes), video_ref=f"fixture://{video_id}",
        build_cost=build_cost or BuildCost())
    return KnowledgeBase(manifest=manifest, clips=clips, embeddings=vectors,
                         graph=graph, video_ref=manifest.video_ref)


def make_suite(chat_replies=None, detections=(), ocr_items=(), sim_scores=(),
               analysis=("analysis text",), captions_by_start=None,
               on_exhausted="fail", dim=256):
    """BackendSuite wired from inline fixture data."""
    script = MockScript(replies=list(chat_replies or []), on_exhausted=on_exhausted)
    return BackendSuite(
        chat=ScriptedChat(script),
        captioner=ScriptedCaptioner(captions_by_start or {}),
        embedder=HashEmbedder(dim=dim),
        detector=FixtureDetector(FixtureStore(list(detections))),
        ocr=FixtureOcr(FixtureStore(list(ocr_items))),
        frame_sim=FixtureFrameSim(FixtureStore(list(sim_scores))),
        frame_vlm=ScriptedFrameVLM(list(analysis)),
    )


def tool_reply(name, **arguments):
    return {"text": "", "tool_calls": [{"name": name, "arguments": arguments}]}


def text_reply(text):
    return {"text": text}


@pytest.fixture
def simple_kb():
    return make_kb([
        "a man in a red shirt enters the room",
        "the man gives a book to a woman in a blue dress",
        "three people stand near a sale sign and a man jumps",
    ])
