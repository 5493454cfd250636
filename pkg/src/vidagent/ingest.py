"""One-time video compilation: caption, embed, graph, persist.

Construction cost is recorded in the manifest so episode ledgers can carry
it as the amortized one-time component.
"""

import logging
from typing import List, Optional

import numpy as np

from .backends import BackendConfigError, BackendError, BackendSuite
from .config import EngineConfig
from .graph import assemble_graph, compute_base_weights, extract_entities
from .intervals import TimeRange
from .kb import (
    BuildCost,
    ClipRecord,
    KnowledgeBase,
    Manifest,
    SCHEMA_VERSION,
    normalize_rows,
    parse_caption_document,
    plan_segments,
    save_kb,
)
from .spectral import cluster_supernodes, similarity_matrix
from .util import fmt_seconds

logger = logging.getLogger(__name__)


class IngestError(Exception):
    """Fatal database construction failure."""


def _caption_clip(suite: BackendSuite, video_ref: str, span: TimeRange,
                  config: EngineConfig, cost: BuildCost, diagnostics: List[str]) -> str:
    """Caption one clip with retries; persistent failure yields an empty caption."""
    last_error: Optional[Exception] = None
    for attempt in range(1 + config.caption_retries):
        try:
            reply = suite.captioner.caption(video_ref, span, fps=config.fps,
                                            max_edge=config.max_edge)
        except BackendError as exc:
            last_error = exc
            cost.calls += 1
            continue
        cost.add_usage(reply.usage)
        return reply.raw
    diagnostics.append(
        f"captioner failed for clip [{fmt_seconds(span.start)},{fmt_seconds(span.end)}]"
        f" after {1 + config.caption_retries} attempts: {last_error}")
    return ""


def ingest_video(video_ref: str, duration: float, backends: BackendSuite,
                 config: EngineConfig, video_id: Optional[str] = None,
                 out_dir: Optional[str] = None) -> KnowledgeBase:
    """Compile a video into a KnowledgeBase; optionally persist to out_dir.

    The wire contract has no metadata endpoint, so the caller supplies the
    duration. Every backend call made here lands in the manifest build cost.
    """
    segments = plan_segments(duration, config.clip_len)
    cost = BuildCost()
    diagnostics: List[str] = []

    clips: List[ClipRecord] = []
    for clip_id, span in enumerate(segments):
        raw = _caption_clip(backends, video_ref, span, config, cost, diagnostics)
        parsed = parse_caption_document(raw, clip_span=span)
        diagnostics.extend(f"clip {clip_id}: {d}" for d in parsed.diagnostics)
        clips.append(ClipRecord(clip_id=clip_id, span=span, caption=parsed.caption,
                                subject_registry=parsed.registry))

    # one embedding row per clip, empty captions included
    texts = [c.caption for c in clips]
    reply = backends.embedder.embed(texts)
    cost.add_usage(reply.usage)
    vectors = reply.vectors
    if vectors.shape[0] != len(clips):
        raise IngestError(f"embedder returned {vectors.shape[0]} rows for {len(clips)} clips")
    embed_dim = int(vectors.shape[1])
    if config.embed_dim is not None and embed_dim != config.embed_dim:
        raise IngestError(
            f"embedder dimension {embed_dim} does not match configured {config.embed_dim}")
    embeddings, zero_rows = normalize_rows(vectors)
    diagnostics.extend(f"clip {i}: zero embedding replaced by unit basis vector"
                       for i in zero_rows)

    timeline_captions = [
        f"[{fmt_seconds(c.span.start)}s-{fmt_seconds(c.span.end)}s] {c.caption}"
        for c in clips
    ]
    extraction, usages = extract_entities(timeline_captions, backends.chat,
                                          window_size=config.window_size,
                                          window_overlap=config.window_overlap)
    for u in usages:
        cost.add_usage(u)
    diagnostics.extend(extraction.diagnostics)

    try:
        graph, graph_diags, usages = assemble_graph(
            extraction, backends.embedder,
            identity_threshold=config.identity_threshold, duration=duration)
    except BackendConfigError as exc:
        raise IngestError(f"graph assembly failed: {exc}") from exc
    for u in usages:
        cost.add_usage(u)
    diagnostics.extend(graph_diags)

    if len(graph.nodes) >= 2:
        S, usages = similarity_matrix(graph, backends.embedder)
        for u in usages:
            cost.add_usage(u)
        supernodes, cluster_diags = cluster_supernodes(
            graph, S, k_range=config.cluster_k_range, seed=config.cluster_seed)
        graph.supernodes = supernodes
        diagnostics.extend(cluster_diags)

    compute_base_weights(graph, clip_count=len(clips),
                         clip_ranges=[c.span for c in clips], lambdas=config.lambdas)

    manifest = Manifest(
        schema_version=SCHEMA_VERSION,
        video_id=video_id or video_ref,
        duration=duration,
        clip_len=config.clip_len,
        fps=config.fps,
        embed_dim=embed_dim,
        clip_count=len(clips),
        node_count=len(graph.nodes),
        video_ref=video_ref,
        diagnostics=diagnostics,
        build_cost=cost,
    )
    kb = KnowledgeBase(manifest=manifest, clips=clips,
                       embeddings=embeddings.astype(np.float32),
                       graph=graph, video_ref=video_ref)
    if out_dir is not None:
        save_kb(kb, out_dir)
    return kb
