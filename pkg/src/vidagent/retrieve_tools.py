"""Retrieve-phase tools: global textual exploration over the knowledge base."""

import logging
import re
from typing import List, Optional

import numpy as np

from .backends import BackendError, ChatRequest
from .graph import query_graph
from .intervals import TimeRange, merge_ranges
from .kb import top_k_search
from .prompts import EXPLORE_REDUCE_PROMPT, EXPLORE_WINDOW_PROMPT
from .tools import ToolContext, ToolCost, ToolResult
from .util import fmt_seconds, truncate_payload

logger = logging.getLogger(__name__)

_RANGE_LINE = re.compile(r"RANGE:\s*([0-9]+(?:\.[0-9]+)?)\s+([0-9]+(?:\.[0-9]+)?)")


def _error_result(tool: str, message: str, cost: ToolCost) -> ToolResult:
    return ToolResult(tool=tool, payload=f"tool error: {message}",
                      structured={"error": message}, cost=cost, error=True)


def clip_retrieve(ctx: ToolContext, q_text: str, k: Optional[int] = None) -> ToolResult:
    """Semantic similarity search over clip captions; temporal anchors for
    later fine-grained analysis."""
    cost = ToolCost()
    if not q_text.strip():
        return _error_result("clip_retrieve_tool", "q_text must be non-empty", cost)
    k = ctx.config.top_k if k is None else max(1, k)
    try:
        reply = ctx.suite.embedder.embed([q_text])
    except BackendError as exc:
        return _error_result("clip_retrieve_tool", f"embedder failure: {exc}", cost)
    cost.add_usage(reply.usage)
    hits = top_k_search(ctx.kb, reply.vectors[0], k)
    if not hits:
        return ToolResult(tool="clip_retrieve_tool", payload="no results (empty database)",
                          structured=[], cost=cost)
    lines = []
    structured = []
    for clip_id, score in hits:
        clip = ctx.kb.clips[clip_id]
        lines.append(f"[{fmt_seconds(clip.span.start)}s-{fmt_seconds(clip.span.end)}s] "
                     f"{clip.caption} (score={score:.4f})")
        structured.append({"clip_id": clip_id, "t_start": clip.span.start,
                           "t_end": clip.span.end, "score": score,
                           "caption": clip.caption})
    payload = truncate_payload("\n".join(lines), ctx.config.payload_budget)
    return ToolResult(tool="clip_retrieve_tool", payload=payload,
                      structured=structured, cost=cost)


def merge_clip_groups(ctx: ToolContext, clip_ids: List[int]) -> List[List[int]]:
    """Group sorted clips: consecutive clips join when the gap is within the
    configured tolerance AND their caption embeddings are coherent."""
    ordered = sorted(set(clip_ids))
    gap_max = ctx.config.effective_merge_gap
    theta = ctx.config.coherence_threshold
    emb = ctx.kb.embeddings.astype(np.float64)
    groups: List[List[int]] = [[ordered[0]]]
    for cid in ordered[1:]:
        prev = groups[-1][-1]
        gap = ctx.kb.clips[cid].span.start - ctx.kb.clips[prev].span.end
        coherent = float(np.dot(emb[cid], emb[prev])) >= theta
        if gap <= gap_max and coherent:
            groups[-1].append(cid)
        else:
            groups.append([cid])
    return groups


def clip_merge(ctx: ToolContext, clip_ids: List[int]) -> ToolResult:
    """Merge temporally proximate, semantically coherent clips.

    A group's reported ranges are the union of its member clip spans, not
    the convex hull: bridging a missing clip consolidates the captions but
    never claims coverage of content nobody retrieved.
    """
    cost = ToolCost()
    if not clip_ids:
        return _error_result("clip_merge_tool", "clip_ids must be non-empty", cost)
    unknown = [c for c in clip_ids if c < 0 or c >= len(ctx.kb.clips)]
    if unknown:
        return _error_result("clip_merge_tool", f"unknown clip id(s) {unknown}", cost)
    groups = merge_clip_groups(ctx, clip_ids)
    lines = []
    structured_groups = []
    flat: List[TimeRange] = []
    for group in groups:
        spans = merge_ranges([ctx.kb.clips[c].span for c in group])
        flat.extend(spans)
        rendered = ", ".join(f"[{fmt_seconds(r.start)}s-{fmt_seconds(r.end)}s]"
                             for r in spans)
        digest = " / ".join(ctx.kb.clips[c].caption[:60] for c in group)
        lines.append(f"{rendered} clips {group}: {digest}")
        structured_groups.append({"clip_ids": group,
                                  "ranges": [[r.start, r.end] for r in spans],
                                  "caption_digest": digest})
    payload = truncate_payload("\n".join(lines), ctx.config.payload_budget)
    return ToolResult(tool="clip_merge_tool", payload=payload,
                      structured={"groups": structured_groups,
                                  "ranges": [[r.start, r.end] for r in merge_ranges(flat)]},
                      cost=cost)


def global_explore(ctx: ToolContext, q_text: str) -> ToolResult:
    """Query-focused traversal of the whole timeline: windowed summaries, then
    one reduce call that also proposes candidate time ranges."""
    cost = ToolCost()
    captions = [f"[{fmt_seconds(c.span.start)}s-{fmt_seconds(c.span.end)}s] {c.caption}"
                for c in ctx.kb.clips]
    if not captions:
        return ToolResult(tool="global_explore_tool", payload="no results (empty database)",
                          structured={"summary": "", "ranges": []}, cost=cost)
    size = ctx.config.window_size
    step = size - ctx.config.window_overlap
    windows = []
    start = 0
    while True:
        end = min(start + size, len(captions))
        windows.append("\n".join(captions[start:end]))
        if end >= len(captions):
            break
        start += step

    summaries: List[str] = []
    for i, window_text in enumerate(windows):
        request = ChatRequest(messages=[{
            "role": "user",
            "content": EXPLORE_WINDOW_PROMPT.format(query=q_text, captions=window_text),
        }])
        try:
            reply = ctx.suite.chat.chat(request)
        except BackendError as exc:
            logger.warning("global_explore window %d skipped: %s", i, exc)
            continue
        cost.add_usage(reply.usage)
        summaries.append(reply.text)
    if not summaries:
        return _error_result("global_explore_tool", "all summarization windows failed", cost)

    request = ChatRequest(messages=[{
        "role": "user",
        "content": EXPLORE_REDUCE_PROMPT.format(query=q_text, summaries="\n".join(summaries)),
    }])
    try:
        reply = ctx.suite.chat.chat(request)
    except BackendError as exc:
        return _error_result("global_explore_tool", f"reduce call failed: {exc}", cost)
    cost.add_usage(reply.usage)

    duration = ctx.kb.manifest.duration
    ranges: List[TimeRange] = []
    for m in _RANGE_LINE.finditer(reply.text):
        a, b = float(m.group(1)), float(m.group(2))
        if b < a:
            a, b = b, a
        clamped = TimeRange(max(0.0, a), max(0.0, b)).clamped(0.0, duration)
        if clamped is not None:
            ranges.append(clamped)
    ranges = merge_ranges(ranges)

    summary_text = _RANGE_LINE.sub("", reply.text).strip()
    lines = [summary_text] if summary_text else []
    for r in ranges:
        lines.append(f"highlighted: [{fmt_seconds(r.start)}s-{fmt_seconds(r.end)}s]")
    payload = truncate_payload("\n".join(lines) or "no summary produced",
                               ctx.config.payload_budget)
    return ToolResult(tool="global_explore_tool", payload=payload,
                      structured={"summary": summary_text,
                                  "ranges": [[r.start, r.end] for r in ranges]},
                      cost=cost)


def graph_retrieve(ctx: ToolContext, entity_query: str,
                   second_entity: Optional[str] = None) -> ToolResult:
    """Relational retrieval over the entity graph, importance-ranked."""
    cost = ToolCost()
    if not ctx.kb.graph.nodes:
        return ToolResult(tool="graph_retrieve_tool", payload="no entities found",
                          structured={"entities": [], "path": None}, cost=cost)
    try:
        result, usages = query_graph(
            ctx.kb.graph, entity_query, ctx.suite.embedder,
            second_entity=second_entity, max_hops=ctx.config.max_hops,
            seed_threshold=ctx.config.seed_threshold,
            lambda_query=ctx.config.lambdas[2], cap=ctx.config.traversal_cap)
    except BackendError as exc:
        return _error_result("graph_retrieve_tool", f"embedder failure: {exc}", cost)
    for u in usages:
        cost.add_usage(u)

    lines: List[str] = []
    structured_entities = []
    for entry in result.entities:
        node = entry.node
        timeline = ", ".join(f"[{fmt_seconds(t.start)}s-{fmt_seconds(t.end)}s]"
                             for t in node.timeline) or "(no timeline)"
        attrs = ", ".join(node.attributes) or "(no attributes)"
        lines.append(f"{node.name} <{node.node_id}> weight={entry.weight:.4f}")
        lines.append(f"  attributes: {attrs}")
        lines.append(f"  appears: {timeline}")
        for other, edge in entry.relations:
            arrow = "->" if edge.src == node.node_id else "<-"
            lines.append(f"  relation {arrow} {other}: {edge.description} "
                         f"[{fmt_seconds(edge.span.start)}s-{fmt_seconds(edge.span.end)}s]")
        structured_entities.append({
            "node_id": node.node_id, "name": node.name, "weight": entry.weight,
            "attributes": list(node.attributes),
            "timeline": [[t.start, t.end] for t in node.timeline],
            "relations": [{"other": other, "description": e.description,
                           "t_start": e.span.start, "t_end": e.span.end}
                          for other, e in entry.relations],
        })

    structured_path = None
    if result.path is not None:
        lines.append("path: " + " -> ".join(result.path.node_ids))
        for edge in result.path.edges:
            lines.append(f"  via: {edge.description} "
                         f"[{fmt_seconds(edge.span.start)}s-{fmt_seconds(edge.span.end)}s]")
        structured_path = {"node_ids": result.path.node_ids,
                           "edges": [{"src": e.src, "dst": e.dst,
                                      "description": e.description,
                                      "t_start": e.span.start, "t_end": e.span.end}
                                     for e in result.path.edges]}

    payload = truncate_payload("\n".join(lines) or "no entities found",
                               ctx.config.payload_budget)
    return ToolResult(tool="graph_retrieve_tool", payload=payload,
                      structured={"entities": structured_entities, "path": structured_path},
                      cost=cost)
