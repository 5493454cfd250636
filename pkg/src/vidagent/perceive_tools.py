"""Perceive-phase tools: frame-level visual evidence through the perception
backends. The engine never decodes video; frames are addressed by
(video_ref, frame_time)."""

import logging
from collections import OrderedDict
from typing import List, Optional, Tuple

import numpy as np

from .backends import BackendError, Detection
from .intervals import TimeRange, merge_ranges, sample_frame_times
from .tools import ToolContext, ToolCost, ToolResult
from .util import fmt_seconds, truncate_payload

logger = logging.getLogger(__name__)


def _error_result(tool: str, message: str, cost: ToolCost) -> ToolResult:
    return ToolResult(tool=tool, payload=f"tool error: {message}",
                      structured={"error": message}, cost=cost, error=True)


def _clamp_span(ctx: ToolContext, t_start: float, t_end: float) -> Optional[TimeRange]:
    if t_end < t_start:
        t_start, t_end = t_end, t_start
    span = TimeRange(max(0.0, t_start), max(0.0, t_end))
    return span.clamped(0.0, ctx.kb.manifest.duration)


def box_iou(a: List[float], b: List[float]) -> float:
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    if inter <= 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def dedup_detections(detections: List[Detection], iou_threshold: float) -> List[Detection]:
    """Greedy confidence-sorted suppression per (frame_time, label)."""
    by_group: "OrderedDict[Tuple[float, str], List[Detection]]" = OrderedDict()
    for det in detections:
        by_group.setdefault((round(det.frame_time, 3), det.label), []).append(det)
    kept: List[Detection] = []
    for group in by_group.values():
        group = sorted(group, key=lambda d: -d.confidence)
        chosen: List[Detection] = []
        for det in group:
            if all(box_iou(det.box, other.box) <= iou_threshold for other in chosen):
                chosen.append(det)
        kept.extend(chosen)
    kept.sort(key=lambda d: (d.frame_time, d.label, -d.confidence))
    return kept


def object_detect(ctx: ToolContext, t_start: float, t_end: float, q_obj: str) -> ToolResult:
    """Open-vocabulary detection across the sampled frames of a range."""
    cost = ToolCost()
    if not q_obj.strip():
        return _error_result("object_detect_tool", "q_obj must be non-empty", cost)
    span = _clamp_span(ctx, t_start, t_end)
    if span is None:
        return _error_result("object_detect_tool", "range lies outside the video", cost)
    frames = sample_frame_times(span, ctx.kb.manifest.fps)
    try:
        reply = ctx.suite.detector.detect(ctx.kb.video_ref, frames, q_obj)
    except BackendError as exc:
        return _error_result("object_detect_tool", f"detector failure: {exc}", cost)
    cost.add_usage(reply.usage)
    detections = dedup_detections(reply.detections, ctx.config.iou_threshold)

    by_frame: "OrderedDict[float, List[Detection]]" = OrderedDict()
    for det in detections:
        by_frame.setdefault(round(det.frame_time, 3), []).append(det)
    lines = [f"query: {q_obj}; frames sampled: {len(frames)}; "
             f"total detections: {len(detections)}"]
    for t, dets in by_frame.items():
        counts: "OrderedDict[str, int]" = OrderedDict()
        for d in dets:
            counts[d.label] = counts.get(d.label, 0) + 1
        count_text = ", ".join(f"{n} x {label}" for label, n in counts.items())
        boxes = "; ".join(f"{d.label}@({d.box[0]:.0f},{d.box[1]:.0f},{d.box[2]:.0f},"
                          f"{d.box[3]:.0f}) conf={d.confidence:.2f}" for d in dets)
        lines.append(f"t={fmt_seconds(t)}s: {count_text} | {boxes}")
    if not by_frame:
        lines.append("no objects detected")
    structured = [{"frame_time": d.frame_time, "box": d.box, "label": d.label,
                   "confidence": d.confidence} for d in detections]
    payload = truncate_payload("\n".join(lines), ctx.config.payload_budget)
    return ToolResult(tool="object_detect_tool", payload=payload,
                      structured=structured, cost=cost)


def text_extract(ctx: ToolContext, t_start: float, t_end: float) -> ToolResult:
    """OCR over sampled frames; consecutive identical strings collapse."""
    cost = ToolCost()
    span = _clamp_span(ctx, t_start, t_end)
    if span is None:
        return _error_result("text_extract_tool", "range lies outside the video", cost)
    frames = sample_frame_times(span, ctx.kb.manifest.fps)
    try:
        reply = ctx.suite.ocr.ocr(ctx.kb.video_ref, frames)
    except BackendError as exc:
        return _error_result("text_extract_tool", f"ocr failure: {exc}", cost)
    cost.add_usage(reply.usage)

    items = sorted((i for i in reply.items if i.text.strip()),
                   key=lambda i: i.frame_time)
    collapsed: List[Tuple[float, str]] = []
    for item in items:
        if collapsed and collapsed[-1][1] == item.text:
            continue  # static overlay repeated on the next frame
        collapsed.append((item.frame_time, item.text))
    if not collapsed:
        payload = "no text found"
    else:
        payload = "\n".join(f"[{fmt_seconds(t)}s] {text}" for t, text in collapsed)
    payload = truncate_payload(payload, ctx.config.payload_budget)
    return ToolResult(tool="text_extract_tool", payload=payload,
                      structured=[{"frame_time": t, "text": text} for t, text in collapsed],
                      cost=cost)


def locate_boundary(frame_scores: List[Tuple[float, float]], fps: float,
                    span: TimeRange, tau_scale: float) -> Tuple[TimeRange, bool, float]:
    """Longest contiguous high-similarity run -> event boundary.

    Threshold is tau_scale * max score; ties pick the earliest run. Equal
    scores everywhere return the full span flagged low-confidence. The
    result always lies inside span with positive length.
    """
    scores = [s for _, s in frame_scores]
    peak = max(scores)
    low_confidence = max(scores) == min(scores)
    if low_confidence:
        return span, True, peak
    tau = tau_scale * peak
    best: Optional[Tuple[int, int]] = None  # (start index, end index) inclusive
    run_start: Optional[int] = None
    for i, s in enumerate(scores + [float("-inf")]):
        if s >= tau and run_start is None:
            run_start = i
        elif s < tau and run_start is not None:
            if best is None or (i - run_start) > (best[1] - best[0] + 1):
                best = (run_start, i - 1)
            run_start = None
    assert best is not None  # peak itself always clears tau
    first_t = frame_scores[best[0]][0]
    last_t = frame_scores[best[1]][0]
    step = 1.0 / fps
    end_t = min(last_t + step, span.end)
    start_t = first_t
    if end_t <= start_t:
        start_t = max(span.start, end_t - step)
    return TimeRange(start_t, end_t), False, peak


def boundary_detect(ctx: ToolContext, t_start: float, t_end: float, q_event: str) -> ToolResult:
    """Fine-grained temporal localization from frame similarity scores."""
    cost = ToolCost()
    if not q_event.strip():
        return _error_result("boundary_detect_tool", "q_event must be non-empty", cost)
    span = _clamp_span(ctx, t_start, t_end)
    if span is None:
        return _error_result("boundary_detect_tool", "range lies outside the video", cost)
    fps = ctx.kb.manifest.fps
    frames = sample_frame_times(span, fps)
    if len(frames) < 2:
        return _error_result("boundary_detect_tool",
                             "range contains fewer than 2 sampled frames", cost)
    try:
        reply = ctx.suite.frame_sim.frame_sim(ctx.kb.video_ref, frames, q_event)
    except BackendError as exc:
        return _error_result("boundary_detect_tool", f"frame similarity failure: {exc}", cost)
    cost.add_usage(reply.usage)
    scored = sorted(((s.frame_time, s.score) for s in reply.scores), key=lambda x: x[0])
    if len(scored) < 2:
        return _error_result("boundary_detect_tool",
                             "fewer than 2 frames were scored", cost)
    boundary, low_confidence, peak = locate_boundary(scored, fps, span,
                                                     ctx.config.boundary_tau_scale)
    text = (f"event boundary: [{fmt_seconds(boundary.start)}s, "
            f"{fmt_seconds(boundary.end)}s] (peak score {peak:.4f})")
    if low_confidence:
        text += " [low confidence: all frame scores equal]"
    payload = truncate_payload(text, ctx.config.payload_budget)
    return ToolResult(tool="boundary_detect_tool", payload=payload,
                      structured={"t_start": boundary.start, "t_end": boundary.end,
                                  "low_confidence": low_confidence, "peak": peak},
                      cost=cost)


def select_uniform(times: List[float], budget: int) -> List[float]:
    """Uniform downsampling to at most budget frames."""
    if len(times) <= budget:
        return times
    indices = np.linspace(0, len(times) - 1, budget)
    return [times[int(round(i))] for i in indices]


def frame_analysis(ctx: ToolContext, ranges: List[List[float]], q_specific: str) -> ToolResult:
    """High-capacity VLM fallback over a bounded frame budget."""
    cost = ToolCost()
    if not ranges:
        return _error_result("frame_analysis_tool", "ranges must be non-empty", cost)
    if not q_specific.strip():
        return _error_result("frame_analysis_tool", "q_specific must be non-empty", cost)
    spans = []
    for pair in ranges:
        span = _clamp_span(ctx, pair[0], pair[1])
        if span is not None:
            spans.append(span)
    if not spans:
        return _error_result("frame_analysis_tool", "all ranges lie outside the video", cost)
    merged = merge_ranges(spans)
    candidates: List[float] = []
    seen = set()
    for span in merged:
        for t in sample_frame_times(span, ctx.kb.manifest.fps):
            if t not in seen:
                seen.add(t)
                candidates.append(t)
    frames = select_uniform(candidates, ctx.config.max_frames)
    try:
        reply = ctx.suite.frame_vlm.analyze(ctx.kb.video_ref, frames, q_specific)
    except BackendError as exc:
        return _error_result("frame_analysis_tool", f"analysis failure: {exc}", cost)
    cost.add_usage(reply.usage)
    payload = truncate_payload(reply.text or "no analysis produced",
                               ctx.config.payload_budget)
    return ToolResult(tool="frame_analysis_tool", payload=payload,
                      structured={"text": reply.text, "frames_used": len(frames)},
                      cost=cost)
