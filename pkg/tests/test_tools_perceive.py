import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_kb, make_suite
from oracles import greedy_dedup_oracle
from vidagent.backends import Detection
from vidagent.config import EngineConfig
from vidagent.intervals import TimeRange
from vidagent.perceive_tools import (
    boundary_detect,
    box_iou,
    dedup_detections,
    frame_analysis,
    locate_boundary,
    object_detect,
    select_uniform,
    text_extract,
)
from vidagent.tools import ToolContext

SIM_FIXTURE = [
    {"frame_time": 10.0, "score": 0.1},
    {"frame_time": 10.5, "score": 0.2},
    {"frame_time": 11.0, "score": 0.9},
    {"frame_time": 11.5, "score": 0.95},
    {"frame_time": 12.0, "score": 0.85},
    {"frame_time": 12.5, "score": 0.2},
]


def make_ctx(kb=None, suite=None, duration=30.0, **config_kwargs):
    kb = kb or make_kb([f"caption {i}" for i in range(6)], duration=duration)
    return ToolContext(kb=kb, suite=suite or make_suite(),
                       config=EngineConfig(**config_kwargs))


class TestObjectDetect:
    def test_same_label_iou_dedup(self):
        dets = [
            Detection(box=[0, 0, 10, 10], label="person", confidence=0.9, frame_time=1.0),
            Detection(box=[1, 1, 10, 10], label="person", confidence=0.7, frame_time=1.0),
        ]
        assert box_iou(dets[0].box, dets[1].box) > 0.5
        kept = dedup_detections(dets, 0.5)
        assert len(kept) == 1
        assert kept[0].confidence == 0.9

    def test_different_labels_kept(self):
        dets = [
            Detection(box=[0, 0, 10, 10], label="person", confidence=0.9, frame_time=1.0),
            Detection(box=[0, 0, 10, 10], label="dog", confidence=0.7, frame_time=1.0),
        ]
        assert len(dedup_detections(dets, 0.5)) == 2

    def test_different_frames_kept(self):
        dets = [
            Detection(box=[0, 0, 10, 10], label="person", confidence=0.9, frame_time=1.0),
            Detection(box=[0, 0, 10, 10], label="person", confidence=0.7, frame_time=1.5),
        ]
        assert len(dedup_detections(dets, 0.5)) == 2

    def test_frame_arithmetic(self):
        fixture = [{"frame_time": t, "box": [0, 0, 5, 5], "label": "person",
                    "confidence": 0.8} for t in (10.0, 10.5, 11.0, 11.5, 12.0)]
        suite = make_suite(detections=fixture)
        ctx = make_ctx(suite=suite)
        result = object_detect(ctx, t_start=10.0, t_end=12.0, q_obj="person")
        assert len(result.structured) == 5  # 5 frames queried at fps=2
        assert "frames sampled: 5" in result.payload

    def test_counting_rendering(self):
        fixture = [{"frame_time": 10.0, "box": [i * 20, 0, i * 20 + 10, 10],
                    "label": "person", "confidence": 0.8} for i in range(3)]
        ctx = make_ctx(suite=make_suite(detections=fixture))
        result = object_detect(ctx, t_start=10.0, t_end=10.0001, q_obj="person")
        assert "3 x person" in result.payload

    @given(st.lists(st.tuples(st.integers(0, 60), st.integers(0, 60),
                              st.integers(1, 40), st.integers(1, 40),
                              st.integers(0, 100)),
                    min_size=1, max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_dedup_matches_greedy_oracle(self, raw):
        dets = [Detection(box=[x, y, x + w, y + h], label="obj",
                          confidence=c / 100.0, frame_time=3.0)
                for x, y, w, h, c in raw]
        kept = dedup_detections(dets, 0.5)
        oracle_kept = greedy_dedup_oracle([(d.box, d.confidence) for d in dets], 0.5)
        got = sorted((tuple(d.box), d.confidence) for d in kept)
        want = sorted((tuple(dets[i].box), dets[i].confidence) for i in oracle_kept)
        assert got == want
        # and no same-label pair above the threshold survives
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert box_iou(a.box, b.box) <= 0.5


class TestTextExtract:
    def test_consecutive_identical_collapse(self):
        fixture = [{"frame_time": t, "text": "SALE 50%"} for t in (10.0, 10.5, 11.0)]
        ctx = make_ctx(suite=make_suite(ocr_items=fixture))
        result = text_extract(ctx, t_start=10.0, t_end=11.0)
        assert result.structured == [{"frame_time": 10.0, "text": "SALE 50%"}]
        assert result.payload == "[10s] SALE 50%"

    def test_no_text(self):
        ctx = make_ctx()
        result = text_extract(ctx, t_start=0.0, t_end=2.0)
        assert result.payload == "no text found"
        assert not result.error

    def test_mixed_annotations_ordered(self):
        fixture = [{"frame_time": 11.0, "text": "B"}, {"frame_time": 10.0, "text": "A"},
                   {"frame_time": 11.5, "text": "A"}]
        ctx = make_ctx(suite=make_suite(ocr_items=fixture))
        result = text_extract(ctx, t_start=10.0, t_end=12.0)
        assert [e["text"] for e in result.structured] == ["A", "B", "A"]
        assert [e["frame_time"] for e in result.structured] == [10.0, 11.0, 11.5]

    def test_empty_recognitions_omitted(self):
        fixture = [{"frame_time": 10.0, "text": "  "}, {"frame_time": 10.5, "text": "X"}]
        ctx = make_ctx(suite=make_suite(ocr_items=fixture))
        result = text_extract(ctx, t_start=10.0, t_end=11.0)
        assert [e["text"] for e in result.structured] == ["X"]


class TestBoundaryDetect:
    def test_worked_example(self):
        ctx = make_ctx(suite=make_suite(sim_scores=SIM_FIXTURE))
        result = boundary_detect(ctx, t_start=10.0, t_end=12.5, q_event="man jumps")
        assert result.structured["t_start"] == pytest.approx(11.0)
        assert result.structured["t_end"] == pytest.approx(12.5)
        assert not result.structured["low_confidence"]
        assert "[11s, 12.5s]" in result.payload

    def test_constant_scores_low_confidence(self):
        fixture = [{"frame_time": t, "score": 0.5} for t in (10.0, 10.5, 11.0)]
        ctx = make_ctx(suite=make_suite(sim_scores=fixture))
        result = boundary_detect(ctx, t_start=10.0, t_end=11.0, q_event="e")
        assert result.structured["low_confidence"]
        assert result.structured["t_start"] == 10.0
        assert result.structured["t_end"] == 11.0

    def test_single_spike(self):
        fixture = [{"frame_time": 10.0, "score": 0.1}, {"frame_time": 10.5, "score": 0.9},
                   {"frame_time": 11.0, "score": 0.1}]
        ctx = make_ctx(suite=make_suite(sim_scores=fixture))
        result = boundary_detect(ctx, t_start=10.0, t_end=11.0, q_event="e")
        assert result.structured["t_start"] == pytest.approx(10.5)
        assert result.structured["t_end"] == pytest.approx(11.0)  # t + 1/fps

    def test_earliest_run_tie_break(self):
        scores = [(0.0, 0.9), (0.5, 0.1), (1.0, 0.9)]
        boundary, low, _ = locate_boundary(scores, 2.0, TimeRange(0.0, 1.0), 0.8)
        assert not low
        assert boundary.start == 0.0 and boundary.end == 0.5

    def test_too_few_frames_is_error(self):
        ctx = make_ctx()
        result = boundary_detect(ctx, t_start=10.0, t_end=10.1, q_event="e")
        assert result.error

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
                    min_size=2, max_size=30))
    @settings(max_examples=200, deadline=None)
    def test_always_within_range_positive_length(self, scores):
        frames = [(10.0 + 0.5 * i, s) for i, s in enumerate(scores)]
        span = TimeRange(10.0, frames[-1][0])
        boundary, _, _ = locate_boundary(frames, 2.0, span, 0.8)
        assert boundary.start >= span.start - 1e-9
        assert boundary.end <= span.end + 1e-9
        assert boundary.length > 0


class TestFrameAnalysis:
    def test_max_frames_default(self, config):
        assert config.max_frames == 64

    def test_two_hundred_candidates_downsample_to_64(self):
        # [0, 99.5] at fps=2 -> 200 candidate frames
        kb = make_kb([f"c{i}" for i in range(20)], duration=100.0)
        ctx = make_ctx(kb=kb)
        result = frame_analysis(ctx, ranges=[[0.0, 99.5]], q_specific="what happens")
        assert result.structured["frames_used"] == 64

    def test_never_exceeds_64(self):
        kb = make_kb([f"c{i}" for i in range(20)], duration=100.0)
        ctx = make_ctx(kb=kb)
        rng = np.random.default_rng(2)
        for _ in range(25):
            a = float(rng.uniform(0, 90))
            b = a + float(rng.uniform(0.5, 10))
            spans = [[a, min(b, 100.0)] for _ in range(int(rng.integers(1, 4)))]
            result = frame_analysis(ctx, ranges=spans, q_specific="q")
            assert result.structured["frames_used"] <= 64

    def test_select_uniform_properties(self):
        times = [float(i) for i in range(200)]
        picked = select_uniform(times, 64)
        assert len(picked) == 64
        assert picked[0] == times[0] and picked[-1] == times[-1]
        assert picked == sorted(picked)
        assert select_uniform(times[:10], 64) == times[:10]

    def test_scripted_reply_passthrough(self):
        suite = make_suite(analysis=["the skirt is white"])
        ctx = make_ctx(suite=suite)
        result = frame_analysis(ctx, ranges=[[0.0, 5.0]], q_specific="skirt color")
        assert result.payload == "the skirt is white"

    def test_empty_ranges_error(self):
        result = frame_analysis(make_ctx(), ranges=[], q_specific="q")
        assert result.error
