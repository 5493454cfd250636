"""Golden wire-contract suite, engine side.

The committed cases freeze request/response pairs for the six perception
endpoints. Two things are checked here: the in-process mocks still produce
exactly the golden responses, and the HTTP perception client maps golden
wire JSON into the same typed results the mocks return (so a conformant
server can replace mocks without the engine noticing).
"""

import json

import httpx
import pytest

from conftest import FIXTURE_DIR, WIRE_GOLDEN
from vidagent.backends import HttpPerceptionBackend
from vidagent.config import EngineConfig
from vidagent.intervals import TimeRange
from vidagent.mocks import build_mock_suite


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@pytest.fixture(scope="module")
def cases():
    with open(WIRE_GOLDEN) as fh:
        return {c["name"]: c for c in json.load(fh)}


@pytest.fixture()
def suite():
    return build_mock_suite(FIXTURE_DIR, EngineConfig().clip_len)


def mock_response_for(suite, case):
    endpoint, request = case["endpoint"], case["request"]
    if endpoint == "/caption":
        reply = suite.captioner.caption(request["video_ref"],
                                        TimeRange(request["t_start"], request["t_end"]),
                                        fps=request["fps"], max_edge=request["max_edge"])
        return {"raw": reply.raw}
    if endpoint == "/embed":
        return {"vectors": suite.embedder.embed(request["texts"]).vectors.tolist()}
    if endpoint == "/detect":
        dets = suite.detector.detect(request["video_ref"], request["frame_times"],
                                     request["query"]).detections
        return {"detections": [{"frame_time": d.frame_time, "box": d.box,
                                "label": d.label, "confidence": d.confidence}
                               for d in dets]}
    if endpoint == "/ocr":
        items = suite.ocr.ocr(request["video_ref"], request["frame_times"]).items
        return {"items": [{"frame_time": i.frame_time, "text": i.text} for i in items]}
    if endpoint == "/frame_sim":
        scores = suite.frame_sim.frame_sim(request["video_ref"], request["frame_times"],
                                           request["query"]).scores
        return {"scores": [{"frame_time": s.frame_time, "score": s.score}
                           for s in scores]}
    if endpoint == "/analyze":
        reply = suite.frame_vlm.analyze(request["video_ref"], request["frame_times"],
                                        request["query"])
        return {"text": reply.text}
    raise AssertionError(f"unknown endpoint {endpoint}")


class TestMockConformance:
    def test_mocks_reproduce_golden_responses(self, suite, cases):
        for case in cases.values():
            got = mock_response_for(suite, case)
            assert canonical(got) == canonical(case["response"]), case["name"]


class TestClientConformance:
    """The HTTP client, fed golden responses, must equal the mock results."""

    def _client_serving(self, cases):
        by_path = {c["endpoint"]: c for c in cases.values()}

        def handler(request: httpx.Request) -> httpx.Response:
            case = by_path[request.url.path]
            # the client must emit exactly the golden request body
            assert canonical(json.loads(request.content)) == canonical(case["request"])
            return httpx.Response(200, json=case["response"])

        return HttpPerceptionBackend("http://adapter.test",
                                     transport=httpx.MockTransport(handler))

    def test_round_trips_match_mocks(self, suite, cases):
        client = self._client_serving(cases)

        c = cases["caption_first_clip"]["request"]
        via_http = client.caption(c["video_ref"], TimeRange(c["t_start"], c["t_end"]),
                                  fps=c["fps"], max_edge=c["max_edge"])
        assert via_http.raw == suite.captioner.caption(
            c["video_ref"], TimeRange(c["t_start"], c["t_end"]),
            fps=c["fps"], max_edge=c["max_edge"]).raw

        c = cases["embed_two_texts"]["request"]
        assert client.embed(c["texts"]).vectors.tolist() == \
            suite.embedder.embed(c["texts"]).vectors.tolist()

        c = cases["detect_people_near_sign"]["request"]
        assert [d.__dict__ for d in client.detect(c["video_ref"], c["frame_times"],
                                                  c["query"]).detections] == \
            [d.__dict__ for d in suite.detector.detect(c["video_ref"], c["frame_times"],
                                                       c["query"]).detections]

        c = cases["ocr_sign"]["request"]
        assert [i.__dict__ for i in client.ocr(c["video_ref"], c["frame_times"]).items] == \
            [i.__dict__ for i in suite.ocr.ocr(c["video_ref"], c["frame_times"]).items]

        c = cases["frame_sim_jump"]["request"]
        assert [s.__dict__ for s in client.frame_sim(c["video_ref"], c["frame_times"],
                                                     c["query"]).scores] == \
            [s.__dict__ for s in suite.frame_sim.frame_sim(c["video_ref"],
                                                           c["frame_times"],
                                                           c["query"]).scores]

        c = cases["analyze_dancing"]["request"]
        assert client.analyze(c["video_ref"], c["frame_times"], c["query"]).text == \
            suite.frame_vlm.analyze(c["video_ref"], c["frame_times"], c["query"]).text
