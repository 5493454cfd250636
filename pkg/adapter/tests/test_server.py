import json
import random

import pytest

from conftest import FIXTURE_DIR
from vidadapter.config import ROLE_NAMES, AdapterConfig, AdapterConfigError

VIDEO_REF = "fixture://video"


class TestHealth:
    def test_all_roles_stubbed(self, client):
        body = client.get("/healthz").json()
        assert body == {"roles": {role: "stubbed" for role in ROLE_NAMES}}


class TestErrors:
    def test_unknown_video_ref_404(self, client):
        for endpoint, payload in [
            ("/caption", {"video_ref": "nope", "t_start": 0, "t_end": 5,
                          "fps": 2.0, "max_edge": 720}),
            ("/detect", {"video_ref": "nope", "frame_times": [0.0], "query": "x"}),
            ("/ocr", {"video_ref": "nope", "frame_times": [0.0]}),
            ("/frame_sim", {"video_ref": "nope", "frame_times": [0.0], "query": "x"}),
            ("/analyze", {"video_ref": "nope", "frame_times": [0.0], "query": "x"}),
        ]:
            response = client.post(endpoint, json=payload)
            assert response.status_code == 404, endpoint
            assert response.json()["error"] == "unknown video_ref"

    def test_malformed_body_rejected(self, client):
        assert client.post("/embed", json={"nope": 1}).status_code == 422


class TestStubBehavior:
    def test_embed_identical_texts_identical_vectors(self, client):
        body = client.post("/embed", json={"texts": ["a", "a"]}).json()
        assert body["vectors"][0] == body["vectors"][1]

    def test_embed_unit_norm(self, client):
        body = client.post("/embed", json={"texts": ["some words here", ""]}).json()
        for vec in body["vectors"]:
            norm = sum(v * v for v in vec) ** 0.5
            assert norm == pytest.approx(1.0, abs=1e-6)

    def test_detect_fixture_verbatim(self, client):
        body = client.post("/detect", json={
            "video_ref": VIDEO_REF, "frame_times": [10.0], "query": "person"}).json()
        assert len(body["detections"]) == 3
        assert all(d["frame_time"] == 10.0 for d in body["detections"])

    def test_stateless_between_requests(self, client):
        payload = {"video_ref": VIDEO_REF, "frame_times": [10.0, 10.5], "query": "p"}
        first = client.post("/detect", json=payload).json()
        second = client.post("/detect", json=payload).json()
        assert first == second

    def test_caption_keyed_by_clip_start(self, client):
        body = client.post("/caption", json={
            "video_ref": VIDEO_REF, "t_start": 5.0, "t_end": 10.0,
            "fps": 2.0, "max_edge": 720}).json()
        doc = json.loads(body["raw"])
        assert "hands the book" in doc["clip_description"]

    def test_unkeyed_caption_empty(self, client):
        body = client.post("/caption", json={
            "video_ref": VIDEO_REF, "t_start": 2.5, "t_end": 7.5,
            "fps": 2.0, "max_edge": 720}).json()
        assert body["raw"] == ""


class TestCardinality:
    def test_frame_sim_one_score_per_requested_time_100_random(self, client):
        rng = random.Random(7)
        for _ in range(100):
            count = rng.randint(1, 12)
            times = sorted(round(rng.uniform(0, 30), 3) for _ in range(count))
            body = client.post("/frame_sim", json={
                "video_ref": VIDEO_REF, "frame_times": times,
                "query": "anything"}).json()
            assert len(body["scores"]) == len(times)
            got_times = [s["frame_time"] for s in body["scores"]]
            assert got_times == [round(t, 3) for t in times]

    def test_detect_and_ocr_empty_groups_allowed(self, client):
        # unkeyed times yield empty result groups, not errors
        for endpoint, key in (("/detect", "detections"), ("/ocr", "items")):
            payload = {"video_ref": VIDEO_REF, "frame_times": [23.456]}
            if endpoint == "/detect":
                payload["query"] = "x"
            body = client.post(endpoint, json=payload).json()
            assert body[key] == []


class TestConfig:
    def test_stub_requires_fixtures(self):
        with pytest.raises(AdapterConfigError):
            AdapterConfig()

    def test_unknown_role_rejected(self):
        with pytest.raises(AdapterConfigError):
            AdapterConfig(roles={"teleport": "model-x"}, stub_fixtures=FIXTURE_DIR)

    def test_real_role_requires_video_root(self):
        with pytest.raises(AdapterConfigError):
            AdapterConfig(roles={"detect": "some/model"}, stub_fixtures=FIXTURE_DIR)

    def test_unresolvable_role_fails_at_startup(self, tmp_path):
        from vidadapter.server import create_app
        config = AdapterConfig(roles={"ocr": "some/ocr-model"},
                               stub_fixtures=FIXTURE_DIR,
                               video_root=str(tmp_path))
        with pytest.raises(AdapterConfigError, match="ocr"):
            create_app(config)
