import json

import numpy as np
import pytest

from conftest import make_suite
from vidagent.config import EngineConfig
from vidagent.ingest import IngestError, ingest_video
from vidagent.kb import load_kb


def caption_reply(description, subjects=None):
    return json.dumps({
        "clip_start_time": 0, "clip_end_time": 5,
        "subject_registry": subjects or {},
        "clip_description": description,
    })


EXTRACTION = json.dumps({
    "video_analysis": [
        {"subject_id": "Subject_100", "subject_name": "man in red shirt",
         "appearance_timeline": [["0", "10"]], "attributes": ["red shirt"],
         "actions_events": []},
        {"subject_id": "Subject_101", "subject_name": "woman in blue dress",
         "appearance_timeline": [["5", "15"]], "attributes": [], "actions_events": []},
    ],
    "interactions": [
        {"subjects_involved": ["Subject_100", "Subject_101"],
         "interaction_description": "gives a book", "timestamp": ["6", "7"]},
    ],
})


def three_clip_suite(**kwargs):
    captions = {
        0.0: caption_reply("a man in a red shirt enters",
                           {"subject_1": {"name": "man in red shirt",
                                          "appearance": ["red shirt"],
                                          "identity": ["adult"], "first_seen": 0.5}}),
        5.0: caption_reply("the man gives a book to a woman"),
        10.0: caption_reply("the woman reads the book"),
    }
    return make_suite(chat_replies=[{"text": EXTRACTION}],
                      captions_by_start=captions, **kwargs)


class TestIngest:
    def test_fixture_ingest(self):
        suite = three_clip_suite()
        kb = ingest_video("fixture://v", 15.0, suite, EngineConfig(), video_id="v")
        assert kb.manifest.clip_count == 3
        assert kb.embeddings.shape == (3, 256)
        assert set(kb.graph.nodes) == {"Subject_100", "Subject_101"}
        assert len(kb.graph.edges) == 1
        assert kb.clips[0].subject_registry[0].name == "man in red shirt"
        # one embedding row per clip, unit norm
        assert np.allclose(np.linalg.norm(kb.embeddings, axis=1), 1.0, atol=1e-6)

    def test_caption_requests_carry_fps_and_resolution(self):
        suite = three_clip_suite()
        ingest_video("fixture://v", 15.0, suite, EngineConfig())
        for req in suite.captioner.requests:
            assert req["fps"] == 2.0
            assert req["max_edge"] == 720

    def test_transient_captioner_failure_retried(self):
        suite = three_clip_suite()
        suite.captioner._remaining_failures = {5.0: 2}  # 2 retries configured
        kb = ingest_video("fixture://v", 15.0, suite, EngineConfig())
        assert kb.clips[1].caption == "the man gives a book to a woman"
        assert not any("captioner failed" in d for d in kb.manifest.diagnostics)

    def test_persistent_captioner_failure_flagged(self):
        suite = three_clip_suite()
        suite.captioner._remaining_failures = {5.0: 3}  # exceeds 1 + 2 attempts
        kb = ingest_video("fixture://v", 15.0, suite, EngineConfig())
        assert kb.clips[1].caption == ""
        assert any("captioner failed" in d for d in kb.manifest.diagnostics)
        # the empty caption still has an embedding row
        assert kb.embeddings.shape[0] == 3
        assert kb.embeddings[1, 0] == 1.0  # e1 for the empty text

    def test_embed_dim_mismatch_fatal(self):
        suite = three_clip_suite(dim=64)
        with pytest.raises(IngestError):
            ingest_video("fixture://v", 15.0, suite, EngineConfig(embed_dim=256))

    def test_build_cost_recorded(self):
        suite = three_clip_suite()
        kb = ingest_video("fixture://v", 15.0, suite, EngineConfig())
        # 3 caption calls + 1 embed + 1 extraction chat + graph/name + S-matrix embeds
        assert kb.manifest.build_cost.calls >= 5
        assert kb.manifest.build_cost.tokens_out > 0

    def test_persisted_when_out_dir_given(self, tmp_path):
        suite = three_clip_suite()
        out = str(tmp_path / "kb")
        kb = ingest_video("fixture://v", 15.0, suite, EngineConfig(), out_dir=out)
        loaded = load_kb(out)
        assert loaded.manifest.clip_count == kb.manifest.clip_count
        assert loaded.embeddings.tobytes() == kb.embeddings.tobytes()

    def test_invalid_duration(self):
        with pytest.raises(ValueError):
            ingest_video("fixture://v", 0.0, three_clip_suite(), EngineConfig())
