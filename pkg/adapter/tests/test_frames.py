import os

import numpy as np
import pytest

cv2 = pytest.importorskip("cv2")

from vidadapter.frames import FrameDecoder, UnknownVideoError, resize_longest_edge


@pytest.fixture(scope="module")
def video_root(tmp_path_factory):
    """A 10 s synthetic 1600x900 clip at 10 fps (frame index encoded in color)."""
    root = tmp_path_factory.mktemp("videos")
    path = os.path.join(root, "clip.avi")
    writer = cv2.VideoWriter(path, cv2.VideoWriter_fourcc(*"MJPG"), 10, (1600, 900))
    if not writer.isOpened():
        pytest.skip("no MJPG encoder available")
    for i in range(100):
        frame = np.full((900, 1600, 3), (i * 2) % 255, dtype=np.uint8)
        writer.write(frame)
    writer.release()
    return str(root)


class TestResize:
    def test_longest_edge_bounded(self):
        frame = np.zeros((900, 1600, 3), dtype=np.uint8)
        out = resize_longest_edge(frame, 720)
        assert max(out.shape[:2]) == 720
        assert out.shape[1] == 720 and out.shape[0] == 405  # aspect kept

    def test_small_frames_untouched(self):
        frame = np.zeros((100, 200, 3), dtype=np.uint8)
        assert resize_longest_edge(frame, 720).shape == (100, 200, 3)


class TestDecoder:
    def test_decode_and_resize(self, video_root):
        decoder = FrameDecoder(video_root, max_edge=720)
        frame = decoder.get("clip.avi", 0.0)
        assert max(frame.shape[:2]) == 720
        decoder.close()

    def test_distinct_times_distinct_frames(self, video_root):
        decoder = FrameDecoder(video_root, max_edge=720)
        early = decoder.get("clip.avi", 0.0)
        late = decoder.get("clip.avi", 8.0)
        assert early.mean() != late.mean()
        decoder.close()

    def test_cache_hit_skips_decode(self, video_root):
        decoder = FrameDecoder(video_root, max_edge=720)
        decoder.get("clip.avi", 1.0)
        count = decoder.decode_count
        decoder.get("clip.avi", 1.0)
        assert decoder.decode_count == count
        decoder.close()

    def test_lru_bound(self, video_root):
        decoder = FrameDecoder(video_root, max_edge=720, cache_size=4)
        for i in range(10):
            decoder.get("clip.avi", i * 0.5)
        assert len(decoder._cache) <= 4
        decoder.close()

    def test_unknown_video(self, video_root):
        decoder = FrameDecoder(video_root)
        with pytest.raises(UnknownVideoError):
            decoder.get("missing.avi", 0.0)
        with pytest.raises(UnknownVideoError):
            decoder.get("../escape.avi", 0.0)
        decoder.close()
