"""On-demand video frame decoding with an LRU cache.

Frames are addressed by (video_ref, frame_time); decoded frames are resized
so the longest edge does not exceed the configured bound (720 by default).
video_ref values resolve to files under the configured video root; path
escapes are rejected.
"""

import os
import threading
from collections import OrderedDict
from typing import Optional, Tuple

import numpy as np


class FrameDecodeError(Exception):
    pass


class UnknownVideoError(FrameDecodeError):
    pass


def resize_longest_edge(frame: np.ndarray, max_edge: int) -> np.ndarray:
    import cv2

    h, w = frame.shape[:2]
    longest = max(h, w)
    if longest <= max_edge:
        return frame
    scale = max_edge / longest
    return cv2.resize(frame, (max(1, round(w * scale)), max(1, round(h * scale))),
                      interpolation=cv2.INTER_AREA)


class FrameDecoder:
    def __init__(self, video_root: str, max_edge: int = 720, cache_size: int = 256):
        self.video_root = os.path.abspath(video_root)
        self.max_edge = max_edge
        self.cache_size = cache_size
        self._cache: "OrderedDict[Tuple[str, float], np.ndarray]" = OrderedDict()
        self._captures = {}
        self._lock = threading.Lock()
        self.decode_count = 0  # decodes actually performed (cache misses)

    def resolve(self, video_ref: str) -> str:
        path = os.path.abspath(os.path.join(self.video_root, video_ref))
        if not path.startswith(self.video_root + os.sep):
            raise UnknownVideoError(f"video_ref escapes the video root: {video_ref}")
        if not os.path.isfile(path):
            raise UnknownVideoError(f"no such video: {video_ref}")
        return path

    def _capture(self, path: str):
        import cv2

        cap = self._captures.get(path)
        if cap is None:
            cap = cv2.VideoCapture(path)
            if not cap.isOpened():
                raise FrameDecodeError(f"cannot open {path}")
            self._captures[path] = cap
        return cap

    def get(self, video_ref: str, frame_time: float) -> np.ndarray:
        key = (video_ref, round(float(frame_time), 3))
        with self._lock:
            if key in self._cache:
                self._cache.move_to_end(key)
                return self._cache[key]
            path = self.resolve(video_ref)
            frame = self._decode(path, key[1])
            self.decode_count += 1
            self._cache[key] = frame
            while len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
            return frame

    def _decode(self, path: str, frame_time: float) -> np.ndarray:
        import cv2

        cap = self._capture(path)
        cap.set(cv2.CAP_PROP_POS_MSEC, frame_time * 1000.0)
        ok, frame = cap.read()
        if not ok or frame is None:
            # seeking past the end: fall back to the last frame
            total = cap.get(cv2.CAP_PROP_FRAME_COUNT)
            if total > 0:
                cap.set(cv2.CAP_PROP_POS_FRAMES, total - 1)
                ok, frame = cap.read()
            if not ok or frame is None:
                raise FrameDecodeError(f"cannot decode {path} at t={frame_time}")
        return resize_longest_edge(frame[:, :, ::-1], self.max_edge)  # BGR -> RGB

    def close(self) -> None:
        with self._lock:
            for cap in self._captures.values():
                cap.release()
            self._captures.clear()
            self._cache.clear()
