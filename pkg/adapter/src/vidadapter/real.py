"""Real model-runtime wrappers, one per role.

These are reference integrations: the model identifier comes from the
adapter config and every import is deferred so the stub-only deployment
needs none of the heavy dependencies. Wrappers receive decoded RGB frames
from the FrameDecoder and return plain wire-shaped values.

Captioning carries the structured-output prompt the engine's parser
expects; models that cannot follow it still work, because the engine
degrades an unparseable reply to a raw-text caption.
"""

import logging
from typing import Any, Dict, List

import numpy as np

from .config import AdapterConfigError
from .frames import FrameDecoder

logger = logging.getLogger(__name__)

CAPTION_PROMPT = """You are an expert video analysis assistant. Your task is to generate detailed, objective, and accurate descriptions for video clips. These descriptions will be used to build a database and environment for an AI video agent, so precision and comprehensiveness are crucial.

You will receive a sequence of consecutive frames from a video clip. Please thoroughly understand the content of this clip and output a JSON object strictly adhering to the template provided below.

**Description Requirements:**

1. **Objectivity**: Describe only what is **actually visible** in the video. Avoid any speculation, interpretation, or subjective judgment.
2. **Detail**:
   • **Subjects & Objects:** Identify all significant subjects (people, animals) and objects (items, vehicles, etc.) present.
   • **Attributes:** Detail key attributes of these subjects and objects (e.g., color, size, state, position).
   • **Actions & Behaviors:** Describe the actions and behaviors performed by subjects.
   • **Interactions:** If applicable, describe interactions between subjects, or between subjects and objects.
   • **Scene & Environment:** Describe the background, environment, and any changes in the scene.
3. **Temporal Order**: The narration must strictly follow the **chronological order** of events as they unfold in the video clip.
4. **Smoothness**: Use natural, flowing language, as if providing a voice-over narration.
5. **No Timestamps in Description**: The `clip_description` content should **not** include `clip_start_time` or `clip_end_time`, as these are provided separately in the JSON structure.

**Output Template**:

{
  "clip_start_time": CLIP_START_TIME_IN_SECONDS,
  "clip_end_time": CLIP_END_TIME_IN_SECONDS,
  "subject_registry": {
    "subject_i": {
      "name": fill with short identity if name is unknown,
      "appearance": list of appearance descriptions,
      "identity": list of identity descriptions,
      "first_seen": timestamp},...},
  "clip_description": "A smooth, detailed, objective, and chronologically ordered natural language narration of the video clip content, including all significant subjects, objects, actions, interactions, and scene changes"
}"""


def _frame_times(t_start: float, t_end: float, fps: float) -> List[float]:
    times = []
    step = 1.0 / fps
    i = 0
    while True:
        t = t_start + i * step
        if t > t_end + 1e-9:
            break
        times.append(round(min(t, t_end), 3))
        i += 1
    return times


def _to_pil(frame: np.ndarray):
    from PIL import Image

    return Image.fromarray(frame)


class RealEmbedder:
    """Text embedding via sentence-transformers."""

    def __init__(self, model_id: str, device: str, max_batch: int):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise AdapterConfigError(f"embed role needs sentence-transformers: {exc}")
        self.model = SentenceTransformer(model_id, device=device)
        self.max_batch = max_batch

    def embed(self, texts: List[str]) -> List[List[float]]:
        vectors = self.model.encode(list(texts), batch_size=self.max_batch,
                                    convert_to_numpy=True, normalize_embeddings=True)
        return np.asarray(vectors, dtype=np.float32).tolist()


class RealFrameSim:
    """Image-text similarity via a dual-encoder (CLIP-style) model."""

    def __init__(self, model_id: str, device: str, decoder: FrameDecoder, max_batch: int):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise AdapterConfigError(f"frame_sim role needs sentence-transformers: {exc}")
        self.model = SentenceTransformer(model_id, device=device)
        self.decoder = decoder
        self.max_batch = max_batch

    def frame_sim(self, video_ref: str, frame_times: List[float], query: str
                  ) -> List[Dict[str, Any]]:
        images = [_to_pil(self.decoder.get(video_ref, t)) for t in frame_times]
        image_vecs = self.model.encode(images, batch_size=self.max_batch,
                                       convert_to_numpy=True, normalize_embeddings=True)
        text_vec = self.model.encode([query], convert_to_numpy=True,
                                     normalize_embeddings=True)[0]
        scores = image_vecs @ text_vec
        return [{"frame_time": round(float(t), 3), "score": float(s)}
                for t, s in zip(frame_times, scores)]


class RealDetector:
    """Open-vocabulary detection via a zero-shot object-detection pipeline."""

    def __init__(self, model_id: str, device: str, decoder: FrameDecoder):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise AdapterConfigError(f"detect role needs transformers: {exc}")
        self.pipe = pipeline("zero-shot-object-detection", model=model_id,
                             device=device)
        self.decoder = decoder

    def detect(self, video_ref: str, frame_times: List[float], query: str
               ) -> List[Dict[str, Any]]:
        labels = [part.strip() for part in query.split(",") if part.strip()] or [query]
        out = []
        for t in frame_times:
            image = _to_pil(self.decoder.get(video_ref, t))
            for hit in self.pipe(image, candidate_labels=labels):
                box = hit["box"]
                out.append({
                    "frame_time": round(float(t), 3),
                    "box": [float(box["xmin"]), float(box["ymin"]),
                            float(box["xmax"]), float(box["ymax"])],
                    "label": str(hit["label"]),
                    "confidence": float(hit["score"]),
                })
        return out


class RealCaptioner:
    """Clip captioning via an image-text-to-text (VLM) pipeline."""

    def __init__(self, model_id: str, device: str, decoder: FrameDecoder):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise AdapterConfigError(f"caption role needs transformers: {exc}")
        self.pipe = pipeline("image-text-to-text", model=model_id, device=device)
        self.decoder = decoder

    def _generate(self, images, system_prompt: str, user_text: str) -> str:
        content = [{"type": "image", "image": img} for img in images]
        content.append({"type": "text", "text": user_text})
        messages = [
            {"role": "system", "content": [{"type": "text", "text": system_prompt}]},
            {"role": "user", "content": content},
        ]
        result = self.pipe(text=messages, max_new_tokens=1024)
        return result[0]["generated_text"][-1]["content"]

    def caption(self, video_ref: str, t_start: float, t_end: float,
                fps: float, max_edge: int) -> str:
        times = _frame_times(t_start, t_end, fps)
        images = [_to_pil(self.decoder.get(video_ref, t)) for t in times]
        user_text = (f"The clip runs from {t_start} to {t_end} seconds "
                     f"({len(images)} frames). Produce the JSON object now.")
        return self._generate(images, CAPTION_PROMPT, user_text)


class RealAnalyzer(RealCaptioner):
    """Frame analysis reuses the VLM pipeline with the caller's question."""

    def analyze(self, video_ref: str, frame_times: List[float], query: str) -> str:
        images = [_to_pil(self.decoder.get(video_ref, t)) for t in frame_times]
        return self._generate(
            images,
            "You analyze video frames and answer the user's question factually.",
            query)


class RealOcr:
    """No bundled OCR runtime: deployments must plug an engine in here."""

    def __init__(self, model_id: str, device: str, decoder: FrameDecoder):
        raise AdapterConfigError(
            f"no bundled runtime for the ocr role (requested {model_id!r}); "
            "run it stubbed or extend RealOcr with your OCR engine")
