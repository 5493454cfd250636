#!/usr/bin/env python3
"""Regenerate the committed synthetic-video fixtures.

Produces, deterministically:
  fixtures/video/        mock backend inputs (captions, extraction script,
                         perception annotation stores, episode chat scripts)
  fixtures/kbs/          the golden knowledge base built from them
  fixtures/qa_items.jsonl  ten eval items the scripts answer correctly
  fixtures/wire/cases.json golden request/response pairs for the perception
                         wire contract (mock and adapter must both match)

Run from the repo root: python3 scripts/make_fixtures.py
"""

import json
import os
import shutil
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from vidagent.config import EngineConfig
from vidagent.ingest import ingest_video
from vidagent.mocks import build_mock_suite

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
FIXTURES = os.path.join(ROOT, "fixtures")
VIDEO_DIR = os.path.join(FIXTURES, "video")
KB_ROOT = os.path.join(FIXTURES, "kbs")
WIRE_DIR = os.path.join(FIXTURES, "wire")

VIDEO_ID = "fixture_video"
VIDEO_REF = "fixture://video"
DURATION = 30.0


def caption_doc(start, end, description, subjects):
    return json.dumps({
        "clip_start_time": start,
        "clip_end_time": end,
        "subject_registry": subjects,
        "clip_description": description,
    })


CAPTIONS = [
    caption_doc(0, 5,
                "A man in a red shirt (Subject_100) enters a bright room carrying a "
                "small book and walks toward the center.",
                {"subject_1": {"name": "man in red shirt",
                               "appearance": ["red shirt", "dark trousers"],
                               "identity": ["adult male"], "first_seen": 0.5}}),
    caption_doc(5, 10,
                "The man in the red shirt (Subject_100) hands the book to a woman in "
                "a blue dress (Subject_101); she nods and smiles.",
                {"subject_1": {"name": "man in red shirt", "appearance": ["red shirt"],
                               "identity": ["adult male"], "first_seen": 5.0},
                 "subject_2": {"name": "woman in blue dress",
                               "appearance": ["blue dress"],
                               "identity": ["adult female"], "first_seen": 5.5}}),
    caption_doc(10, 15,
                "Three people stand near a large sign while the man in the red shirt "
                "jumps over a low bench.",
                {"subject_1": {"name": "man in red shirt", "appearance": ["red shirt"],
                               "identity": ["adult male"], "first_seen": 10.0}}),
    caption_doc(15, 20,
                "The woman in the blue dress (Subject_101) sits on a chair and reads "
                "the book quietly.",
                {"subject_1": {"name": "woman in blue dress",
                               "appearance": ["blue dress"],
                               "identity": ["adult female"], "first_seen": 15.0}}),
    caption_doc(20, 25,
                "A group of people begins dancing together in a loose circle around "
                "the room.",
                {}),
    caption_doc(25, 30,
                "The man in the red shirt (Subject_100) waves and leaves the room "
                "through the side door.",
                {"subject_1": {"name": "man in red shirt", "appearance": ["red shirt"],
                               "identity": ["adult male"], "first_seen": 25.5}}),
]

EXTRACTION_REPLY = json.dumps({
    "video_analysis": [
        {"subject_id": "Subject_100", "subject_name": "Man in red shirt",
         "appearance_timeline": [["0", "15"], ["25", "30"]],
         "attributes": ["red shirt", "carries a book"],
         "actions_events": [
             {"action": "enters the room", "timestamp": ["0", "2"]},
             {"action": "jumps over a low bench", "timestamp": ["11", "12.5"]},
             {"action": "waves and leaves", "timestamp": ["27", "30"]}]},
        {"subject_id": "Subject_101", "subject_name": "Woman in blue dress",
         "appearance_timeline": [["5", "20"]],
         "attributes": ["blue dress"],
         "actions_events": [
             {"action": "reads the book", "timestamp": ["15", "20"]}]},
        {"subject_id": None, "subject_name": "man in a red shirt",
         "appearance_timeline": [["10", "15"]],
         "attributes": ["athletic"],
         "actions_events": []},
    ],
    "interactions": [
        {"subjects_involved": ["Subject_100", "Subject_101"],
         "interaction_description": "Subject_100 gives book to Subject_101",
         "timestamp": ["6", "7"]},
        {"subjects_involved": ["Subject_101", "Subject_100"],
         "interaction_description": "Subject_101 thanks Subject_100",
         "timestamp": ["7", "8"]},
    ],
})


def detections():
    out = []
    # red-shirt evidence for the opening clip
    for t in (0.0, 0.5, 1.0, 1.5, 2.0):
        out.append({"frame_time": t, "box": [310.0, 120.0, 420.0, 430.0],
                    "label": "man in red shirt", "confidence": 0.92})
    # three well-separated people near the sign (counting item)
    for t in (10.0, 10.5, 11.0, 11.5, 12.0):
        out.append({"frame_time": t, "box": [40.0, 100.0, 140.0, 400.0],
                    "label": "person", "confidence": 0.9})
        out.append({"frame_time": t, "box": [300.0, 110.0, 400.0, 410.0],
                    "label": "person", "confidence": 0.85})
        out.append({"frame_time": t, "box": [560.0, 105.0, 660.0, 405.0],
                    "label": "person", "confidence": 0.8})
    # the book in the woman's hands while sitting
    for t in (15.0, 15.5, 16.0):
        out.append({"frame_time": t, "box": [200.0, 300.0, 260.0, 360.0],
                    "label": "book", "confidence": 0.88})
    return out


def ocr_items():
    return [{"frame_time": t, "text": "SALE 50%"} for t in (10.0, 10.5, 11.0)]


def framesim_scores():
    # the boundary-detection worked example: tau = 0.8 * 0.95 = 0.76
    scores = [0.1, 0.2, 0.9, 0.95, 0.85, 0.2]
    return [{"frame_time": 10.0 + 0.5 * i, "score": s} for i, s in enumerate(scores)]


def tool(name, **arguments):
    return {"text": "", "tool_calls": [{"name": name, "arguments": arguments}]}


def say(text):
    return {"text": text}


EPISODES = {
    "q01": {"replies": [
        tool("clip_retrieve_tool", q_text="man shirt enters room", k=3),
        say("Anchors found at the start of the video. [STAGE_SWITCH: perceive]"),
        tool("object_detect_tool", t_start=0.0, t_end=2.0, q_obj="man in shirt"),
        say("Visual evidence confirms the shirt color. [STAGE_SWITCH: review]"),
        say("The detections label a red shirt. **Answer:**B"),
    ]},
    "q02": {"replies": [
        tool("clip_retrieve_tool", q_text="people stand near sign"),
        say("[STAGE_SWITCH: perceive]"),
        tool("object_detect_tool", t_start=10.0, t_end=12.0, q_obj="person"),
        say("[STAGE_SWITCH: review]"),
        say("Every sampled frame shows three people. **Answer:**B"),
    ]},
    "q03": {"replies": [
        tool("clip_retrieve_tool", q_text="large sign text"),
        say("[STAGE_SWITCH: perceive]"),
        tool("text_extract_tool", t_start=10.0, t_end=11.0),
        say("[STAGE_SWITCH: review]"),
        say("The recognized text is conclusive. **Answer:**C"),
    ]},
    "q04": {"replies": [
        tool("clip_retrieve_tool", q_text="man jumps over bench"),
        say("[STAGE_SWITCH: perceive]"),
        tool("boundary_detect_tool", t_start=10.0, t_end=12.5,
             q_event="man jumps over bench"),
        say("[STAGE_SWITCH: review]"),
        say("The boundary is confirmed. **Answer:**[11.0s,12.5s]"),
    ]},
    "q05": {"replies": [
        tool("graph_retrieve_tool", entity_query="man in red shirt",
             second_entity="woman in blue dress"),
        say("The graph shows a giving interaction around 6s. [STAGE_SWITCH: perceive]"),
        tool("frame_analysis_tool", ranges=[[5.0, 8.0]],
             q_specific="what object is exchanged between the man and the woman"),
        say("[STAGE_SWITCH: review]"),
        say("A book changes hands. **Answer:**B"),
    ], "analysis": ["A small book is handed from the man to the woman."]},
    "q06": {"replies": [
        tool("global_explore_tool", q_text="main activities near the end"),
        say("People meet, exchange a book, and later dance in a circle."),
        say("The video ends with a group dancing together.\nRANGE: 20 25"),
        say("[STAGE_SWITCH: perceive]"),
        tool("frame_analysis_tool", ranges=[[20.0, 25.0]],
             q_specific="what are the people doing"),
        say("[STAGE_SWITCH: review]"),
        say("The ending is confirmed visually. **Answer:**A"),
    ], "analysis": ["A group of people dances in a circle."]},
    "q07": {"replies": [
        tool("clip_retrieve_tool", q_text="woman blue dress book"),
        tool("clip_merge_tool", clip_ids=[1, 3]),
        say("[STAGE_SWITCH: perceive]"),
        tool("text_extract_tool", t_start=15.0, t_end=17.0),
        say("[STAGE_SWITCH: review]"),
        say("No text evidence yet; I need to look again. [STAGE_SWITCH: perceive]"),
        tool("frame_analysis_tool", ranges=[[15.0, 20.0]],
             q_specific="what is the woman doing"),
        say("[STAGE_SWITCH: review]"),
        say("She reads the book. **Answer:**C"),
    ], "analysis": ["The woman sits and reads the book."]},
    "q08": {"replies": [
        tool("clip_retrieve_tool", q_text="woman sits chair"),
        say("I have the anchors I need."),
        tool("object_detect_tool", t_start=15.0, t_end=16.0, q_obj="book"),
        say("Evidence gathered."),
        say("A book is detected in her hands. **Answer:**D"),
    ]},
    "q09": {"replies": [
        tool("object_detect_tool", t_start=25.0, t_end=27.0, q_obj="door"),
        tool("clip_retrieve_tool", q_text="man leaves room door"),
        say("[STAGE_SWITCH: perceive]"),
        tool("frame_analysis_tool", ranges=[[25.0, 30.0]],
             q_specific="which exit does the man use"),
        say("[STAGE_SWITCH: review]"),
        say("He uses the side door. **Answer:**A"),
    ], "analysis": ["The man exits through the side door."]},
    "q10": {"replies": (
        [tool("clip_retrieve_tool", q_text="man waves")] * 10 +
        [say("Based on the captions, the wave happens near 27 seconds. **Answer:**C")]
    )},
}

QA_ITEMS = [
    {"id": "q01", "video_id": VIDEO_ID,
     "question": "What color shirt does the man who enters first wear?",
     "options": [["A", "blue"], ["B", "red"], ["C", "green"], ["D", "black"]],
     "gold": {"type": "mc", "letter": "B"}},
    {"id": "q02", "video_id": VIDEO_ID,
     "question": "How many people are visible near the sign between 10s and 12s?",
     "options": [["A", "2"], ["B", "3"], ["C", "4"], ["D", "5"]],
     "gold": {"type": "mc", "letter": "B"}},
    {"id": "q03", "video_id": VIDEO_ID,
     "question": "What text appears on the large sign?",
     "options": [["A", "OPEN"], ["B", "EXIT"], ["C", "SALE 50%"], ["D", "CLOSED"]],
     "gold": {"type": "mc", "letter": "C"}},
    {"id": "q04", "video_id": VIDEO_ID,
     "question": "When does the man jump over the bench?",
     "gold": {"type": "span", "start": 11.0, "end": 12.5}},
    {"id": "q05", "video_id": VIDEO_ID,
     "question": "What does the man in red give to the woman in blue?",
     "options": [["A", "a flower"], ["B", "a book"], ["C", "a phone"], ["D", "a hat"]],
     "gold": {"type": "mc", "letter": "B"}},
    {"id": "q06", "video_id": VIDEO_ID,
     "question": "Which activity happens near the end of the video?",
     "options": [["A", "group dancing"], ["B", "cooking"], ["C", "swimming"],
                 ["D", "cycling"]],
     "gold": {"type": "mc", "letter": "A"}},
    {"id": "q07", "video_id": VIDEO_ID,
     "question": "What does the woman in the blue dress do after receiving the book?",
     "options": [["A", "dances"], ["B", "leaves"], ["C", "reads it"], ["D", "drops it"]],
     "gold": {"type": "mc", "letter": "C"}},
    {"id": "q08", "video_id": VIDEO_ID,
     "question": "Which object does the woman hold while sitting?",
     "options": [["A", "a phone"], ["B", "a cup"], ["C", "a hat"], ["D", "a book"]],
     "gold": {"type": "mc", "letter": "D"}},
    {"id": "q09", "video_id": VIDEO_ID,
     "question": "Through which exit does the man leave?",
     "options": [["A", "the side door"], ["B", "a window"], ["C", "the main gate"],
                 ["D", "the stairs"]],
     "gold": {"type": "mc", "letter": "A"}},
    {"id": "q10", "video_id": VIDEO_ID,
     "question": "Around what time does the man wave?",
     "options": [["A", "5 seconds"], ["B", "15 seconds"], ["C", "27 seconds"],
                 ["D", "2 seconds"]],
     "gold": {"type": "mc", "letter": "C"}},
]


def dump_json(path, data, indent=2):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=indent)
        fh.write("\n")


def dump_jsonl(path, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def write_video_fixture():
    dump_json(os.path.join(VIDEO_DIR, "meta.json"),
              {"video_id": VIDEO_ID, "video_ref": VIDEO_REF, "duration": DURATION,
               "clip_len": 5.0})
    dump_json(os.path.join(VIDEO_DIR, "captions.json"), CAPTIONS)
    dump_json(os.path.join(VIDEO_DIR, "chat_ingest.json"),
              {"replies": [{"text": EXTRACTION_REPLY}], "on_exhausted": "fail"})
    dump_jsonl(os.path.join(VIDEO_DIR, "detections.jsonl"), detections())
    dump_jsonl(os.path.join(VIDEO_DIR, "ocr.jsonl"), ocr_items())
    dump_jsonl(os.path.join(VIDEO_DIR, "framesim.jsonl"), framesim_scores())
    dump_json(os.path.join(VIDEO_DIR, "analysis.json"), ["(no analysis scripted)"])
    for key, script in EPISODES.items():
        dump_json(os.path.join(VIDEO_DIR, "episodes", f"{key}.json"),
                  {"on_exhausted": "fail", **script})


def build_golden_kb():
    config = EngineConfig()
    suite = build_mock_suite(VIDEO_DIR, config.clip_len)
    out = os.path.join(KB_ROOT, VIDEO_ID)
    if os.path.exists(out):
        shutil.rmtree(out)
    kb = ingest_video(VIDEO_REF, DURATION, suite, config, video_id=VIDEO_ID, out_dir=out)
    print(f"golden KB: clips={kb.manifest.clip_count} nodes={kb.manifest.node_count} "
          f"edges={len(kb.graph.edges)} diagnostics={len(kb.manifest.diagnostics)}")
    return kb


def canonical(obj):
    return json.loads(json.dumps(obj))


def write_wire_golden():
    """Record mock-backend behavior as golden wire request/response pairs."""
    config = EngineConfig()
    suite = build_mock_suite(VIDEO_DIR, config.clip_len)
    cases = []

    reply = suite.captioner.caption(VIDEO_REF, _span(0.0, 5.0), fps=2.0, max_edge=720)
    cases.append({"name": "caption_first_clip", "endpoint": "/caption",
                  "request": {"video_ref": VIDEO_REF, "t_start": 0.0, "t_end": 5.0,
                              "fps": 2.0, "max_edge": 720},
                  "response": {"raw": reply.raw}})

    texts = ["a man in a red shirt", ""]
    vectors = suite.embedder.embed(texts).vectors.tolist()
    cases.append({"name": "embed_two_texts", "endpoint": "/embed",
                  "request": {"texts": texts},
                  "response": {"vectors": vectors}})

    times = [10.0, 10.5]
    dets = suite.detector.detect(VIDEO_REF, times, "person").detections
    cases.append({"name": "detect_people_near_sign", "endpoint": "/detect",
                  "request": {"video_ref": VIDEO_REF, "frame_times": times,
                              "query": "person"},
                  "response": {"detections": [
                      {"frame_time": d.frame_time, "box": d.box, "label": d.label,
                       "confidence": d.confidence} for d in dets]}})

    items = suite.ocr.ocr(VIDEO_REF, [10.0, 11.0]).items
    cases.append({"name": "ocr_sign", "endpoint": "/ocr",
                  "request": {"video_ref": VIDEO_REF, "frame_times": [10.0, 11.0]},
                  "response": {"items": [{"frame_time": i.frame_time, "text": i.text}
                                         for i in items]}})

    sim_times = [10.0, 10.5, 11.0, 11.5, 12.0, 12.5]
    scores = suite.frame_sim.frame_sim(VIDEO_REF, sim_times,
                                       "man jumps over bench").scores
    cases.append({"name": "frame_sim_jump", "endpoint": "/frame_sim",
                  "request": {"video_ref": VIDEO_REF, "frame_times": sim_times,
                              "query": "man jumps over bench"},
                  "response": {"scores": [{"frame_time": s.frame_time, "score": s.score}
                                          for s in scores]}})

    text = suite.frame_vlm.analyze(VIDEO_REF, [20.0, 20.5], "what are people doing").text
    cases.append({"name": "analyze_dancing", "endpoint": "/analyze",
                  "request": {"video_ref": VIDEO_REF, "frame_times": [20.0, 20.5],
                              "query": "what are people doing"},
                  "response": {"text": text}})

    dump_json(os.path.join(WIRE_DIR, "cases.json"), canonical(cases))
    print(f"wire golden: {len(cases)} cases")


def _span(a, b):
    from vidagent.intervals import TimeRange
    return TimeRange(a, b)


def main():
    write_video_fixture()
    dump_jsonl(os.path.join(FIXTURES, "qa_items.jsonl"), QA_ITEMS)
    build_golden_kb()
    write_wire_golden()
    print("fixtures written under", FIXTURES)


if __name__ == "__main__":
    main()
