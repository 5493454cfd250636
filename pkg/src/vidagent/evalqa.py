"""Fixture/benchmark evaluation: accuracy for multiple choice, temporal IoU
and recall-at-threshold for grounding items."""

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .backends import BackendSuite
from .config import EngineConfig
from .intervals import TimeRange, interval_iou
from .kb import KBError, KnowledgeBase, load_kb
from .runtime import Answer, AnswerReport, EpisodeAborted, extract_answer, run_episode

logger = logging.getLogger(__name__)

RECALL_THRESHOLDS = (0.3, 0.5, 0.7)


@dataclass
class EvalItem:
    item_id: str
    video_id: str
    question: str
    options: Optional[List[Tuple[str, str]]] = None  # (letter, text)
    gold_letter: Optional[str] = None
    gold_span: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if (self.gold_letter is None) == (self.gold_span is None):
            raise ValueError(f"item {self.item_id}: exactly one gold kind required")
        if (self.options is not None) != (self.gold_letter is not None):
            raise ValueError(f"item {self.item_id}: options present iff multiple choice")

    @property
    def is_multiple_choice(self) -> bool:
        return self.gold_letter is not None

    def full_question(self) -> str:
        """Options are appended to the question text for the agent."""
        if not self.options:
            return self.question
        rendered = " ".join(f"{letter}) {text}" for letter, text in self.options)
        return f"{self.question}\nOptions: {rendered}"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalItem":
        gold = data["gold"]
        gold_letter = gold_span = None
        if gold.get("type") == "mc":
            gold_letter = str(gold["letter"])
        elif gold.get("type") == "span":
            gold_span = (float(gold["start"]), float(gold["end"]))
        else:
            raise ValueError(f"unknown gold type {gold.get('type')!r}")
        options = [(str(o[0]), str(o[1])) for o in data["options"]] if "options" in data else None
        return cls(item_id=str(data["id"]), video_id=str(data["video_id"]),
                   question=str(data["question"]), options=options,
                   gold_letter=gold_letter, gold_span=gold_span)


def load_items(path: str) -> List[EvalItem]:
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                items.append(EvalItem.from_dict(json.loads(line)))
    return items


def _effective_answer(answer: Answer) -> Optional[Answer]:
    """Forced answers are re-parsed; anything else passes through."""
    if answer.kind == "forced":
        return extract_answer(answer.text or "")
    return answer


def score_item(item: EvalItem, report: AnswerReport) -> Dict[str, Any]:
    answer = _effective_answer(report.answer)
    record: Dict[str, Any] = {
        "id": item.item_id,
        "video_id": item.video_id,
        "kind": "mc" if item.is_multiple_choice else "span",
        "forced": report.forced,
        "iterations": report.iterations_used,
        "answer": report.answer.to_dict(),
        "error": None,
    }
    if item.is_multiple_choice:
        predicted = answer.letter if answer is not None and answer.kind == "mc" else None
        record["predicted"] = predicted
        record["gold"] = item.gold_letter
        record["correct"] = predicted == item.gold_letter
        record["iou"] = None
    else:
        iou = 0.0
        predicted = None
        if answer is not None and answer.kind == "span":
            predicted = list(answer.span)
            iou = interval_iou(TimeRange(*answer.span), TimeRange(*item.gold_span))
        record["predicted"] = predicted
        record["gold"] = list(item.gold_span)
        record["iou"] = iou
        record["correct"] = iou >= 0.5
    return record


@dataclass
class EvalSummary:
    accuracy: Optional[float]
    mean_iou: Optional[float]
    recall_at: Dict[str, float]
    mc_total: int
    span_total: int
    errors: int
    total: int
    per_item: List[Dict[str, Any]] = field(default_factory=list)
    cost: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "mean_iou": self.mean_iou,
            "recall_at": self.recall_at,
            "mc_total": self.mc_total,
            "span_total": self.span_total,
            "errors": self.errors,
            "total": self.total,
            "cost": self.cost,
            "per_item": self.per_item,
        }

    def to_json_bytes(self) -> bytes:
        return (json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def summarize(records: List[Dict[str, Any]]) -> EvalSummary:
    """Reduce per-item records; errored items stay out of every denominator."""
    ok = [r for r in records if r["error"] is None]
    errors = len(records) - len(ok)
    mc = [r for r in ok if r["kind"] == "mc"]
    spans = [r for r in ok if r["kind"] == "span"]
    accuracy = sum(r["correct"] for r in mc) / len(mc) if mc else None
    mean_iou = sum(r["iou"] for r in spans) / len(spans) if spans else None
    recall_at = {}
    for theta in RECALL_THRESHOLDS:
        recall_at[f"{theta}"] = (sum(r["iou"] >= theta for r in spans) / len(spans)
                                 if spans else 0.0)
    return EvalSummary(accuracy=accuracy, mean_iou=mean_iou, recall_at=recall_at,
                       mc_total=len(mc), span_total=len(spans), errors=errors,
                       total=len(records), per_item=records)


def run_eval(items: List[EvalItem], kb_root: str,
             suite_factory: Callable[[EvalItem], BackendSuite],
             config: EngineConfig, jobs: int = 4,
             trace_dir: Optional[str] = None) -> EvalSummary:
    """Run every item's episode (optionally concurrent) and reduce.

    The per-video database cost is counted once per knowledge base in the
    aggregate, however many questions hit it.
    """
    kb_cache: Dict[str, KnowledgeBase] = {}

    def kb_for(video_id: str) -> KnowledgeBase:
        if video_id not in kb_cache:
            kb_cache[video_id] = load_kb(os.path.join(kb_root, video_id))
        return kb_cache[video_id]

    # load serially so the cache is safe to read concurrently afterwards
    load_errors: Dict[str, str] = {}
    for item in items:
        if item.video_id in kb_cache or item.video_id in load_errors:
            continue
        try:
            kb_for(item.video_id)
        except (KBError, OSError) as exc:
            load_errors[item.video_id] = str(exc)

    episode_totals: List[Dict[str, float]] = []

    def run_one(item: EvalItem) -> Dict[str, Any]:
        if item.video_id in load_errors:
            return {"id": item.item_id, "video_id": item.video_id,
                    "kind": "mc" if item.is_multiple_choice else "span",
                    "forced": False, "iterations": 0, "answer": None,
                    "predicted": None, "gold": item.gold_letter or list(item.gold_span),
                    "iou": None, "correct": False,
                    "error": f"missing KB: {load_errors[item.video_id]}"}
        kb = kb_for(item.video_id)
        suite = suite_factory(item)
        trace_path = (os.path.join(trace_dir, f"{item.item_id}.trace.jsonl")
                      if trace_dir else None)
        try:
            report = run_episode(kb, item.full_question(), suite, config,
                                 trace_path=trace_path)
        except EpisodeAborted as exc:
            return {"id": item.item_id, "video_id": item.video_id,
                    "kind": "mc" if item.is_multiple_choice else "span",
                    "forced": False, "iterations": 0, "answer": None,
                    "predicted": None, "gold": item.gold_letter or list(item.gold_span),
                    "iou": None, "correct": False, "error": str(exc)}
        total = report.ledger.total()
        episode_totals.append({
            "video_id": item.video_id,
            "tokens_in": total.llm_tokens_in + total.tool_tokens_in,
            "tokens_out": total.llm_tokens_out + total.tool_tokens_out,
            "seconds": total.llm_seconds + total.tool_seconds,
        })
        return score_item(item, report)

    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_one, items))
    else:
        records = [run_one(item) for item in items]

    records.sort(key=lambda r: r["id"])  # deterministic reduction order
    summary = summarize(records)

    db_by_video: Dict[str, Dict[str, float]] = {}
    for video_id, kb in sorted(kb_cache.items()):
        build = kb.manifest.build_cost
        db_by_video[video_id] = {"tokens_in": build.tokens_in,
                                 "tokens_out": build.tokens_out,
                                 "seconds": build.seconds}
    summary.cost = {
        "db_by_video": db_by_video,  # amortized: once per KB, not per question
        "episodes": {
            "tokens_in": sum(e["tokens_in"] for e in episode_totals),
            "tokens_out": sum(e["tokens_out"] for e in episode_totals),
            "seconds": sum(e["seconds"] for e in episode_totals),
        },
    }
    return summary


def write_results(summary: EvalSummary, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "items.jsonl"), "w", encoding="utf-8") as fh:
        for record in summary.per_item:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    with open(os.path.join(out_dir, "summary.json"), "wb") as fh:
        fh.write(summary.to_json_bytes())
