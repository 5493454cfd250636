"""Phase-constrained agent loop: Think -> Act -> Observe with
Retrieve -> Perceive -> Review transitions.

One episode is a strictly sequential state machine over an immutable
knowledge base. The review phase is binary: a reply either carries the
answer marker (terminate) or the episode re-perceives; attempted tool calls
and illegal switch tokens there are logged as violations but still
re-perceive, which keeps every observed phase sequence inside
retrieve+ perceive+ (review perceive+)* review?.

Trace events never read the host clock: their wall field accumulates
backend-reported seconds, so scripted episodes replay byte-identically.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from .backends import BackendError, BackendSuite, ChatReply, ChatRequest, ToolCall
from .config import EngineConfig
from .kb import KnowledgeBase
from .prompts import FORCED_ANSWER_PROMPT, compose_system_prompt
from .tools import ToolArgumentError, ToolContext, ToolRegistry, ToolResult
from .toolset import build_default_registry
from .util import content_digest, truncate_payload

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    RETRIEVE = "retrieve"
    PERCEIVE = "perceive"
    REVIEW = "review"


LEGAL_TRANSITIONS = {
    (Phase.RETRIEVE, Phase.PERCEIVE),
    (Phase.PERCEIVE, Phase.REVIEW),
    (Phase.REVIEW, Phase.PERCEIVE),
}

NEXT_PHASE = {
    Phase.RETRIEVE: Phase.PERCEIVE,
    Phase.PERCEIVE: Phase.REVIEW,
    Phase.REVIEW: Phase.PERCEIVE,
}

SWITCH_TOKEN = re.compile(r"\[STAGE_SWITCH:\s*(retrieve|perceive|review)\s*\]", re.IGNORECASE)
ANSWER_MARKER = re.compile(r"\*\*Answer:\*\*")
_MC_PATTERN = re.compile(r"\s*([A-E])(?![A-Za-z0-9])")
_SPAN_PATTERN = re.compile(
    r"\s*\[\s*([0-9]+(?:\.[0-9]+)?)s\s*,\s*([0-9]+(?:\.[0-9]+)?)s\s*\]")


# ---------------------------------------------------------------------------
# Answers
# ---------------------------------------------------------------------------


@dataclass
class Answer:
    """Exactly one variant: 'mc' (letter), 'span' (a, b), 'free' (text),
    or 'forced' (raw fallback text)."""

    kind: str
    letter: Optional[str] = None
    span: Optional[Tuple[float, float]] = None
    text: Optional[str] = None

    def __post_init__(self):
        populated = sum(v is not None for v in (self.letter, self.span, self.text))
        if populated != 1:
            raise ValueError("exactly one answer variant must be set")

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        if self.letter is not None:
            out["letter"] = self.letter
        if self.span is not None:
            out["span"] = list(self.span)
        if self.text is not None:
            out["text"] = self.text
        return out


def extract_answer(text: str) -> Optional[Answer]:
    """Pull the formatted answer out of a reply; None is the no-answer signal.

    After the first **Answer:** marker: a standalone letter A-E is multiple
    choice; [<a>s,<b>s] with a <= b is a time span; otherwise the rest of
    the line is free text.
    """
    marker = ANSWER_MARKER.search(text)
    if marker is None:
        return None
    rest = text[marker.end():]
    m = _MC_PATTERN.match(rest)
    if m:
        return Answer(kind="mc", letter=m.group(1))
    m = _SPAN_PATTERN.match(rest)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if a > b:
            return None
        return Answer(kind="span", span=(a, b))
    line = rest.splitlines()[0].strip() if rest.strip() else ""
    if not line:
        return None
    return Answer(kind="free", text=line)


# ---------------------------------------------------------------------------
# Actions and parsing
# ---------------------------------------------------------------------------


@dataclass
class Action:
    kind: str  # "tool" | "switch" | "output" | "violation"
    tool_name: Optional[str] = None
    tool_args: Optional[Dict[str, Any]] = None
    tool_call_id: str = ""
    extra_calls: List[ToolCall] = field(default_factory=list)
    target: Optional[Phase] = None
    answer: Optional[Answer] = None
    detail: str = ""


def parse_agent_reply(text: str, tool_calls: List[ToolCall], phase: Phase,
                      strict: bool = False) -> Action:
    """Map a chat reply onto the action space.

    Priority: tool calls, then an explicit stage-switch token, then (review
    only) the answer marker, then the lenient no-signal phase advance.
    """
    if tool_calls:
        first = tool_calls[0]
        return Action(kind="tool", tool_name=first.name, tool_args=first.arguments,
                      tool_call_id=first.call_id, extra_calls=list(tool_calls[1:]))
    m = SWITCH_TOKEN.search(text)
    if m:
        target = Phase(m.group(1).lower())
        if (phase, target) in LEGAL_TRANSITIONS:
            return Action(kind="switch", target=target)
        return Action(kind="violation",
                      detail=f"illegal stage switch {phase.value} -> {target.value}")
    if phase is Phase.REVIEW:
        answer = extract_answer(text)
        if answer is not None:
            return Action(kind="output", answer=answer)
    if strict:
        return Action(kind="violation",
                      detail="reply carried neither a tool call nor a stage-switch token")
    return Action(kind="switch", target=NEXT_PHASE[phase])


# ---------------------------------------------------------------------------
# Cost ledger and trace
# ---------------------------------------------------------------------------


@dataclass
class LlmCallCost:
    tokens_in: int
    tokens_out: int
    seconds: float


@dataclass
class ToolCostEntry:
    tool: str
    seconds: float
    tokens_in: int
    tokens_out: int
    backend_calls: int


@dataclass
class CostTotal:
    db_tokens_in: int = 0
    db_tokens_out: int = 0
    db_seconds: float = 0.0
    llm_tokens_in: int = 0
    llm_tokens_out: int = 0
    llm_seconds: float = 0.0
    llm_calls: int = 0
    tool_tokens_in: int = 0
    tool_tokens_out: int = 0
    tool_seconds: float = 0.0
    tool_calls: int = 0


@dataclass
class CostLedger:
    """Episode cost: one-time database part plus reasoning and tool calls."""

    db_tokens_in: int = 0
    db_tokens_out: int = 0
    db_seconds: float = 0.0
    llm_calls: List[LlmCallCost] = field(default_factory=list)
    tool_costs: List[ToolCostEntry] = field(default_factory=list)

    @classmethod
    def for_kb(cls, kb: KnowledgeBase) -> "CostLedger":
        build = kb.manifest.build_cost
        return cls(db_tokens_in=build.tokens_in, db_tokens_out=build.tokens_out,
                   db_seconds=build.seconds)

    def record_llm(self, usage) -> LlmCallCost:
        entry = LlmCallCost(usage.tokens_in, usage.tokens_out, usage.seconds)
        self.llm_calls.append(entry)
        return entry

    def record_tool(self, result: ToolResult) -> ToolCostEntry:
        entry = ToolCostEntry(tool=result.tool, seconds=result.cost.seconds,
                              tokens_in=result.cost.tokens_in,
                              tokens_out=result.cost.tokens_out,
                              backend_calls=result.cost.calls)
        self.tool_costs.append(entry)
        return entry

    def total(self) -> CostTotal:
        total = CostTotal(db_tokens_in=self.db_tokens_in, db_tokens_out=self.db_tokens_out,
                          db_seconds=self.db_seconds)
        for call in self.llm_calls:
            total.llm_tokens_in += call.tokens_in
            total.llm_tokens_out += call.tokens_out
            total.llm_seconds += call.seconds
            total.llm_calls += 1
        for entry in self.tool_costs:
            total.tool_tokens_in += entry.tokens_in
            total.tool_tokens_out += entry.tokens_out
            total.tool_seconds += entry.seconds
            total.tool_calls += 1
        return total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "db": {"tokens_in": self.db_tokens_in, "tokens_out": self.db_tokens_out,
                   "seconds": self.db_seconds},
            "llm_calls": [{"tokens_in": c.tokens_in, "tokens_out": c.tokens_out,
                           "seconds": c.seconds} for c in self.llm_calls],
            "tool_costs": [{"tool": t.tool, "seconds": t.seconds,
                            "tokens_in": t.tokens_in, "tokens_out": t.tokens_out,
                            "backend_calls": t.backend_calls} for t in self.tool_costs],
        }


@dataclass
class TraceEvent:
    iteration: int
    phase: str
    kind: str  # thought | action | observation | switch | violation | answer
    digest: str
    tokens_in: int = 0
    tokens_out: int = 0
    seconds: float = 0.0
    wall_s: float = 0.0  # cumulative backend-reported seconds at this event

    def to_json_line(self) -> str:
        return json.dumps({
            "iteration": self.iteration, "phase": self.phase, "kind": self.kind,
            "digest": self.digest, "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out, "seconds": self.seconds,
            "wall_s": self.wall_s,
        }, separators=(",", ":"))


def trace_to_bytes(trace: List[TraceEvent]) -> bytes:
    return ("\n".join(e.to_json_line() for e in trace) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Episode state
# ---------------------------------------------------------------------------


@dataclass
class AgentState:
    messages: List[Dict[str, Any]]
    phase: Phase
    iteration: int = 0
    observations: List[ToolResult] = field(default_factory=list)
    ledger: CostLedger = field(default_factory=CostLedger)
    trace: List[TraceEvent] = field(default_factory=list)
    terminated: bool = False
    answer: Optional[Answer] = None
    wall_s: float = 0.0


@dataclass
class AnswerReport:
    answer: Answer
    trace: List[TraceEvent]
    iterations_used: int
    ledger: CostLedger
    forced: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "answer": self.answer.to_dict(),
            "forced": self.forced,
            "iterations_used": self.iterations_used,
            "trace": [json.loads(e.to_json_line()) for e in self.trace],
            "ledger": self.ledger.to_dict(),
        }


class EpisodeAborted(Exception):
    """Hard backend failure; distinct from a forced answer."""

    def __init__(self, message: str, state: Optional[AgentState] = None):
        super().__init__(message)
        self.state = state


class EpisodeRunner:
    """Executes one question over a loaded knowledge base."""

    def __init__(self, kb: KnowledgeBase, question: str, suite: BackendSuite,
                 config: EngineConfig, registry: Optional[ToolRegistry] = None):
        self.kb = kb
        self.question = question
        self.suite = suite
        self.config = config
        self.registry = registry or build_default_registry()
        self.ctx = ToolContext(kb=kb, suite=suite, config=config)

    # -- state plumbing ----------------------------------------------------

    def initial_state(self) -> AgentState:
        state = AgentState(messages=[], phase=Phase.RETRIEVE,
                           ledger=CostLedger.for_kb(self.kb))
        state.messages.append({"role": "system", "content": self._system_prompt(state.phase)})
        state.messages.append({"role": "user", "content": self.question})
        return state

    def _system_prompt(self, phase: Phase) -> str:
        return compose_system_prompt(phase.value, self.kb.manifest.duration,
                                     self.registry.names_for_phase(phase.value))

    def _emit(self, state: AgentState, kind: str, content: str,
              tokens_in: int = 0, tokens_out: int = 0, seconds: float = 0.0) -> None:
        state.wall_s += seconds
        state.trace.append(TraceEvent(
            iteration=state.iteration, phase=state.phase.value, kind=kind,
            digest=content_digest(content), tokens_in=tokens_in,
            tokens_out=tokens_out, seconds=seconds, wall_s=state.wall_s))

    def _chat(self, state: AgentState, messages: List[Dict[str, Any]],
              tools: List[Dict[str, Any]]) -> ChatReply:
        try:
            reply = self.suite.chat.chat(ChatRequest(messages=messages, tools=tools))
        except BackendError as exc:
            raise EpisodeAborted(f"chat backend failure: {exc}", state=state) from exc
        state.ledger.record_llm(reply.usage)
        return reply

    @staticmethod
    def _assistant_message(reply: ChatReply) -> Dict[str, Any]:
        message: Dict[str, Any] = {"role": "assistant", "content": reply.text}
        if reply.tool_calls:
            message["tool_calls"] = [
                {"id": tc.call_id, "type": "function",
                 "function": {"name": tc.name,
                              "arguments": json.dumps(tc.arguments, sort_keys=True)}}
                for tc in reply.tool_calls
            ]
        return message

    def _tool_message(self, call_id: str, name: str, content: str) -> Dict[str, Any]:
        return {"role": "tool", "tool_call_id": call_id, "name": name,
                "content": truncate_payload(content, self.config.payload_budget)}

    # -- the step ----------------------------------------------------------

    def step(self, state: AgentState) -> AgentState:
        """One Think/Act/Observe iteration; increments the counter exactly once."""
        if state.terminated:
            raise ValueError("episode already terminated")
        state.messages[0] = {"role": "system", "content": self._system_prompt(state.phase)}
        tools = [] if state.phase is Phase.REVIEW else \
            self.registry.schemas_for_phase(state.phase.value)
        reply = self._chat(state, state.messages, tools)
        self._emit(state, "thought", reply.text or "(tool call only)",
                   tokens_in=reply.usage.tokens_in, tokens_out=reply.usage.tokens_out,
                   seconds=reply.usage.seconds)
        state.messages.append(self._assistant_message(reply))

        action = parse_agent_reply(reply.text, reply.tool_calls, state.phase,
                                   strict=self.config.strict_switch)
        if state.phase is Phase.REVIEW:
            self._apply_review(state, action)
        else:
            self._apply(state, action)
        state.iteration += 1
        return state

    def _apply(self, state: AgentState, action: Action) -> None:
        if action.kind == "tool":
            self._run_tool(state, action)
            for extra in action.extra_calls:
                detail = (f"protocol violation: multiple tool calls in one response; "
                          f"{extra.name} was not executed")
                state.messages.append(self._tool_message(extra.call_id, extra.name, detail))
                self._emit(state, "violation", detail)
        elif action.kind == "switch":
            state.phase = action.target
            self._emit(state, "switch", f"-> {action.target.value}")
        elif action.kind == "violation":
            detail = f"[PROTOCOL VIOLATION] {action.detail}"
            state.messages.append({"role": "user", "content": detail})
            self._emit(state, "violation", action.detail)
        else:  # pragma: no cover - outputs only originate in review
            raise AssertionError(f"unexpected action {action.kind} in {state.phase}")

    def _apply_review(self, state: AgentState, action: Action) -> None:
        """Review is a binary branch: output the answer or go back to perceive."""
        if action.kind == "output":
            state.answer = action.answer
            state.terminated = True
            self._emit(state, "answer", json.dumps(action.answer.to_dict(), sort_keys=True))
            return
        if action.kind == "tool":
            detail = f"tool not available in review phase: {action.tool_name}"
            state.messages.append(self._tool_message(action.tool_call_id,
                                                     action.tool_name or "", detail))
            for extra in action.extra_calls:
                state.messages.append(self._tool_message(extra.call_id, extra.name, detail))
            self._emit(state, "violation", detail)
        elif action.kind == "violation":
            detail = f"[PROTOCOL VIOLATION] {action.detail}"
            state.messages.append({"role": "user", "content": detail})
            self._emit(state, "violation", action.detail)
        state.phase = Phase.PERCEIVE
        self._emit(state, "switch", "-> perceive (re-perception)")

    def _run_tool(self, state: AgentState, action: Action) -> None:
        name = action.tool_name or ""
        registered_phase = self.registry.phase_of(name)
        if registered_phase is None:
            detail = f"unknown tool: {name}"
            state.messages.append(self._tool_message(action.tool_call_id, name, detail))
            self._emit(state, "violation", detail)
            return
        if registered_phase != state.phase.value:
            detail = f"tool not available in {state.phase.value} phase: {name}"
            state.messages.append(self._tool_message(action.tool_call_id, name, detail))
            self._emit(state, "violation", detail)
            return
        self._emit(state, "action",
                   f"{name}({json.dumps(action.tool_args, sort_keys=True)})")
        try:
            result = self.registry.execute(name, self.ctx, action.tool_args or {})
        except ToolArgumentError as exc:
            detail = f"malformed tool arguments for {name}: {exc}"
            state.messages.append(self._tool_message(action.tool_call_id, name, detail))
            self._emit(state, "violation", detail)
            return
        state.observations.append(result)
        entry = state.ledger.record_tool(result)
        state.messages.append(self._tool_message(action.tool_call_id, name, result.payload))
        self._emit(state, "observation", result.payload,
                   tokens_in=entry.tokens_in, tokens_out=entry.tokens_out,
                   seconds=entry.seconds)

    # -- episode -----------------------------------------------------------

    def run(self) -> AnswerReport:
        state = self.initial_state()
        while not state.terminated and state.iteration < self.config.n_max:
            self.step(state)
        forced = False
        if not state.terminated:
            forced = True
            state.messages.append({"role": "user", "content": FORCED_ANSWER_PROMPT})
            reply = self._chat(state, state.messages, [])
            self._emit(state, "thought", reply.text or "(empty forced reply)",
                       tokens_in=reply.usage.tokens_in, tokens_out=reply.usage.tokens_out,
                       seconds=reply.usage.seconds)
            state.answer = Answer(kind="forced", text=reply.text)
            self._emit(state, "answer", json.dumps(state.answer.to_dict(), sort_keys=True))
            state.terminated = True
        assert state.answer is not None
        return AnswerReport(answer=state.answer, trace=state.trace,
                            iterations_used=state.iteration, ledger=state.ledger,
                            forced=forced)


def run_episode(kb: KnowledgeBase, question: str, backends: BackendSuite,
                config: EngineConfig, registry: Optional[ToolRegistry] = None,
                trace_path: Optional[str] = None) -> AnswerReport:
    """Execute Algorithm-style episode flow end to end."""
    runner = EpisodeRunner(kb, question, backends, config, registry=registry)
    report = runner.run()
    if trace_path:
        with open(trace_path, "wb") as fh:
            fh.write(trace_to_bytes(report.trace))
    return report


def review_decision(runner: EpisodeRunner, state: AgentState) -> AgentState:
    """Run one review-phase step (output the answer or fall back to perceive)."""
    if state.phase is not Phase.REVIEW:
        raise ValueError("review_decision requires the review phase")
    return runner.step(state)
