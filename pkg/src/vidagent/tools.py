"""Tool registry: phase-partitioned callable tools with published schemas.

Each tool is registered with a spec (name, verbatim description, typed
parameters, phase) and a function fn(ctx, **args) -> ToolResult. The
registry publishes function-calling schemas per phase and validates
arguments before dispatch; validation failures raise ToolArgumentError,
which the runtime surfaces as a survivable protocol violation.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .backends import BackendSuite
from .config import EngineConfig
from .kb import KnowledgeBase


class ToolArgumentError(Exception):
    """Malformed or missing tool arguments."""


@dataclass(frozen=True)
class ToolParam:
    name: str
    kind: str            # "string" | "number" | "integer" | "integer_array" | "range_array"
    required: bool = True
    description: str = ""


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    params: Tuple[ToolParam, ...]
    phase: str  # "retrieve" | "perceive"

    def __post_init__(self):
        if self.phase not in ("retrieve", "perceive"):
            raise ValueError(f"tool {self.name} has unknown phase {self.phase!r}")


@dataclass
class ToolCost:
    seconds: float = 0.0
    tokens_in: int = 0
    tokens_out: int = 0
    calls: int = 0  # backend calls made by this invocation

    def add_usage(self, usage) -> None:
        self.seconds += usage.seconds
        self.tokens_in += usage.tokens_in
        self.tokens_out += usage.tokens_out
        self.calls += 1


@dataclass
class ToolResult:
    tool: str
    payload: str               # rendered for the conversation, never empty
    structured: Any            # machine-readable form kept in the trace
    cost: ToolCost = field(default_factory=ToolCost)
    error: bool = False

    def __post_init__(self):
        if not self.payload:
            raise ValueError("tool payload must be non-empty")


@dataclass
class ToolContext:
    kb: KnowledgeBase
    suite: BackendSuite
    config: EngineConfig


_JSON_TYPES = {
    "string": {"type": "string"},
    "number": {"type": "number"},
    "integer": {"type": "integer"},
    "integer_array": {"type": "array", "items": {"type": "integer"}},
    "range_array": {"type": "array",
                    "items": {"type": "array", "items": {"type": "number"},
                              "minItems": 2, "maxItems": 2}},
}


def _coerce(param: ToolParam, value: Any) -> Any:
    try:
        if param.kind == "string":
            if not isinstance(value, str):
                raise ToolArgumentError(f"{param.name} must be a string")
            return value
        if param.kind == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                raise ToolArgumentError(f"{param.name} must be a number")
            return float(value)
        if param.kind == "integer":
            if isinstance(value, bool):
                raise ToolArgumentError(f"{param.name} must be an integer")
            return int(value)
        if param.kind == "integer_array":
            if not isinstance(value, list):
                raise ToolArgumentError(f"{param.name} must be an array of integers")
            return [int(v) for v in value]
        if param.kind == "range_array":
            if not isinstance(value, list) or not value:
                raise ToolArgumentError(f"{param.name} must be a non-empty array of [start, end]")
            out = []
            for pair in value:
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise ToolArgumentError(f"{param.name} entries must be [start, end] pairs")
                out.append([float(pair[0]), float(pair[1])])
            return out
    except (TypeError, ValueError) as exc:
        raise ToolArgumentError(f"bad value for {param.name}: {exc}") from exc
    raise ToolArgumentError(f"unknown parameter kind {param.kind}")


class ToolRegistry:
    def __init__(self):
        self._specs: Dict[str, ToolSpec] = {}
        self._fns: Dict[str, Callable[..., ToolResult]] = {}

    def register(self, spec: ToolSpec, fn: Callable[..., ToolResult]) -> None:
        if spec.name in self._specs:
            raise ValueError(f"duplicate tool name {spec.name!r}")
        self._specs[spec.name] = spec
        self._fns[spec.name] = fn

    def names(self) -> List[str]:
        return list(self._specs.keys())

    def phase_of(self, name: str) -> Optional[str]:
        spec = self._specs.get(name)
        return spec.phase if spec else None

    def specs_for_phase(self, phase: str) -> List[ToolSpec]:
        return [s for s in self._specs.values() if s.phase == phase]

    def names_for_phase(self, phase: str) -> List[str]:
        return [s.name for s in self.specs_for_phase(phase)]

    def schemas_for_phase(self, phase: str) -> List[Dict[str, Any]]:
        """Function-calling schemas published to the chat backend."""
        out = []
        for spec in self.specs_for_phase(phase):
            properties = {}
            required = []
            for p in spec.params:
                prop = dict(_JSON_TYPES[p.kind])
                if p.description:
                    prop["description"] = p.description
                properties[p.name] = prop
                if p.required:
                    required.append(p.name)
            out.append({
                "type": "function",
                "function": {
                    "name": spec.name,
                    "description": spec.description,
                    "parameters": {"type": "object", "properties": properties,
                                   "required": required},
                },
            })
        return out

    def validate_args(self, name: str, args: Dict[str, Any]) -> Dict[str, Any]:
        spec = self._specs.get(name)
        if spec is None:
            raise ToolArgumentError(f"unknown tool {name!r}")
        known = {p.name: p for p in spec.params}
        unexpected = set(args) - set(known)
        if unexpected:
            raise ToolArgumentError(f"unexpected arguments {sorted(unexpected)} for {name}")
        out: Dict[str, Any] = {}
        for p in spec.params:
            if p.name in args:
                out[p.name] = _coerce(p, args[p.name])
            elif p.required:
                raise ToolArgumentError(f"missing required argument {p.name!r} for {name}")
        return out

    def execute(self, name: str, ctx: ToolContext, args: Dict[str, Any]) -> ToolResult:
        """Validate and run; backend failures come back as error observations."""
        clean = self.validate_args(name, args)
        return self._fns[name](ctx, **clean)
