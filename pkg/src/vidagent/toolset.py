"""Default tool registry wiring: the four retrieve and four perceive tools."""

from . import perceive_tools, retrieve_tools
from .prompts import TOOL_DESCRIPTIONS
from .tools import ToolParam, ToolRegistry, ToolSpec


def build_default_registry() -> ToolRegistry:
    registry = ToolRegistry()

    registry.register(ToolSpec(
        name="clip_retrieve_tool",
        description=TOOL_DESCRIPTIONS["clip_retrieve_tool"],
        params=(
            ToolParam("q_text", "string", description="text to search clip captions for"),
            ToolParam("k", "integer", required=False,
                      description="number of clips to return (default 16)"),
        ),
        phase="retrieve",
    ), retrieve_tools.clip_retrieve)

    registry.register(ToolSpec(
        name="clip_merge_tool",
        description=TOOL_DESCRIPTIONS["clip_merge_tool"],
        params=(
            ToolParam("clip_ids", "integer_array",
                      description="clip ids from earlier clip_retrieve_tool output"),
        ),
        phase="retrieve",
    ), retrieve_tools.clip_merge)

    registry.register(ToolSpec(
        name="global_explore_tool",
        description=TOOL_DESCRIPTIONS["global_explore_tool"],
        params=(
            ToolParam("q_text", "string", description="the question or topic to focus on"),
        ),
        phase="retrieve",
    ), retrieve_tools.global_explore)

    registry.register(ToolSpec(
        name="graph_retrieve_tool",
        description=TOOL_DESCRIPTIONS["graph_retrieve_tool"],
        params=(
            ToolParam("entity_query", "string", description="entity or event to look up"),
            ToolParam("second_entity", "string", required=False,
                      description="optional second entity for relationship/path queries"),
        ),
        phase="retrieve",
    ), retrieve_tools.graph_retrieve)

    registry.register(ToolSpec(
        name="object_detect_tool",
        description=TOOL_DESCRIPTIONS["object_detect_tool"],
        params=(
            ToolParam("t_start", "number", description="range start, seconds"),
            ToolParam("t_end", "number", description="range end, seconds"),
            ToolParam("q_obj", "string", description="text description of objects to detect"),
        ),
        phase="perceive",
    ), perceive_tools.object_detect)

    registry.register(ToolSpec(
        name="text_extract_tool",
        description=TOOL_DESCRIPTIONS["text_extract_tool"],
        params=(
            ToolParam("t_start", "number", description="range start, seconds"),
            ToolParam("t_end", "number", description="range end, seconds"),
        ),
        phase="perceive",
    ), perceive_tools.text_extract)

    registry.register(ToolSpec(
        name="boundary_detect_tool",
        description=TOOL_DESCRIPTIONS["boundary_detect_tool"],
        params=(
            ToolParam("t_start", "number", description="range start, seconds"),
            ToolParam("t_end", "number", description="range end, seconds"),
            ToolParam("q_event", "string", description="event description to localize"),
        ),
        phase="perceive",
    ), perceive_tools.boundary_detect)

    registry.register(ToolSpec(
        name="frame_analysis_tool",
        description=TOOL_DESCRIPTIONS["frame_analysis_tool"],
        params=(
            ToolParam("ranges", "range_array",
                      description="list of [start, end] second pairs to analyze"),
            ToolParam("q_specific", "string", description="the specific question to answer"),
        ),
        phase="perceive",
    ), perceive_tools.frame_analysis)

    return registry
