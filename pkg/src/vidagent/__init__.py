"""Agentic video question answering over a compiled knowledge base."""

from .config import EngineConfig
from .intervals import TimeRange
from .kb import KnowledgeBase, load_kb, save_kb, top_k_search
from .ingest import ingest_video
from .runtime import AnswerReport, run_episode

__version__ = "0.1.0"

__all__ = [
    "AnswerReport",
    "EngineConfig",
    "KnowledgeBase",
    "TimeRange",
    "__version__",
    "ingest_video",
    "load_kb",
    "run_episode",
    "save_kb",
    "top_k_search",
]
