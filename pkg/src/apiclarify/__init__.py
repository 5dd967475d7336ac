"""Knowledge-guided interactive query clarification for API recommendation."""

from .engine import ClarificationEngine, EngineConfig, RoundOutput, Session, Variant
from .gateway import BackendConfig, create_backend
from .pathtable import AspectKind, PathRecord, PathRound, PathStore, flatten, load_table
from .prompting import PromptLibrary, UnitKind
from .retrieval import RetrievalConfig, find_examples, rank_records_by_query, score, tokenize

__all__ = [
    "AspectKind",
    "BackendConfig",
    "ClarificationEngine",
    "EngineConfig",
    "PathRecord",
    "PathRound",
    "PathStore",
    "PromptLibrary",
    "RetrievalConfig",
    "RoundOutput",
    "Session",
    "UnitKind",
    "Variant",
    "create_backend",
    "find_examples",
    "flatten",
    "load_table",
    "rank_records_by_query",
    "score",
    "tokenize",
]
