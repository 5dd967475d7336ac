"""Lexical retrieval of clarification path examples.

Ranking happens in two stages over the flattened table: first by
similarity between the live query and each unit's query, keeping the
top fraction; then by similarity between the previous round answer and
each kept unit's option. Up to max_examples units with pairwise distinct
aspects are selected from the final order.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

from .pathtable import AspectKind, PathRecord, PathStore, RetrievalUnit

_TOKEN_RE = re.compile(r"[0-9a-z]+")

#: Retrieval runs either the full two-stage ranking or stops after stage 1.
RETRIEVAL_VARIANTS = ("full", "no_kps")


@dataclass(frozen=True)
class RetrievalConfig:
    """Knobs for the two-stage example retrieval."""

    top_fraction: float = 0.10
    max_examples: int = 5
    variant: str = "full"

    def __post_init__(self):
        if not (0.0 < self.top_fraction <= 1.0):
            raise ValueError(f"top_fraction must be in (0, 1], got {self.top_fraction}")
        if self.max_examples < 1:
            raise ValueError(f"max_examples must be >= 1, got {self.max_examples}")
        if self.variant not in RETRIEVAL_VARIANTS:
            raise ValueError(f"variant must be one of {RETRIEVAL_VARIANTS}, got {self.variant!r}")


@dataclass(frozen=True)
class PathExample:
    """A retrieved unit formatted as a prompt example, with its ranking scores."""

    query: str
    prev_answer: str
    aspect: AspectKind
    stage1_score: float
    stage2_score: float
    source_index: int


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character, dropping empties."""
    return _TOKEN_RE.findall(text.lower())


def score(a: str, b: str) -> float:
    """Cosine similarity of term-frequency vectors over tokenize(a) and tokenize(b).

    Returns 0.0 when either side has no tokens. Symmetric, and exactly 1.0
    for identical non-empty texts: the dot product and squared norms are
    integers, so no rounding enters before the final division.
    """
    ca = Counter(tokenize(a))
    cb = Counter(tokenize(b))
    if not ca or not cb:
        return 0.0
    dot = sum(count * cb[token] for token, count in ca.items())
    if dot == 0:
        return 0.0
    na2 = sum(c * c for c in ca.values())
    nb2 = sum(c * c for c in cb.values())
    return dot / math.sqrt(na2 * nb2)


def stage1_keep_count(top_fraction: float, n_units: int) -> int:
    """Number of units stage 1 keeps: ceil(top_fraction * n), floored at 1.

    The small epsilon compensates for binary-float products like 0.07 * 100
    landing just above the exact value, which would otherwise over-count.
    """
    return max(1, math.ceil(top_fraction * n_units - 1e-9))


def find_examples(
    units: list[RetrievalUnit],
    query: str,
    prev_answer: str,
    cfg: RetrievalConfig | None = None,
) -> list[PathExample]:
    """Select up to max_examples distinct-aspect path examples for a query.

    Stage 1 ranks all units by score(query, unit.query) and keeps the top
    fraction (ties to the smaller source_index). Stage 2 re-ranks the kept
    units by score(prev_answer, unit.option), ties by stage-1 score then
    source_index; with variant "no_kps" stage 2 is skipped and stage-1
    order stands. The final walk takes a unit only if its aspect is not
    yet represented.
    """
    if not units:
        raise ValueError("units must be non-empty")
    cfg = cfg or RetrievalConfig()

    scored = [(score(query, u.query), u) for u in units]
    scored.sort(key=lambda pair: (-pair[0], pair[1].source_index))
    kept = scored[: stage1_keep_count(cfg.top_fraction, len(units))]

    if cfg.variant == "full":
        ranked = [(s1, score(prev_answer, u.option), u) for s1, u in kept]
        ranked.sort(key=lambda t: (-t[1], -t[0], t[2].source_index))
    else:
        ranked = [(s1, 0.0, u) for s1, u in kept]

    examples: list[PathExample] = []
    seen_aspects: set[AspectKind] = set()
    for s1, s2, unit in ranked:
        if unit.aspect in seen_aspects:
            continue
        examples.append(
            PathExample(
                query=unit.query,
                prev_answer=unit.prev_answer,
                aspect=unit.aspect,
                stage1_score=s1,
                stage2_score=s2,
                source_index=unit.source_index,
            )
        )
        seen_aspects.add(unit.aspect)
        if len(examples) >= cfg.max_examples:
            break
    return examples


def rank_records_by_query(store: PathStore, query: str) -> list[tuple[PathRecord, float]]:
    """Rank whole records by query similarity, a diagnostic view of stage 1.

    Descending by score; ties keep record order.
    """
    if not store.records:
        raise ValueError("store must be non-empty")
    scored = [(score(query, rec.query), idx, rec) for idx, rec in enumerate(store.records)]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(rec, s) for s, _idx, rec in scored]
