"""Clarification path table: loading, validation, and flattening.

The table holds one record per (query, api) pair, each record an ordered
list of clarification rounds (aspect, question, selected option). The
canonical on-disk form is JSONL, one record per line; a CSV import with
one row per round is supported for tables exported from spreadsheets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterator


class TableError(Exception):
    """Base error for path table loading."""


class TableParseError(TableError):
    def __init__(self, message: str, *, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TableValidationError(TableError):
    def __init__(self, message: str, *, record_index: int | None = None):
        self.record_index = record_index
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)


class AspectKind(str, Enum):
    """The five clarification aspects a question can target."""

    EVENT = "event"
    PURPOSE = "purpose"
    TYPE = "type"
    STATUS = "status"
    CONDITION = "condition"

    @classmethod
    def parse(cls, value: str) -> "AspectKind":
        try:
            return cls(value.strip().lower())
        except ValueError:
            valid = ", ".join(a.value for a in cls)
            raise ValueError(f"unknown aspect {value!r}; expected one of: {valid}") from None


#: Sentinel used as the previous-round answer before any round has happened.
NO_PREVIOUS_ANSWER = "None"

_DEFAULT_MEANINGS: dict[AspectKind, str] | None = None


def load_aspect_meanings(path: str | Path | None = None) -> dict[AspectKind, str]:
    """Load the aspect meaning registry (bundled defaults unless a path is given).

    The registry must define a non-empty meaning sentence for every aspect.
    """
    if path is None:
        text = resources.files("apiclarify.data").joinpath("aspects.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    meanings: dict[AspectKind, str] = {}
    for key, value in raw.items():
        aspect = AspectKind.parse(key)
        if not isinstance(value, str) or not value.strip():
            raise ValueError(f"aspect {aspect.value!r} has an empty meaning string")
        meanings[aspect] = value.strip()
    missing = [a.value for a in AspectKind if a not in meanings]
    if missing:
        raise ValueError(f"aspect registry is missing meanings for: {', '.join(missing)}")
    return meanings


def aspect_meaning(aspect: AspectKind, registry: dict[AspectKind, str] | None = None) -> str:
    """Return the registered meaning sentence for an aspect."""
    global _DEFAULT_MEANINGS
    if registry is None:
        if _DEFAULT_MEANINGS is None:
            _DEFAULT_MEANINGS = load_aspect_meanings()
        registry = _DEFAULT_MEANINGS
    return registry[aspect]


@dataclass(frozen=True)
class PathRound:
    """One clarification round: the aspect asked about, the question, the chosen option."""

    aspect: AspectKind
    question: str
    option: str

    def __post_init__(self):
        if not self.question.strip():
            raise TableValidationError("question is non-empty")
        if not self.option.strip():
            raise TableValidationError("option is non-empty")


@dataclass(frozen=True)
class PathRecord:
    """A full clarification path from a query to its terminal API."""

    query: str
    rounds: tuple[PathRound, ...]
    api: str

    def __post_init__(self):
        if not self.query.strip():
            raise TableValidationError("query is non-empty")
        if not self.api.strip():
            raise TableValidationError("api is non-empty")
        if not self.rounds:
            raise TableValidationError("rounds is non-empty")
        for prev, cur in zip(self.rounds, self.rounds[1:]):
            if prev.aspect == cur.aspect:
                raise TableValidationError(
                    f"consecutive rounds share aspect {cur.aspect.value!r}"
                )


@dataclass(frozen=True)
class RetrievalUnit:
    """One (record, round) pair flattened for similarity ranking.

    prev_answer is the option chosen in the preceding round, or the
    "None" sentinel for a record's first round. source_index is the
    unit's position in flatten order and is unique across the store.
    """

    query: str
    prev_answer: str
    aspect: AspectKind
    question: str
    option: str
    api: str
    source_index: int
    record_index: int
    round_index: int


@dataclass(frozen=True)
class PathStore:
    """Immutable, validated collection of path records in file order."""

    records: tuple[PathRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PathRecord]:
        return iter(self.records)


def flatten(store: PathStore) -> list[RetrievalUnit]:
    """Flatten a store into one retrieval unit per (record, round).

    Order is deterministic: by record index, then round index.
    """
    units: list[RetrievalUnit] = []
    for rec_idx, record in enumerate(store.records):
        prev = NO_PREVIOUS_ANSWER
        for round_idx, rnd in enumerate(record.rounds):
            units.append(
                RetrievalUnit(
                    query=record.query,
                    prev_answer=prev,
                    aspect=rnd.aspect,
                    question=rnd.question,
                    option=rnd.option,
                    api=record.api,
                    source_index=len(units),
                    record_index=rec_idx,
                    round_index=round_idx,
                )
            )
            prev = rnd.option
    return units


def _record_from_dict(obj: dict, *, line: int) -> PathRecord:
    for field in ("query", "api", "rounds"):
        if field not in obj:
            raise TableParseError(f"missing field {field!r}", line=line)
    rounds = []
    if not isinstance(obj["rounds"], list):
        raise TableParseError("'rounds' must be a list", line=line)
    for entry in obj["rounds"]:
        try:
            aspect = AspectKind.parse(str(entry["aspect"]))
        except (KeyError, ValueError) as exc:
            raise TableParseError(str(exc), line=line) from None
        rounds.append(
            PathRound(
                aspect=aspect,
                question=str(entry.get("question", "")).strip(),
                option=str(entry.get("option", "")).strip(),
            )
        )
    return PathRecord(
        query=str(obj["query"]).strip(),
        rounds=tuple(rounds),
        api=str(obj["api"]).strip(),
    )


def _load_jsonl(path: Path) -> list[PathRecord]:
    records: list[PathRecord] = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TableParseError(f"invalid JSON: {exc.msg}", line=line_no) from None
            try:
                records.append(_record_from_dict(obj, line=line_no))
            except TableValidationError as exc:
                raise TableValidationError(str(exc), record_index=len(records)) from None
    return records


_CSV_COLUMNS = ["query", "round", "aspect", "cq", "option", "api"]


def _load_csv(path: Path) -> list[PathRecord]:
    records: list[PathRecord] = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != _CSV_COLUMNS:
            raise TableParseError(
                f"expected header {','.join(_CSV_COLUMNS)}, got {reader.fieldnames}", line=1
            )
        current_key: tuple[str, str] | None = None
        rounds: list[PathRound] = []

        def close_group(key):
            if key is None:
                return
            try:
                records.append(PathRecord(query=key[0], rounds=tuple(rounds), api=key[1]))
            except TableValidationError as exc:
                raise TableValidationError(str(exc), record_index=len(records)) from None

        for line_no, row in enumerate(reader, 2):
            query = (row["query"] or "").strip()
            api = (row["api"] or "").strip()
            try:
                round_no = int((row["round"] or "").strip())
            except ValueError:
                raise TableParseError(
                    f"'round' must be a 1-based integer, got {row['round']!r}", line=line_no
                ) from None
            key = (query, api)
            if key != current_key:
                close_group(current_key)
                current_key = key
                rounds = []
            if round_no != len(rounds) + 1:
                raise TableParseError(
                    f"round numbers must be consecutive from 1; got {round_no} "
                    f"after {len(rounds)} round(s)",
                    line=line_no,
                )
            try:
                aspect = AspectKind.parse(row["aspect"] or "")
            except ValueError as exc:
                raise TableParseError(str(exc), line=line_no) from None
            try:
                rounds.append(
                    PathRound(
                        aspect=aspect,
                        question=(row["cq"] or "").strip(),
                        option=(row["option"] or "").strip(),
                    )
                )
            except TableValidationError as exc:
                raise TableParseError(str(exc), line=line_no) from None
        close_group(current_key)
    return records


def load_table(path: str | Path, format: str = "jsonl") -> PathStore:
    """Load and validate a path table from disk.

    format is "jsonl" (canonical) or "csv" (one row per round, grouped by
    (query, api)). Raises TableParseError with a line number on malformed
    input and TableValidationError naming the violated invariant.
    """
    path = Path(path)
    if not path.exists():
        raise TableParseError(f"no such file: {path}")
    if format == "jsonl":
        records = _load_jsonl(path)
    elif format == "csv":
        records = _load_csv(path)
    else:
        raise ValueError(f"unknown table format {format!r}; expected 'jsonl' or 'csv'")
    return PathStore(records=tuple(records))


def record_to_dict(record: PathRecord) -> dict:
    return {
        "query": record.query,
        "api": record.api,
        "rounds": [
            {"aspect": r.aspect.value, "question": r.question, "option": r.option}
            for r in record.rounds
        ],
    }


def save_table(store: PathStore, path: str | Path) -> None:
    """Write a store to JSONL, the canonical on-disk form."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in store.records:
            fh.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")
