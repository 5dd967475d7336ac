from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from apiclarify.gateway import Completion
from apiclarify.pathtable import PathStore, load_table


def demo_data_path(name: str) -> Path:
    return Path(str(resources.files("apiclarify.data").joinpath("demo").joinpath(name)))


@pytest.fixture
def demo_table_path() -> Path:
    return demo_data_path("paths.jsonl")


@pytest.fixture
def demo_script_path() -> Path:
    return demo_data_path("script.jsonl")


@pytest.fixture
def demo_store(demo_table_path) -> PathStore:
    return load_table(demo_table_path)


class FakeBackend:
    """In-memory backend producing valid responses forever.

    Records every prompt it sees so tests can assert on the data flow.
    Per-unit response sequences can be overridden; unlisted units fall
    back to generic valid output.
    """

    ASPECT_CYCLE = ["type", "purpose", "status", "event", "condition"]

    def __init__(self, overrides: dict[str, list[str]] | None = None, record: bool = True):
        self.prompts = []
        self.record = record
        self.overrides = {unit: list(responses) for unit, responses in (overrides or {}).items()}
        self._counts: dict[str, int] = {}

    def _default(self, unit: str, n: int) -> str:
        if unit == "best_aspect":
            return self.ASPECT_CYCLE[n % len(self.ASPECT_CYCLE)]
        if unit == "clarify_question":
            return f"What about detail {n}?"
        if unit == "options":
            return "\n".join(f"{i}. choice {n}-{i}" for i in range(1, 6))
        if unit == "query_extension":
            return f"extended query {n}"
        return "\n".join(f"{i}. java.pkg{n}.Cls.method{i}" for i in range(1, 8))

    def complete(self, prompt) -> Completion:
        if self.record:
            self.prompts.append(prompt)
        unit = prompt.unit.value
        n = self._counts.get(unit, 0)
        self._counts[unit] = n + 1
        queued = self.overrides.get(unit)
        if queued:
            text = queued.pop(0)
        else:
            text = self._default(unit, n)
        return Completion(unit=prompt.unit, raw_text=text, latency=0.0)


@pytest.fixture
def fake_backend() -> FakeBackend:
    return FakeBackend()
