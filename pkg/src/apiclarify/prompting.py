"""Deterministic prompt rendering for the five chain units.

Templates are plain UTF-8 files with {name} placeholders, bundled with
the package and overridable by pointing a PromptLibrary at another
directory. Rendering the same inputs always yields byte-identical text,
and every rendered prompt carries a stable digest of its bound inputs so
completions can be replayed.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Sequence

from .pathtable import AspectKind, load_aspect_meanings
from .retrieval import PathExample


class UnitKind(str, Enum):
    """The five chain units, one LLM call each."""

    BEST_ASPECT = "best_aspect"
    CLARIFY_QUESTION = "clarify_question"
    OPTIONS = "options"
    QUERY_EXTENSION = "query_extension"
    API_RECOMMENDATION = "api_recommendation"


#: Placeholders each unit's template may use.
ALLOWED_PLACEHOLDERS: dict[UnitKind, frozenset[str]] = {
    UnitKind.BEST_ASPECT: frozenset({"query", "prev_answer", "aspect_meaning", "examples"}),
    UnitKind.CLARIFY_QUESTION: frozenset({"query", "aspect", "aspect_meaning", "history_answers"}),
    UnitKind.OPTIONS: frozenset({"query", "question", "n_options"}),
    UnitKind.QUERY_EXTENSION: frozenset({"query", "history_qa"}),
    UnitKind.API_RECOMMENDATION: frozenset({"extended_query", "n_apis"}),
}

#: Header line that introduces the retrieved examples block in the
#: best-aspect prompt; absent entirely when rendering without examples.
EXAMPLES_DELIMITER = "Examples:"

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


class TemplateError(Exception):
    """Raised for malformed templates or incomplete placeholder binding."""


@dataclass(frozen=True)
class PromptTemplate:
    unit: UnitKind
    body: str

    def __post_init__(self):
        allowed = ALLOWED_PLACEHOLDERS[self.unit]
        for name in _PLACEHOLDER_RE.findall(self.body):
            if name not in allowed:
                raise TemplateError(
                    f"template for {self.unit.value} uses undeclared placeholder {{{name}}}"
                )

    def render(self, bindings: dict[str, str]) -> str:
        def substitute(match: re.Match) -> str:
            name = match.group(1)
            if name not in bindings:
                raise TemplateError(
                    f"placeholder {{{name}}} not bound for unit {self.unit.value}"
                )
            return bindings[name]

        text = _PLACEHOLDER_RE.sub(substitute, self.body)
        residue = _PLACEHOLDER_RE.search(text)
        if residue:
            raise TemplateError(f"rendered text still contains placeholder {residue.group(0)}")
        return text


@dataclass(frozen=True)
class RenderedPrompt:
    """Final prompt text for one unit plus a stable digest of its inputs."""

    unit: UnitKind
    text: str
    inputs_digest: str


def _digest(unit: UnitKind, bindings: dict[str, str]) -> str:
    payload = json.dumps({"unit": unit.value, "bindings": bindings}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def format_example_line(example: PathExample) -> str:
    return (
        f"Query: {example.query} | Previous answer: {example.prev_answer}"
        f" -> Aspect: {example.aspect.value}"
    )


class PromptLibrary:
    """Loads the five unit templates once and renders prompts from them."""

    def __init__(
        self,
        templates_dir: str | Path | None = None,
        meanings: dict[AspectKind, str] | None = None,
    ):
        self.meanings = meanings or load_aspect_meanings()
        self.templates: dict[UnitKind, PromptTemplate] = {}
        if templates_dir is None:
            root = resources.files("apiclarify.data").joinpath("templates")
            registry = json.loads(root.joinpath("registry.json").read_text("utf-8"))
            for unit_name, filename in registry.items():
                unit = UnitKind(unit_name)
                body = root.joinpath(filename).read_text("utf-8")
                self.templates[unit] = PromptTemplate(unit=unit, body=body)
        else:
            root_path = Path(templates_dir)
            registry = json.loads((root_path / "registry.json").read_text("utf-8"))
            for unit_name, filename in registry.items():
                unit = UnitKind(unit_name)
                body = (root_path / filename).read_text("utf-8")
                self.templates[unit] = PromptTemplate(unit=unit, body=body)
        missing = [u.value for u in UnitKind if u not in self.templates]
        if missing:
            raise TemplateError(f"template registry is missing units: {', '.join(missing)}")

    def _render(self, unit: UnitKind, bindings: dict[str, str]) -> RenderedPrompt:
        text = self.templates[unit].render(bindings)
        return RenderedPrompt(unit=unit, text=text, inputs_digest=_digest(unit, bindings))

    def _meanings_block(self) -> str:
        return "\n".join(f"- {a.value}: {self.meanings[a]}" for a in AspectKind)

    def render_best_aspect(
        self,
        query: str,
        prev_answer: str,
        examples: Sequence[PathExample],
        variant: str = "full",
    ) -> RenderedPrompt:
        """Prompt asking for the best questioning aspect.

        Contains, in order: the five aspect meanings, the retrieved example
        block (omitted entirely for variant "no_k"), and the live input
        pair. With variant "full" at least one example is required.
        """
        if variant not in ("full", "no_k"):
            raise ValueError(f"variant must be 'full' or 'no_k', got {variant!r}")
        if variant == "full" and not examples:
            raise ValueError("variant 'full' requires at least one retrieved example")
        if len(examples) > 5:
            raise ValueError(f"at most 5 examples allowed, got {len(examples)}")
        if variant == "no_k":
            examples_block = ""
        else:
            lines = "\n".join(format_example_line(e) for e in examples)
            examples_block = f"{EXAMPLES_DELIMITER}\n{lines}\n\n"
        bindings = {
            "aspect_meaning": self._meanings_block(),
            "examples": examples_block,
            "query": query,
            "prev_answer": prev_answer,
        }
        return self._render(UnitKind.BEST_ASPECT, bindings)

    def render_clarify_question(
        self, query: str, aspect: AspectKind, history_answers: Sequence[str]
    ) -> RenderedPrompt:
        """Prompt asking for a clarification question about one aspect."""
        known = "\n".join(f"- {a}" for a in history_answers)
        bindings = {
            "query": query,
            "aspect": aspect.value,
            "aspect_meaning": self.meanings[aspect],
            "history_answers": known,
        }
        return self._render(UnitKind.CLARIFY_QUESTION, bindings)

    def render_options(self, question: str, query: str, n_options: int) -> RenderedPrompt:
        """Prompt asking for a ranked list of alternative options."""
        if n_options < 1:
            raise ValueError(f"n_options must be >= 1, got {n_options}")
        bindings = {"question": question, "query": query, "n_options": str(n_options)}
        return self._render(UnitKind.OPTIONS, bindings)

    def render_query_extension(
        self, query: str, history_qa: Sequence[tuple[str, str]]
    ) -> RenderedPrompt:
        """Prompt asking to rewrite the query over the full Q&A history.

        history_qa pairs are rendered in input order, never sorted.
        """
        if not history_qa:
            raise ValueError("history_qa must be non-empty; nothing to extend from")
        lines = []
        for i, (question, answer) in enumerate(history_qa, 1):
            lines.append(f"Q{i}: {question}")
            lines.append(f"A{i}: {answer}")
        bindings = {"query": query, "history_qa": "\n".join(lines)}
        return self._render(UnitKind.QUERY_EXTENSION, bindings)

    def render_api_recommendation(self, extended_query: str, n_apis: int) -> RenderedPrompt:
        """Prompt asking for a ranked list of fully qualified API methods."""
        if n_apis < 1:
            raise ValueError(f"n_apis must be >= 1, got {n_apis}")
        bindings = {"extended_query": extended_query, "n_apis": str(n_apis)}
        return self._render(UnitKind.API_RECOMMENDATION, bindings)


_DEFAULT_LIBRARY: PromptLibrary | None = None


def default_library() -> PromptLibrary:
    global _DEFAULT_LIBRARY
    if _DEFAULT_LIBRARY is None:
        _DEFAULT_LIBRARY = PromptLibrary()
    return _DEFAULT_LIBRARY


def render_best_aspect(
    query: str, prev_answer: str, examples: Sequence[PathExample], variant: str = "full"
) -> RenderedPrompt:
    return default_library().render_best_aspect(query, prev_answer, examples, variant)


def render_clarify_question(
    query: str, aspect: AspectKind, history_answers: Sequence[str]
) -> RenderedPrompt:
    return default_library().render_clarify_question(query, aspect, history_answers)


def render_options(question: str, query: str, n_options: int) -> RenderedPrompt:
    return default_library().render_options(question, query, n_options)


def render_query_extension(query: str, history_qa: Sequence[tuple[str, str]]) -> RenderedPrompt:
    return default_library().render_query_extension(query, history_qa)


def render_api_recommendation(extended_query: str, n_apis: int) -> RenderedPrompt:
    return default_library().render_api_recommendation(extended_query, n_apis)
