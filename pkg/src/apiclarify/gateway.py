"""LLM backend abstraction and typed parsing of unit outputs.

Two backends sit behind the same complete() interface: a remote
chat-completion endpoint and a deterministic scripted backend that
replays responses from a JSONL file. Parsers turn raw completion text
into aspects, ranked options, and ranked API lists; they either return
a typed value or raise a typed error, never anything else.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .pathtable import AspectKind
from .prompting import RenderedPrompt, UnitKind

logger = logging.getLogger(__name__)


class GatewayError(Exception):
    """Base class for backend and parsing failures."""

    kind = "gateway"


class GatewayTimeoutError(GatewayError):
    kind = "timeout"


class RetriesExhaustedError(GatewayError):
    kind = "retries-exhausted"


class ScriptedMissError(GatewayError):
    kind = "scripted-miss"


class UnparseableAspectError(GatewayError):
    kind = "unparseable-aspect"


class EmptyOptionsError(GatewayError):
    kind = "empty-options"


class EmptyApisError(GatewayError):
    kind = "empty-apis"


@dataclass(frozen=True)
class BackendConfig:
    """Configuration for either backend kind.

    kind "remote" requires endpoint and model; kind "scripted" requires
    script_path.
    """

    kind: str
    endpoint: str | None = None
    model: str | None = None
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 2
    retry_delay: float = 0.5
    script_path: str | Path | None = None

    def __post_init__(self):
        if self.kind == "remote":
            if not self.endpoint or not self.model:
                raise ValueError("remote backend requires endpoint and model")
        elif self.kind == "scripted":
            if not self.script_path:
                raise ValueError("scripted backend requires script_path")
        else:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class Completion:
    """Raw backend response for one unit, exactly as returned."""

    unit: UnitKind
    raw_text: str
    latency: float


@dataclass(frozen=True)
class ParsedOptions:
    """Ranked alternative options, deduplicated case-insensitively."""

    options: tuple[str, ...]


@dataclass(frozen=True)
class ParsedApis:
    """Ranked fully qualified API method names."""

    apis: tuple[str, ...]


class RemoteBackend:
    """Chat-completion client: one user message per prompt, first choice back.

    Retries transport failures and 5xx responses with exponential backoff
    up to max_retries. The bearer token is read from the LLM_API_KEY
    environment variable.
    """

    def __init__(self, cfg: BackendConfig):
        assert cfg.kind == "remote"
        self.cfg = cfg
        self._client = httpx.Client(timeout=cfg.timeout)

    def complete(self, prompt: RenderedPrompt) -> Completion:
        payload = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": prompt.text}],
        }
        headers = {}
        api_key = os.environ.get("LLM_API_KEY")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        start = time.perf_counter()
        last_error: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                response = self._client.post(self.cfg.endpoint, json=payload, headers=headers)
            except httpx.TimeoutException as exc:
                raise GatewayTimeoutError(
                    f"backend timed out after {self.cfg.timeout}s: {exc}"
                ) from exc
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code >= 500:
                    last_error = GatewayError(f"server error {response.status_code}")
                elif response.status_code >= 400:
                    # client errors are not retried; the request itself is wrong
                    raise GatewayError(
                        f"backend rejected request: {response.status_code} {response.text}"
                    )
                else:
                    try:
                        data = response.json()
                        text = data["choices"][0]["message"]["content"]
                    except (ValueError, LookupError, TypeError) as exc:
                        raise GatewayError(f"malformed backend response: {exc}") from exc
                    return Completion(
                        unit=prompt.unit,
                        raw_text=text,
                        latency=time.perf_counter() - start,
                    )
            if attempt < self.cfg.max_retries:
                time.sleep(self.cfg.retry_delay * (2**attempt))
        raise RetriesExhaustedError(
            f"gave up after {self.cfg.max_retries + 1} attempt(s): {last_error}"
        )

    def close(self):
        self._client.close()


@dataclass
class _ScriptEntry:
    unit: str
    inputs_digest: str | None
    response: str
    used: bool = False


class ScriptedBackend:
    """Deterministic replay backend fed from a JSONL script file.

    Each line is {"unit": str, "inputs_digest": str|null, "response": str}.
    A request first looks for an unused entry whose digest matches the
    prompt exactly, then falls back to the next unused entry for the unit
    in file order. The cursor is internally serialized.
    """

    def __init__(self, cfg: BackendConfig):
        assert cfg.kind == "scripted"
        self.cfg = cfg
        self._lock = threading.Lock()
        self._entries: list[_ScriptEntry] = []
        path = Path(cfg.script_path)
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from None
                self._entries.append(
                    _ScriptEntry(
                        unit=str(obj["unit"]),
                        inputs_digest=obj.get("inputs_digest"),
                        response=str(obj["response"]),
                    )
                )

    def complete(self, prompt: RenderedPrompt) -> Completion:
        start = time.perf_counter()
        with self._lock:
            chosen: _ScriptEntry | None = None
            for entry in self._entries:
                if entry.used or entry.unit != prompt.unit.value:
                    continue
                if entry.inputs_digest == prompt.inputs_digest:
                    chosen = entry
                    break
            if chosen is None:
                for entry in self._entries:
                    if not entry.used and entry.unit == prompt.unit.value:
                        chosen = entry
                        break
            if chosen is None:
                raise ScriptedMissError(
                    f"no scripted response left for unit {prompt.unit.value!r}"
                )
            chosen.used = True
            return Completion(
                unit=prompt.unit,
                raw_text=chosen.response,
                latency=time.perf_counter() - start,
            )


def create_backend(cfg: BackendConfig):
    if cfg.kind == "remote":
        return RemoteBackend(cfg)
    return ScriptedBackend(cfg)


_ASPECT_RE = re.compile(
    r"\b(" + "|".join(a.value for a in AspectKind) + r")\b", re.IGNORECASE
)
_NUMBERED_LINE_RE = re.compile(r"^\s*\d+[.)]\s*(.+)$")
_DOTTED_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)+")
_TRAILING_PARENS_RE = re.compile(r"\([^()]*\)\s*$")


def parse_aspect(completion: Completion) -> AspectKind:
    """First aspect keyword in the text, matched case-insensitively on word boundaries."""
    match = _ASPECT_RE.search(completion.raw_text)
    if not match:
        raise UnparseableAspectError(
            f"no aspect keyword found in completion: {completion.raw_text!r}"
        )
    return AspectKind(match.group(1).lower())


def _captured_lines(raw_text: str) -> list[str]:
    numbered = []
    for line in raw_text.splitlines():
        m = _NUMBERED_LINE_RE.match(line)
        if m:
            numbered.append(m.group(1).strip())
    if numbered:
        return numbered
    return [line.strip() for line in raw_text.splitlines() if line.strip()]


def parse_options(completion: Completion) -> ParsedOptions:
    """Ranked options from numbered lines, or any non-empty lines as fallback.

    Duplicates are dropped case-insensitively, first occurrence kept.
    """
    items: list[str] = []
    seen: set[str] = set()
    for item in _captured_lines(completion.raw_text):
        key = item.lower()
        if item and key not in seen:
            seen.add(key)
            items.append(item)
    if not items:
        raise EmptyOptionsError("no options captured from completion")
    return ParsedOptions(options=tuple(items))


def parse_apis(completion: Completion) -> ParsedApis:
    """Ranked API names from numbered lines, cleaned and grammar-checked.

    Items are stripped of backticks and a trailing parenthesized suffix;
    anything that still fails the dotted-identifier grammar is dropped
    with a warning. An entirely empty result is an error.
    """
    apis: list[str] = []
    for item in _captured_lines(completion.raw_text):
        cleaned = item.replace("`", "").strip()
        cleaned = _TRAILING_PARENS_RE.sub("", cleaned).strip()
        if _DOTTED_NAME_RE.fullmatch(cleaned):
            apis.append(cleaned)
        else:
            logger.warning("dropping non-API line from recommendation output: %r", item)
    if not apis:
        raise EmptyApisError("no valid API names captured from completion")
    return ParsedApis(apis=tuple(apis))
