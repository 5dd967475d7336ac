"""Multi-round clarification session orchestration.

Each round runs the chain in order: pick the best questioning aspect
from retrieved path examples, generate a clarification question, and
generate ranked options. After the user answers, the query is extended
over the full Q&A history and APIs are recommended for the extension.
Ablation variants drop the example block from the aspect prompt (no_k)
or the second retrieval stage (no_kps).
"""

from __future__ import annotations

import dataclasses
import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum

from . import retrieval
from .gateway import Completion, ParsedApis, ParsedOptions, parse_apis, parse_aspect, parse_options
from .pathtable import NO_PREVIOUS_ANSWER, AspectKind, PathStore, RetrievalUnit, flatten
from .prompting import PromptLibrary, RenderedPrompt
from .retrieval import RetrievalConfig


class SessionError(Exception):
    """Base class for illegal session transitions."""


class EmptyQueryError(SessionError):
    pass


class EmptyAnswerError(SessionError):
    pass


class PendingQuestionError(SessionError):
    """A question is already awaiting an answer."""


class NoPendingQuestionError(SessionError):
    """submit_answer called with no question outstanding."""


class RoundLimitError(SessionError):
    pass


class SessionClosedError(SessionError):
    pass


class Variant(str, Enum):
    """full = two-stage retrieval + examples; no_k = no examples at all;
    no_kps = examples from stage-1 ranking only."""

    FULL = "full"
    NO_K = "no_k"
    NO_KPS = "no_kps"


@dataclass(frozen=True)
class EngineConfig:
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    n_options: int = 5
    n_apis: int = 7
    max_rounds: int = 3

    def __post_init__(self):
        if self.n_options < 1 or self.n_apis < 1 or self.max_rounds < 1:
            raise ValueError("n_options, n_apis and max_rounds must all be >= 1")


@dataclass(frozen=True)
class RoundOutput:
    """What the user sees each round: the aspect, the question, ranked options."""

    aspect: AspectKind
    question: str
    options: ParsedOptions


@dataclass
class RoundRecord:
    """Progressively filled per-round log kept for the transcript."""

    round: int
    aspect: AspectKind
    question: str
    options: tuple[str, ...]
    prompt_digests: dict[str, str]
    answer: str | None = None
    extended_query: str | None = None
    recommendations: tuple[str, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "aspect": self.aspect.value,
            "question": self.question,
            "options": list(self.options),
            "answer": self.answer,
            "extended_query": self.extended_query,
            "recommendations": list(self.recommendations) if self.recommendations else None,
            "prompt_digests": dict(self.prompt_digests),
        }


@dataclass
class Session:
    """Mutable dialogue state for one user.

    Invariants maintained by the engine: round equals the number of
    answers, and the question history is at most one ahead of the answer
    history (the pending question).
    """

    id: str
    query: str
    variant: Variant
    cfg: EngineConfig
    round: int = 0
    history_questions: list[str] = field(default_factory=list)
    history_answers: list[str] = field(default_factory=list)
    last_options: ParsedOptions | None = None
    extended_query: str | None = None
    recommendations: ParsedApis | None = None
    closed: bool = False
    rounds_log: list[RoundRecord] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    @property
    def pending_question(self) -> bool:
        return len(self.history_questions) == len(self.history_answers) + 1


@dataclass(frozen=True)
class SessionTranscript:
    """Immutable export of a session's full history."""

    session_id: str
    query: str
    variant: str
    rounds: tuple[dict, ...]

    @property
    def qa_pairs(self) -> int:
        return sum(1 for r in self.rounds if r["answer"] is not None)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "query": self.query,
            "variant": self.variant,
            "round_count": self.qa_pairs,
            "rounds": [dict(r) for r in self.rounds],
        }


class ClarificationEngine:
    """Drives sessions over a shared immutable store, templates, and backend.

    Distinct sessions may run concurrently; operations on one session are
    serialized through its lock.
    """

    def __init__(
        self,
        store: PathStore,
        backend,
        library: PromptLibrary | None = None,
        cfg: EngineConfig | None = None,
    ):
        self.store = store
        self.units: list[RetrievalUnit] = flatten(store)
        self.backend = backend
        self.library = library or PromptLibrary()
        self.cfg = cfg or EngineConfig()

    def start_session(self, query: str, variant: Variant = Variant.FULL) -> Session:
        if not query.strip():
            raise EmptyQueryError("query must be non-empty")
        return Session(
            id=uuid.uuid4().hex,
            query=query.strip(),
            variant=Variant(variant),
            cfg=self.cfg,
        )

    def _check_open(self, session: Session):
        if session.closed:
            raise SessionClosedError(f"session {session.id} is closed")

    def _complete(self, session: Session, prompt: RenderedPrompt, digests: dict[str, str]) -> Completion:
        digests[prompt.unit.value] = prompt.inputs_digest
        return self.backend.complete(prompt)

    def next_question(self, session: Session) -> RoundOutput:
        """Run the question side of one round: aspect, question, options.

        The question is appended to the history and left pending until
        submit_answer.
        """
        with session.lock:
            self._check_open(session)
            if session.pending_question:
                raise PendingQuestionError("previous question has not been answered")
            if session.round >= session.cfg.max_rounds:
                raise RoundLimitError(
                    f"round limit of {session.cfg.max_rounds} reached"
                )

            prev_answer = session.history_answers[-1] if session.history_answers else NO_PREVIOUS_ANSWER
            digests: dict[str, str] = {}

            if session.variant is Variant.NO_K:
                aspect_prompt = self.library.render_best_aspect(
                    session.query, prev_answer, [], variant="no_k"
                )
            else:
                retrieval_cfg = self.cfg.retrieval
                if session.variant is Variant.NO_KPS:
                    retrieval_cfg = dataclasses.replace(retrieval_cfg, variant="no_kps")
                examples = retrieval.find_examples(
                    self.units, session.query, prev_answer, retrieval_cfg
                )
                aspect_prompt = self.library.render_best_aspect(
                    session.query, prev_answer, examples, variant="full"
                )

            completion = self._complete(session, aspect_prompt, digests)
            try:
                aspect = parse_aspect(completion)
            except Exception:
                # one bounded retry before failing the round
                completion = self._complete(session, aspect_prompt, digests)
                aspect = parse_aspect(completion)

            question_prompt = self.library.render_clarify_question(
                session.query, aspect, session.history_answers
            )
            question = self._complete(session, question_prompt, digests).raw_text.strip()

            options_prompt = self.library.render_options(
                question, session.query, session.cfg.n_options
            )
            options = parse_options(self._complete(session, options_prompt, digests))

            session.history_questions.append(question)
            session.last_options = options
            session.rounds_log.append(
                RoundRecord(
                    round=session.round + 1,
                    aspect=aspect,
                    question=question,
                    options=options.options,
                    prompt_digests=digests,
                )
            )
            return RoundOutput(aspect=aspect, question=question, options=options)

    def submit_answer(self, session: Session, answer: str) -> tuple[str, ParsedApis]:
        """Record the user's answer, extend the query, and recommend APIs."""
        with session.lock:
            self._check_open(session)
            if not session.pending_question:
                raise NoPendingQuestionError("no question is awaiting an answer")
            if not answer.strip():
                raise EmptyAnswerError("answer must be non-empty")

            answer = answer.strip()
            session.history_answers.append(answer)
            session.round += 1
            record = session.rounds_log[-1]
            record.answer = answer

            history_qa = list(zip(session.history_questions, session.history_answers))
            extension_prompt = self.library.render_query_extension(session.query, history_qa)
            extended = self._complete(
                session, extension_prompt, record.prompt_digests
            ).raw_text.strip()

            recommendation_prompt = self.library.render_api_recommendation(
                extended, session.cfg.n_apis
            )
            recommendations = parse_apis(
                self._complete(session, recommendation_prompt, record.prompt_digests)
            )

            session.extended_query = extended
            session.recommendations = recommendations
            record.extended_query = extended
            record.recommendations = recommendations.apis
            return extended, recommendations

    def build_transcript(self, session: Session) -> SessionTranscript:
        """Snapshot the session history without closing it."""
        with session.lock:
            return SessionTranscript(
                session_id=session.id,
                query=session.query,
                variant=session.variant.value,
                rounds=tuple(r.to_dict() for r in session.rounds_log),
            )

    def end_session(self, session: Session) -> SessionTranscript:
        """Close the session and return its transcript; no operations after."""
        with session.lock:
            self._check_open(session)
            transcript = self.build_transcript(session)
            session.closed = True
            return transcript
