"""Ranked-recommendation metrics and the batch evaluation driver.

Metrics follow the usual IR definitions over per-case ranked lists:

- reciprocal rank: 1/rank of the first ground-truth item, 0 on a miss
- average precision: sum of precision@k over hit positions k, divided by
  the ground-truth count, 0 when nothing hits
- precision / recall: overlap of the recommended set with the truth set,
  divided by the recommended set and truth set sizes respectively

All matching is exact string equality after whitespace trimming. Means
are plain arithmetic means over cases, so case order never matters.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .engine import ClarificationEngine, Variant
from .retrieval import score

_DOTTED_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)+")


class EvalError(Exception):
    pass


class PolicyDataMissingError(EvalError):
    """A case lacks the answers or description its answer policy needs."""


@dataclass(frozen=True)
class EvalCase:
    """One evaluation query with its ground truth and optional answer data."""

    query: str
    ground_truth_apis: tuple[str, ...]
    answers: tuple[str, ...] | None = None
    truth_description: str | None = None

    def __post_init__(self):
        if not self.ground_truth_apis:
            raise ValueError(f"case {self.query!r} has no ground-truth APIs")
        for api in self.ground_truth_apis:
            if not _DOTTED_NAME_RE.fullmatch(api.strip()):
                raise ValueError(f"ground-truth API {api!r} is not a dotted method name")


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    mrr: float
    map: float
    precision: float
    recall: float
    n_cases: int

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "mrr": self.mrr,
            "map": self.map,
            "precision": self.precision,
            "recall": self.recall,
            "n_cases": self.n_cases,
        }


@dataclass
class CaseResult:
    query: str
    rounds: dict[int, tuple[str, ...]] = field(default_factory=dict)
    reciprocal_ranks: dict[int, float] = field(default_factory=dict)
    average_precisions: dict[int, float] = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "rounds": {str(r): list(lst) for r, lst in self.rounds.items()},
            "reciprocal_ranks": {str(r): v for r, v in self.reciprocal_ranks.items()},
            "average_precisions": {str(r): v for r, v in self.average_precisions.items()},
            "error": self.error,
        }


@dataclass(frozen=True)
class EvalReport:
    dataset_id: str
    variant: str
    round_metrics: tuple[RoundMetrics, ...]
    cases: tuple[CaseResult, ...]
    failed_count: int

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "variant": self.variant,
            "rounds": [m.to_dict() for m in self.round_metrics],
            "cases": [c.to_dict() for c in self.cases],
            "failed_count": self.failed_count,
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _trim(items: Iterable[str]) -> list[str]:
    return [item.strip() for item in items]


def reciprocal_rank(ranked: Sequence[str], truth: set[str]) -> float:
    """1/rank of the first ground-truth item; 0.0 if none appears."""
    truth = {t.strip() for t in truth}
    for position, item in enumerate(_trim(ranked), 1):
        if item in truth:
            return 1.0 / position
    return 0.0


def mrr(cases: Sequence[tuple[Sequence[str], set[str]]]) -> float:
    """Mean reciprocal rank over (ranked list, truth set) cases."""
    if not cases:
        raise EvalError("mrr over zero cases is undefined")
    return sum(reciprocal_rank(ranked, truth) for ranked, truth in cases) / len(cases)


def average_precision(ranked: Sequence[str], truth: set[str]) -> float:
    """Precision@k summed over hit positions, divided by the truth count."""
    truth = {t.strip() for t in truth}
    if not truth:
        raise EvalError("average precision needs a non-empty truth set")
    hits = 0
    total = 0.0
    for position, item in enumerate(_trim(ranked), 1):
        if item in truth:
            hits += 1
            total += hits / position
    return total / len(truth)


def precision_recall(ranked: Sequence[str], truth: set[str]) -> tuple[float, float]:
    """Set precision and recall of the recommendations against the truth."""
    if not ranked or not truth:
        raise EvalError("precision/recall needs non-empty recommendations and truth")
    ranked_set = set(_trim(ranked))
    truth_set = {t.strip() for t in truth}
    overlap = len(ranked_set & truth_set)
    return overlap / len(ranked_set), overlap / len(truth_set)


def load_dataset(path: str | Path) -> list[EvalCase]:
    """Read evaluation cases from JSONL.

    Each line: {"query": str, "ground_truth_apis": [str],
    "answers": [str]|null, "truth_description": str|null}.
    """
    cases: list[EvalCase] = []
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EvalError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from None
            try:
                cases.append(
                    EvalCase(
                        query=str(obj["query"]),
                        ground_truth_apis=tuple(obj["ground_truth_apis"]),
                        answers=tuple(obj["answers"]) if obj.get("answers") else None,
                        truth_description=obj.get("truth_description"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise EvalError(f"{path}:{line_no}: {exc}") from None
    return cases


def _oracle_answer(options: Sequence[str], description: str) -> str:
    """Pick the option most similar to the ground-truth description, ties by rank."""
    best = options[0]
    best_score = score(options[0], description)
    for option in options[1:]:
        s = score(option, description)
        if s > best_score:
            best, best_score = option, s
    return best


def _validate_policy(cases: Sequence[EvalCase], policy: str, rounds: int) -> None:
    for case in cases:
        if policy == "scripted":
            if case.answers is None or len(case.answers) < rounds:
                raise PolicyDataMissingError(
                    f"case {case.query!r} needs {rounds} scripted answers"
                )
        elif policy == "oracle":
            if not case.truth_description:
                raise PolicyDataMissingError(
                    f"case {case.query!r} needs a truth_description for the oracle policy"
                )
        else:
            raise ValueError(f"unknown answer policy {policy!r}")


def run_eval(
    engine: ClarificationEngine,
    cases: Sequence[EvalCase],
    *,
    variant: Variant = Variant.FULL,
    policy: str = "scripted",
    rounds: int = 3,
    dataset_id: str = "dataset",
) -> EvalReport:
    """Drive one session per case for the given number of rounds and score it.

    The scripted policy replays each case's stored answers; the oracle
    policy answers with the offered option closest to the case's
    ground-truth description. A case whose session fails is excluded from
    every mean and counted in the report.
    """
    if not cases:
        raise EvalError("dataset must contain at least one case")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    _validate_policy(cases, policy, rounds)

    results: list[CaseResult] = []
    for case in cases:
        result = CaseResult(query=case.query)
        truth = {t.strip() for t in case.ground_truth_apis}
        try:
            session = engine.start_session(case.query, variant)
            for round_no in range(1, rounds + 1):
                out = engine.next_question(session)
                if policy == "scripted":
                    answer = case.answers[round_no - 1]
                else:
                    answer = _oracle_answer(out.options.options, case.truth_description)
                _extended, recommendations = engine.submit_answer(session, answer)
                ranked = recommendations.apis
                result.rounds[round_no] = ranked
                result.reciprocal_ranks[round_no] = reciprocal_rank(ranked, truth)
                result.average_precisions[round_no] = average_precision(ranked, truth)
            engine.end_session(session)
        except Exception as exc:
            result.error = f"{type(exc).__name__}: {exc}"
        results.append(result)

    ok = [r for r in results if r.error is None]
    truth_by_query = {c.query: {t.strip() for t in c.ground_truth_apis} for c in cases}
    metrics: list[RoundMetrics] = []
    for round_no in range(1, rounds + 1):
        scored = [(r.rounds[round_no], truth_by_query[r.query]) for r in ok]
        if scored:
            pr = [precision_recall(ranked, truth) for ranked, truth in scored]
            metrics.append(
                RoundMetrics(
                    round=round_no,
                    mrr=mrr(scored),
                    map=sum(average_precision(l, t) for l, t in scored) / len(scored),
                    precision=sum(p for p, _ in pr) / len(pr),
                    recall=sum(r for _, r in pr) / len(pr),
                    n_cases=len(scored),
                )
            )
        else:
            metrics.append(
                RoundMetrics(round=round_no, mrr=0.0, map=0.0, precision=0.0, recall=0.0, n_cases=0)
            )

    return EvalReport(
        dataset_id=dataset_id,
        variant=Variant(variant).value,
        round_metrics=tuple(metrics),
        cases=tuple(results),
        failed_count=len(results) - len(ok),
    )


_METRIC_FIELDS = [("MRR", "mrr"), ("MAP", "map"), ("Precision", "precision"), ("Recall", "recall")]


def report_to_csv(report: EvalReport, baselines: dict | None = None) -> str:
    """Render the report as a metric-by-approach-by-round CSV table.

    baselines, if given, maps approach name to {metric: [round values]}
    using metric names MRR/MAP/Precision/Recall; rows are merged in for
    side-by-side comparison with externally produced numbers.
    """
    n_rounds = len(report.round_metrics)
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["metric", "approach"] + [f"round_{i}" for i in range(1, n_rounds + 1)])
    for label, attr in _METRIC_FIELDS:
        values = [f"{getattr(m, attr):.4f}" for m in report.round_metrics]
        writer.writerow([label, report.variant] + values)
        for approach, table in (baselines or {}).items():
            if label in table:
                writer.writerow([label, approach] + [f"{v:.4f}" for v in table[label][:n_rounds]])
    return buffer.getvalue()
