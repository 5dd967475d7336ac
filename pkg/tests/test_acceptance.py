"""Acceptance suite: one test per criterion, each printing its own verdict.

Run with `pytest tests/test_acceptance.py -v` (or -s to see the verdict
lines alongside pytest's own).
"""

from __future__ import annotations

import json
import math
import os
import random
import time

import pytest
from click.testing import CliRunner

from apiclarify.cli import main as cli_main
from apiclarify.engine import (
    ClarificationEngine,
    EmptyAnswerError,
    EmptyQueryError,
    EngineConfig,
    NoPendingQuestionError,
    PendingQuestionError,
    RoundLimitError,
    SessionClosedError,
    Variant,
)
from apiclarify.evaluation import average_precision, mrr, precision_recall, reciprocal_rank
from apiclarify.pathtable import AspectKind, NO_PREVIOUS_ANSWER, RetrievalUnit
from apiclarify.prompting import EXAMPLES_DELIMITER, render_best_aspect
from apiclarify.retrieval import RetrievalConfig, find_examples, score

from conftest import FakeBackend
from test_prompting import FRAGMENTS, GOLDEN_DIR, golden_renders
from test_retrieval import brute_force_examples


def verdict(name: str):
    print(f"[ACCEPTANCE] {name}: PASS", flush=True)


def random_unit(rng: random.Random, index: int, vocab: list[str]) -> RetrievalUnit:
    return RetrievalUnit(
        query=" ".join(rng.choices(vocab, k=rng.randint(1, 5))),
        prev_answer=rng.choice([NO_PREVIOUS_ANSWER, " ".join(rng.choices(vocab, k=2))]),
        aspect=rng.choice(list(AspectKind)),
        question="cq?",
        option=" ".join(rng.choices(vocab, k=rng.randint(1, 4))),
        api="java.pkg.Cls.method",
        source_index=index,
        record_index=index,
        round_index=0,
    )


def test_acceptance_pathfinder_oracle_equivalence():
    """200 randomized tables of <= 50 units: exact match with the brute-force oracle."""
    rng = random.Random(20240817)
    vocab = [
        "stream", "file", "read", "write", "random", "int", "double", "list",
        "map", "sort", "parse", "open", "close", "value", "generator",
    ]
    started = time.perf_counter()
    for trial in range(200):
        n = rng.randint(1, 50)
        units = [random_unit(rng, i, vocab) for i in range(n)]
        cfg = RetrievalConfig(
            top_fraction=rng.choice([0.05, 0.1, 0.25, 0.5, 0.9, 1.0]),
            max_examples=rng.randint(1, 5),
            variant=rng.choice(["full", "no_kps"]),
        )
        query = " ".join(rng.choices(vocab, k=rng.randint(1, 5)))
        prev = rng.choice([NO_PREVIOUS_ANSWER, " ".join(rng.choices(vocab, k=3))])
        expected = brute_force_examples(units, query, prev, cfg)
        got = find_examples(units, query, prev, cfg)
        assert got == expected, f"trial {trial} diverged from oracle"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s, budget is 10s"
    verdict("pathfinder oracle equivalence (200 tables)")


def test_acceptance_similarity_unit_checks():
    assert score("return stream", "return stream") == 1.0
    assert score("alpha beta", "gamma delta") == 0.0
    got = score("return stream from generator", "return stream of pseudorandom double values")
    assert got == pytest.approx(2 / (2 * math.sqrt(6)), abs=1e-9)
    verdict("similarity unit checks")


def test_acceptance_metric_fixtures():
    assert mrr([(["t.t.t"], {"t.t.t"})]) == pytest.approx(1.0, abs=1e-9)
    two_cases = [
        (["x.x.x", "t.t.t"], {"t.t.t"}),
        (["x.x.x", "y.y.y", "z.z.z", "t.t.t"], {"t.t.t"}),
    ]
    assert mrr(two_cases) == pytest.approx(0.375, abs=1e-9)
    assert average_precision(
        ["t.t.a", "x.x.x", "t.t.b"], {"t.t.a", "t.t.b"}
    ) == pytest.approx(5 / 6, abs=1e-9)
    assert precision_recall(
        ["t.t.a", "t.t.b", "x.x.x"], {"t.t.a", "t.t.b", "t.t.c", "t.t.d"}
    ) == pytest.approx((2 / 3, 1 / 2), abs=1e-9)

    # single-truth identity: AP equals reciprocal rank on 1,000 random lists
    rng = random.Random(99)
    pool = [f"x.y.m{i}" for i in range(12)] + ["t.t.t"]
    for _ in range(1000):
        ranked = rng.sample(pool, k=rng.randint(1, len(pool)))
        assert average_precision(ranked, {"t.t.t"}) == pytest.approx(
            reciprocal_rank(ranked, {"t.t.t"}), abs=1e-12
        )
    verdict("metric fixtures and single-truth AP identity")


def test_acceptance_golden_transcript(tmp_path):
    """Bundled demo completes two rounds; round 2 puts the running example's API first."""
    out = tmp_path / "transcript.json"
    started = time.perf_counter()
    result = CliRunner().invoke(cli_main, ["demo", "--out", str(out)])
    elapsed = time.perf_counter() - started
    assert result.exit_code == 0, result.output
    assert elapsed < 1.0, f"demo took {elapsed:.2f}s, budget is 1s"
    transcript = json.loads(out.read_text("utf-8"))
    assert transcript["round_count"] == 2
    assert len(transcript["rounds"]) == 2
    assert all(r["answer"] is not None for r in transcript["rounds"])
    assert transcript["rounds"][1]["recommendations"][0] == "java.util.Random.nextDouble"
    verdict("golden two-round demo transcript")


def test_acceptance_ablation_observability(demo_store):
    from apiclarify.pathtable import flatten

    # (a) the no_k prompt drops exactly the examples block
    units = flatten(demo_store)
    examples = find_examples(
        units, demo_store.records[0].query, NO_PREVIOUS_ANSWER, RetrievalConfig(top_fraction=1.0)
    )
    full = render_best_aspect(demo_store.records[0].query, NO_PREVIOUS_ANSWER, examples, "full")
    bare = render_best_aspect(demo_store.records[0].query, NO_PREVIOUS_ANSWER, examples, "no_k")
    assert full.text != bare.text
    assert EXAMPLES_DELIMITER in full.text
    assert EXAMPLES_DELIMITER not in bare.text
    start = full.text.index(EXAMPLES_DELIMITER)
    end = start
    for _ in range(1 + len(examples)):
        end = full.text.index("\n", end) + 1
    assert full.text[:start] + full.text[end + 1 :] == bare.text

    # (b) no_kps retrieval ignores prev_answer; full reorders on a table built to flip
    flip_units = [
        RetrievalUnit(
            query="q", prev_answer=NO_PREVIOUS_ANSWER, aspect=AspectKind.PURPOSE,
            question="cq", option="alpha beta", api="a.b.c",
            source_index=0, record_index=0, round_index=0,
        ),
        RetrievalUnit(
            query="q", prev_answer=NO_PREVIOUS_ANSWER, aspect=AspectKind.TYPE,
            question="cq", option="gamma delta", api="a.b.c",
            source_index=1, record_index=1, round_index=0,
        ),
    ]
    no_kps = RetrievalConfig(top_fraction=1.0, variant="no_kps")
    assert find_examples(flip_units, "q", "alpha beta", no_kps) == find_examples(
        flip_units, "q", "gamma delta", no_kps
    )
    full_cfg = RetrievalConfig(top_fraction=1.0, variant="full")
    order_a = [e.source_index for e in find_examples(flip_units, "q", "alpha beta", full_cfg)]
    order_b = [e.source_index for e in find_examples(flip_units, "q", "gamma delta", full_cfg)]
    assert order_a == [0, 1]
    assert order_b == [1, 0]
    verdict("ablation observability (no_k block diff, no_kps invariance)")


def test_acceptance_prompt_golden_files(demo_store):
    from apiclarify.pathtable import flatten

    units = flatten(demo_store)
    examples = find_examples(
        units,
        "return stream from generator in Java",
        NO_PREVIOUS_ANSWER,
        RetrievalConfig(top_fraction=1.0),
    )
    rendered = golden_renders(examples)
    for name, prompt in rendered.items():
        golden = (GOLDEN_DIR / f"{name}.golden.txt").read_text(encoding="utf-8")
        assert prompt.text == golden, f"{name} drifted from its golden file"
        for fragment in FRAGMENTS[name]:
            assert fragment in golden, (name, fragment)
    verdict("prompt golden files byte-match with attested fragments")


def test_acceptance_session_state_machine(demo_store):
    """10,000 random legal operation sequences keep every session invariant."""
    engine = ClarificationEngine(
        demo_store, FakeBackend(record=False), cfg=EngineConfig(max_rounds=2)
    )
    rng = random.Random(4242)

    with pytest.raises(EmptyQueryError):
        engine.start_session("   ")

    for _ in range(10_000):
        session = engine.start_session("some query to clarify")
        observed_rounds = [session.round]
        closed = False
        for _step in range(rng.randint(1, 5)):
            pending = session.pending_question
            at_limit = session.round >= session.cfg.max_rounds

            # every illegal transition must raise its named error
            if closed:
                with pytest.raises(SessionClosedError):
                    engine.next_question(session)
                with pytest.raises(SessionClosedError):
                    engine.submit_answer(session, "answer")
                with pytest.raises(SessionClosedError):
                    engine.end_session(session)
                break
            if pending:
                with pytest.raises(PendingQuestionError):
                    engine.next_question(session)
                with pytest.raises(EmptyAnswerError):
                    engine.submit_answer(session, "   ")
            else:
                with pytest.raises(NoPendingQuestionError):
                    engine.submit_answer(session, "answer")
                if at_limit:
                    with pytest.raises(RoundLimitError):
                        engine.next_question(session)

            # choose one legal operation
            legal = ["end"]
            if pending:
                legal.append("answer")
            elif not at_limit:
                legal.append("question")
            op = rng.choice(legal)
            if op == "question":
                engine.next_question(session)
            elif op == "answer":
                engine.submit_answer(session, f"answer {session.round}")
            else:
                engine.end_session(session)
                closed = True

            observed_rounds.append(session.round)
            q, a = len(session.history_questions), len(session.history_answers)
            assert q == a + (1 if session.pending_question else 0)
            assert session.round == a
            if session.extended_query is not None:
                assert session.round >= 1

        deltas = [b - a for a, b in zip(observed_rounds, observed_rounds[1:])]
        assert all(d in (0, 1) for d in deltas), "round counter jumped"
    verdict("session state machine (10,000 sequences)")


@pytest.mark.skipif(not os.environ.get("LLM_API_KEY"), reason="LLM_API_KEY not set")
def test_acceptance_live_smoke(demo_store):
    """Optional: two live rounds on the running-example query, no content assertions."""
    from apiclarify.gateway import BackendConfig, create_backend

    cfg = BackendConfig(
        kind="remote",
        endpoint=os.environ.get("LLM_ENDPOINT", "https://api.openai.com/v1/chat/completions"),
        model=os.environ.get("LLM_MODEL", "gpt-3.5-turbo"),
        timeout=60.0,
    )
    engine = ClarificationEngine(demo_store, create_backend(cfg))
    session = engine.start_session("return stream from generator in Java.")
    for _ in range(2):
        output = engine.next_question(session)
        assert output.options.options
        engine.submit_answer(session, output.options.options[0])
    transcript = engine.end_session(session)
    assert transcript.qa_pairs == 2
    verdict("live smoke (2 rounds, no parse errors)")
