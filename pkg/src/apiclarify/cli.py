"""Command-line interface: serve, eval, retrieve, import-table, demo.

Exit codes: 2 usage error, 3 data error, 4 backend error.
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click

from . import evaluation
from .engine import ClarificationEngine, EngineConfig, Variant
from .gateway import BackendConfig, GatewayError, create_backend
from .pathtable import NO_PREVIOUS_ANSWER, TableError, flatten, load_table, save_table
from .prompting import PromptLibrary
from .retrieval import RetrievalConfig, find_examples, rank_records_by_query

EXIT_DATA_ERROR = 3
EXIT_BACKEND_ERROR = 4

_VARIANTS = {"full": Variant.FULL, "no-k": Variant.NO_K, "no-kps": Variant.NO_KPS}


def _demo_resource(name: str) -> Path:
    return Path(str(resources.files("apiclarify.data").joinpath("demo").joinpath(name)))


def _load_table_or_die(path: str, format: str = "jsonl"):
    try:
        return load_table(path, format)
    except TableError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA_ERROR)


def _backend_or_die(backend: str, script: str | None, endpoint: str | None, model: str | None):
    try:
        if backend == "scripted":
            if not script:
                raise click.UsageError("--backend scripted requires --script")
            cfg = BackendConfig(kind="scripted", script_path=script)
        else:
            if not endpoint or not model:
                raise click.UsageError("--backend remote requires --endpoint and --model")
            cfg = BackendConfig(kind="remote", endpoint=endpoint, model=model)
        return create_backend(cfg)
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA_ERROR)


@click.group()
def main():
    """Interactive knowledge-guided query clarification for API search."""


@main.command()
@click.option("--table", required=True, type=click.Path(), help="Path table (JSONL).")
@click.option("--aspects", type=click.Path(), default=None, help="Aspect meaning registry JSON.")
@click.option("--templates", type=click.Path(), default=None, help="Prompt template directory.")
@click.option("--backend", type=click.Choice(["scripted", "remote"]), required=True)
@click.option("--script", type=click.Path(), default=None, help="Scripted backend JSONL file.")
@click.option("--endpoint", default=None, help="Remote chat-completion endpoint URL.")
@click.option("--model", default=None, help="Remote model name.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--ui", type=click.Path(), default=None, help="Static UI directory to serve at /.")
@click.option("--n-options", default=5, show_default=True, type=int)
@click.option("--n-apis", default=7, show_default=True, type=int)
@click.option("--max-rounds", default=3, show_default=True, type=int)
@click.option("--top-fraction", default=0.10, show_default=True, type=float)
@click.option("--max-examples", default=5, show_default=True, type=int)
def serve(table, aspects, templates, backend, script, endpoint, model, host, port, ui,
          n_options, n_apis, max_rounds, top_fraction, max_examples):
    """Run the HTTP service (and the chat UI, when --ui points at a build)."""
    import uvicorn

    from .pathtable import load_aspect_meanings
    from .server import create_app

    for path in filter(None, [table, aspects, templates, script, ui]):
        if not Path(path).exists():
            click.echo(f"error: no such path: {path}", err=True)
            sys.exit(EXIT_DATA_ERROR)
    store = _load_table_or_die(table)
    library = PromptLibrary(
        templates_dir=templates,
        meanings=load_aspect_meanings(aspects) if aspects else None,
    )
    cfg = EngineConfig(
        retrieval=RetrievalConfig(top_fraction=top_fraction, max_examples=max_examples),
        n_options=n_options,
        n_apis=n_apis,
        max_rounds=max_rounds,
    )
    engine = ClarificationEngine(
        store, _backend_or_die(backend, script, endpoint, model), library, cfg
    )
    app = create_app(engine, ui_dir=ui)
    uvicorn.run(app, host=host, port=port)


@main.command("eval")
@click.option("--dataset", required=True, type=click.Path())
@click.option("--table", required=True, type=click.Path(), help="Path table (JSONL).")
@click.option("--variant", type=click.Choice(sorted(_VARIANTS)), default="full", show_default=True)
@click.option("--rounds", default=3, show_default=True, type=int)
@click.option("--policy", type=click.Choice(["scripted", "oracle"]), default="scripted",
              show_default=True)
@click.option("--backend", type=click.Choice(["scripted", "remote"]), required=True)
@click.option("--script", type=click.Path(), default=None)
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--out", required=True, type=click.Path(), help="Report JSON output path.")
@click.option("--csv-out", type=click.Path(), default=None, help="Optional CSV table output.")
@click.option("--baselines", type=click.Path(), default=None,
              help="JSON of externally computed baseline numbers to merge into the CSV.")
def eval_command(dataset, table, variant, rounds, policy, backend, script, endpoint, model,
                 out, csv_out, baselines):
    """Evaluate MRR/MAP/Precision/Recall per round over a dataset."""
    try:
        cases = evaluation.load_dataset(dataset)
    except (OSError, evaluation.EvalError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA_ERROR)
    store = _load_table_or_die(table)
    engine = ClarificationEngine(store, _backend_or_die(backend, script, endpoint, model))
    try:
        report = evaluation.run_eval(
            engine,
            cases,
            variant=_VARIANTS[variant],
            policy=policy,
            rounds=rounds,
            dataset_id=Path(dataset).stem,
        )
    except evaluation.PolicyDataMissingError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA_ERROR)
    except GatewayError as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND_ERROR)
    report.write_json(out)
    if csv_out:
        baseline_table = None
        if baselines:
            baseline_table = json.loads(Path(baselines).read_text("utf-8"))
        Path(csv_out).write_text(evaluation.report_to_csv(report, baseline_table), "utf-8")
    for metrics in report.round_metrics:
        click.echo(
            f"round {metrics.round}: mrr={metrics.mrr:.4f} map={metrics.map:.4f} "
            f"precision={metrics.precision:.4f} recall={metrics.recall:.4f} "
            f"(n={metrics.n_cases})"
        )
    if report.failed_count:
        click.echo(f"failed cases: {report.failed_count}", err=True)
        if report.failed_count == len(cases):
            click.echo("every case failed; see the per-case errors in the report", err=True)
            sys.exit(EXIT_BACKEND_ERROR)


@main.command()
@click.option("--table", required=True, type=click.Path(), help="Path table (JSONL).")
@click.option("--query", required=True)
@click.option("--prev-answer", default=NO_PREVIOUS_ANSWER, show_default=True)
@click.option("--top-fraction", default=0.10, show_default=True, type=float)
@click.option("--max-examples", default=5, show_default=True, type=int)
@click.option("--records", is_flag=True,
              help="Rank whole records by query similarity instead of selecting examples.")
def retrieve(table, query, prev_answer, top_fraction, max_examples, records):
    """Debug view of example retrieval for a query."""
    store = _load_table_or_die(table)
    if records:
        if not store.records:
            click.echo("error: table has no records to rank", err=True)
            sys.exit(EXIT_DATA_ERROR)
        for rank, (record, sim) in enumerate(rank_records_by_query(store, query), 1):
            click.echo(f'{rank}. score={sim:.4f} api={record.api} query="{record.query}"')
        return
    units = flatten(store)
    if not units:
        click.echo("error: table has no rounds to retrieve from", err=True)
        sys.exit(EXIT_DATA_ERROR)
    cfg = RetrievalConfig(top_fraction=top_fraction, max_examples=max_examples)
    examples = find_examples(units, query, prev_answer, cfg)
    for rank, ex in enumerate(examples, 1):
        click.echo(
            f"{rank}. aspect={ex.aspect.value} stage1={ex.stage1_score:.4f} "
            f"stage2={ex.stage2_score:.4f} source={ex.source_index} "
            f'query="{ex.query}" prev_answer="{ex.prev_answer}"'
        )


@main.command("import-table")
@click.option("--csv", "csv_path", required=True, type=click.Path(), help="CSV table to import.")
@click.option("--out", required=True, type=click.Path(), help="JSONL output path.")
def import_table(csv_path, out):
    """Convert a CSV path table to the canonical JSONL form."""
    store = _load_table_or_die(csv_path, format="csv")
    save_table(store, out)
    click.echo(f"wrote {len(store)} record(s) to {out}")


@main.command()
@click.option("--table", type=click.Path(), default=None,
              help="Path table (defaults to the bundled demo table).")
@click.option("--script", type=click.Path(), default=None,
              help="Scripted backend file (defaults to the bundled demo script).")
@click.option("--out", type=click.Path(), default=None, help="Write the transcript JSON here.")
def demo(table, script, out):
    """Scripted end-to-end two-round session against the bundled fixtures."""
    table = table or str(_demo_resource("paths.jsonl"))
    script = script or str(_demo_resource("script.jsonl"))
    store = _load_table_or_die(table)
    if not store.records:
        click.echo("error: the demo needs a table with at least one record", err=True)
        sys.exit(EXIT_DATA_ERROR)
    backend = _backend_or_die("scripted", script, None, None)
    engine = ClarificationEngine(store, backend)

    query = store.records[0].query
    answers = ["a pseudorandom number generator", "pseudorandom double values"]
    try:
        session = engine.start_session(query)
        click.echo(f"query: {query}")
        for answer in answers:
            output = engine.next_question(session)
            click.echo(f"[round {session.round + 1}] aspect: {output.aspect.value}")
            click.echo(f"[round {session.round + 1}] question: {output.question}")
            for i, option in enumerate(output.options.options, 1):
                click.echo(f"  option {i}: {option}")
            click.echo(f"[round {session.round + 1}] answer: {answer}")
            extended, recommendations = engine.submit_answer(session, answer)
            click.echo(f"[round {session.round}] extended query: {extended}")
            for i, api in enumerate(recommendations.apis, 1):
                click.echo(f"  api {i}: {api}")
        transcript = engine.end_session(session)
    except GatewayError as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND_ERROR)
    click.echo(f"transcript: {transcript.qa_pairs} Q&A pair(s)")
    if out:
        Path(out).write_text(json.dumps(transcript.to_dict(), indent=2) + "\n", "utf-8")
        click.echo(f"wrote transcript to {out}")


if __name__ == "__main__":
    main()
