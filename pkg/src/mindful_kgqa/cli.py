"""Command-line entry point.

Subcommands: ask, eval, record, compare, import-webqsp, import-metaqa.
Exit status is 0 on success, 1 when some questions ended in an Error
result (reports are still written), and 2 for usage, configuration or
input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .datasets import dump_questions, dump_results, iter_metaqa, iter_webqsp, load_questions
from .errors import DatasetError, KGQAError, TransportError
from .evaluation import EvalReport, compare_reports, evaluate, plot_rows_csv
from .kg_store import DEFAULT_CVT_PREFIX, KnowledgeGraph, load_graph
from .oracle import Cassette, LiveBackend, OracleBackend, PromptLibrary, RecordingBackend, ReplayBackend
from .pipeline import PIPELINES, PipelineConfig, PipelineResult, Question, Status

logger = logging.getLogger("mindful_kgqa")

EXIT_OK = 0
EXIT_PIPELINE_ERRORS = 1
EXIT_USAGE = 2


class UsageError(KGQAError):
    pass


@dataclass
class RunConfig:
    kg_path: Path
    cvt_path: Path | None
    questions_path: Path | None
    pipeline: str
    oracle: str
    k: int
    max_hops: int
    max_validation_iters: int
    report_path: Path | None
    record_path: Path | None
    concurrency: int

    def pipeline_config(self, args: argparse.Namespace) -> PipelineConfig:
        return PipelineConfig(
            max_hops=self.max_hops,
            k=self.k,
            max_validation_iters=self.max_validation_iters,
            fuse_analysis=args.fuse_analysis,
            max_prompt_triples=args.max_prompt_triples,
        )


def _run_config(args: argparse.Namespace) -> RunConfig:
    for name in ("kg", "cvt", "questions"):
        path = getattr(args, name, None)
        if path is not None and not Path(path).exists():
            raise UsageError(f"--{name}: no such file: {path}")
    if args.concurrency < 1:
        raise UsageError("--concurrency must be >= 1")
    oracle = getattr(args, "oracle", "live")
    if not (oracle == "live" or oracle.startswith("replay:")):
        raise UsageError("--oracle must be 'live' or 'replay:<cassette path>'")
    try:
        run = RunConfig(
            kg_path=Path(args.kg),
            cvt_path=Path(args.cvt) if args.cvt else None,
            questions_path=Path(args.questions) if getattr(args, "questions", None) else None,
            pipeline=args.pipeline,
            oracle=oracle,
            k=args.k,
            max_hops=args.max_hops,
            max_validation_iters=args.max_validation_iters,
            report_path=Path(args.report) if getattr(args, "report", None) else None,
            record_path=Path(args.cassette_out) if getattr(args, "cassette_out", None) else None,
            concurrency=args.concurrency,
        )
        run.pipeline_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return run


def _load_kg(run: RunConfig, args: argparse.Namespace) -> KnowledgeGraph:
    prefix = args.cvt_prefix or None
    return load_graph(run.kg_path, run.cvt_path, cvt_prefix=prefix)


def _backend(run: RunConfig, args: argparse.Namespace) -> OracleBackend:
    if run.oracle.startswith("replay:"):
        return ReplayBackend(Cassette.load(run.oracle[len("replay:"):]))
    prompts = PromptLibrary.from_directory(args.prompts) if args.prompts else None
    return LiveBackend(args.endpoint or "", args.model or "", prompts=prompts,
                       max_in_flight=args.max_in_flight)


def _run_all(kg: KnowledgeGraph, questions: list[Question], run: RunConfig,
             config: PipelineConfig, backend: OracleBackend) -> list[PipelineResult]:
    answer = PIPELINES[run.pipeline]
    if run.concurrency == 1 or len(questions) < 2:
        return [answer(kg, q, config, backend) for q in questions]
    with ThreadPoolExecutor(max_workers=run.concurrency) as pool:
        return list(pool.map(lambda q: answer(kg, q, config, backend), questions))


def _write_outputs(report: EvalReport, results: list[PipelineResult], run: RunConfig,
                   args: argparse.Namespace) -> None:
    if run.report_path is not None:
        run.report_path.write_text(report.to_json(), encoding="utf-8")
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            dump_results(results, fh)
    if args.plot_csv:
        path = Path(args.plot_csv)
        text = plot_rows_csv([report])
        if path.exists() and path.stat().st_size:
            text = text.split("\n", 1)[1]
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(text)
        else:
            path.write_text(text, encoding="utf-8")


def _dataset_name(args: argparse.Namespace, run: RunConfig) -> str:
    if args.dataset_name:
        return args.dataset_name
    return run.questions_path.stem if run.questions_path else ""


def cmd_ask(args: argparse.Namespace) -> int:
    run = _run_config(args)
    kg = _load_kg(run, args)
    if args.question_id:
        if run.questions_path is None:
            raise UsageError("--question-id needs --questions")
        matches = [q for q in load_questions(run.questions_path) if q.id == args.question_id]
        if not matches:
            raise UsageError(f"question id {args.question_id!r} not found")
        q = matches[0]
    elif args.question:
        q = Question(id="ask", text=args.question, topic_entities=tuple(args.topic or ()))
    else:
        raise UsageError("give --question TEXT or --question-id ID")
    result = PIPELINES[run.pipeline](kg, q, run.pipeline_config(args), _backend(run, args))
    if result.status is Status.ANSWERED:
        for a in result.answers:
            print(a)
    else:
        print(f"({result.status.value.lower()}: {result.reason})")
    if args.trace:
        print(json.dumps(result.to_dict(), indent=2, ensure_ascii=False))
    return EXIT_PIPELINE_ERRORS if result.status is Status.ERROR else EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    run = _run_config(args)
    if run.questions_path is None:
        raise UsageError("eval needs --questions")
    kg = _load_kg(run, args)
    questions = load_questions(run.questions_path)
    backend = _backend(run, args)
    results = _run_all(kg, questions, run, run.pipeline_config(args), backend)
    report = evaluate(results, questions, k=args.hits_k, kg=kg, pipeline=run.pipeline,
                      dataset=_dataset_name(args, run))
    _write_outputs(report, results, run, args)
    print(report.summary_line())
    return EXIT_PIPELINE_ERRORS if report.errors else EXIT_OK


def cmd_record(args: argparse.Namespace) -> int:
    args.oracle = "live"
    run = _run_config(args)
    if run.questions_path is None or run.record_path is None:
        raise UsageError("record needs --questions and --cassette-out")
    kg = _load_kg(run, args)
    questions = load_questions(run.questions_path)
    cassette = Cassette.load(run.record_path) if run.record_path.exists() else Cassette()
    recorder = RecordingBackend(_backend(run, args), cassette)
    try:
        results = _run_all(kg, questions, run, run.pipeline_config(args), recorder)
    except TransportError as exc:
        cassette.save(run.record_path)
        print(f"error: {exc} (partial cassette with {len(cassette)} entries written to "
              f"{run.record_path})", file=sys.stderr)
        return EXIT_USAGE
    cassette.save(run.record_path)
    report = evaluate(results, questions, k=args.hits_k, kg=kg, pipeline=run.pipeline,
                      dataset=_dataset_name(args, run))
    _write_outputs(report, results, run, args)
    print(report.summary_line())
    print(f"recorded {len(cassette)} cassette entries to {run.record_path}")
    return EXIT_PIPELINE_ERRORS if report.errors else EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    reports = []
    for path in (args.mindful, args.baseline):
        try:
            reports.append(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read report {path}: {exc}") from exc
    comparison = compare_reports(*reports)
    if args.out:
        Path(args.out).write_text(comparison.to_csv(), encoding="utf-8")
    print(f"delta hits@1={comparison.delta:+.4f} wins={comparison.wins} "
          f"losses={comparison.losses} ties={comparison.ties}")
    return EXIT_OK


def cmd_import_webqsp(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.input).read_text(encoding="utf-8-sig"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read WebQSP file {args.input}: {exc}") from exc
    questions = list(iter_webqsp(data))
    if args.limit is not None:
        questions = questions[: args.limit]
    with open(args.output, "w", encoding="utf-8") as fh:
        n = dump_questions(questions, fh)
    print(f"wrote {n} questions to {args.output}")
    return EXIT_OK


def cmd_import_metaqa(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as fh:
        questions = list(iter_metaqa(fh, prefix=args.prefix))
    if args.limit is not None:
        questions = questions[: args.limit]
    with open(args.output, "w", encoding="utf-8") as fh:
        n = dump_questions(questions, fh)
    print(f"wrote {n} questions to {args.output}")
    return EXIT_OK


def _add_run_args(p: argparse.ArgumentParser, oracle: bool = True) -> None:
    p.add_argument("--kg", required=True, help="triple file (head<TAB>relation<TAB>tail)")
    p.add_argument("--cvt", help="file listing CVT node ids, one per line")
    p.add_argument("--cvt-prefix", default=DEFAULT_CVT_PREFIX,
                   help="ids with this prefix are CVT nodes ('' disables)")
    p.add_argument("--questions", help="questions in JSON Lines")
    p.add_argument("--pipeline", choices=sorted(PIPELINES), default="mindful")
    if oracle:
        p.add_argument("--oracle", default="live", help="'live' or 'replay:<cassette path>'")
    p.add_argument("--endpoint", help="chat-completion base URL for the live oracle")
    p.add_argument("--model", help="model name for the live oracle")
    p.add_argument("--prompts", help="directory of prompt templates (default: bundled)")
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--k", type=int, default=3, help="relations kept per hop")
    p.add_argument("--max-hops", type=int, default=3)
    p.add_argument("--max-validation-iters", type=int, default=2)
    p.add_argument("--max-prompt-triples", type=int, default=64)
    p.add_argument("--fuse-analysis", action="store_true")
    p.add_argument("--concurrency", type=int, default=1)


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", help="write the evaluation report JSON here")
    p.add_argument("--trace-out", help="write one PipelineResult per line (JSON Lines)")
    p.add_argument("--plot-csv", help="append (pipeline, dataset, hits_at_1) to this CSV")
    p.add_argument("--dataset-name", help="dataset label in the report (default: questions file stem)")
    p.add_argument("--hits-k", type=int, default=1, help="k for Hits@k scoring")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mindful-kgqa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ask", help="answer one question")
    _add_run_args(p)
    p.add_argument("--question", help="question text")
    p.add_argument("--topic", action="append", help="topic entity id (repeatable)")
    p.add_argument("--question-id", help="answer this id from --questions")
    p.add_argument("--trace", action="store_true", help="print the full step trace")
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("eval", help="answer a question file and score it")
    _add_run_args(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("record", help="run against the live oracle and record a cassette")
    _add_run_args(p, oracle=False)
    _add_output_args(p)
    p.add_argument("--cassette-out", required=True, help="cassette to create or extend")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("compare", help="compare a mindful report with a baseline report")
    p.add_argument("--mindful", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--out", help="write the per-question comparison CSV here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("import-webqsp", help="convert a WebQSP JSON file to JSON Lines")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_import_webqsp)

    p = sub.add_parser("import-metaqa", help="convert MetaQA question<TAB>answers text to JSON Lines")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--limit", type=int)
    p.add_argument("--prefix", default="metaqa", help="id prefix for generated question ids")
    p.set_defaults(func=cmd_import_metaqa)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (KGQAError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
