"""Stage-oriented command line: ingest | clean | tag | sentiment | interlink |
robustness | eval | report.

Stages communicate through files in the configured output directory, never
in memory, so any stage can be rerun or swapped.  All diagnostics go to
stderr as JSON lines.  Exit codes: 0 success, 1 validation problem,
2 backend/network failure, 3 parse failures above the configured tolerance.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .analytics import (
    AnalyticsError,
    EvalReport,
    SdgEvalRow,
    SentimentDistribution,
    build_interlinkage_graph,
    category_shares,
    country_scores,
    expected_sentiment,
    load_gold_csv,
    match_rate,
)
from .backends import (
    BackendError,
    HttpChatBackend,
    MockChatBackend,
    MockSentimentBackend,
    RemoteEmbeddingBackend,
    RemoteSegmenter,
    RemoteSentimentBackend,
)
from .cleaning import CleaningConfig, HeuristicSegmenter, clean_pipeline
from .config import ConfigError, PipelineConfig, load_config, validate_config
from .ingest import EmptyDocumentError, IngestError, fetch_manifest, load_blocks, make_block
from .orchestrator import (
    CompletionClient,
    StageParseError,
    interlink_extract,
    llm_sdg_set,
    llm_sentiment_label,
    run_robustness_protocol,
)
from .parsing import InterlinkageRecord, ParseError, ParseWarning
from .prompts import VARIANT_IDS, PromptError, get_template
from .report import ExportError, export_report
from .similarity import SimilarityError, TfidfBackend, assign_sdg, load_descriptions

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BACKEND = 2
EXIT_PARSE = 3

DOCUMENTS_JSON = "documents.json"
BLOCKS_DIR = "blocks"
PARAGRAPHS_JSONL = "paragraphs.jsonl"
CLEANING_REPORTS_JSON = "cleaning_reports.json"
ASSIGNMENTS_JSONL = "assignments.jsonl"
SENTIMENT_JSONL = "sentiment.jsonl"
INTERLINK_JSONL = "interlinkages.jsonl"
AGREEMENT_JSON = "agreement_report.json"
EVAL_JSON = "eval_report.json"
REPORT_DIR = "report"


class ParseToleranceExceeded(Exception):
    pass


def log_event(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}, ensure_ascii=False), file=sys.stderr)


def _log_parse_warnings(stage: str, para_id: str, warnings: list[ParseWarning]) -> None:
    for w in warnings:
        log_event("parse_warning", stage=stage, para_id=para_id, rule=w.rule, message=w.message)


def write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        raise ConfigError(f"missing stage output: {path} (run the earlier stages first)")
    with path.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _outdir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_chat_client(cfg: PipelineConfig, use_cache: bool = True) -> CompletionClient:
    if cfg.backend.kind == "mock":
        backend = MockChatBackend()
    else:
        backend = HttpChatBackend(
            url=cfg.backend.url,
            model_name=cfg.backend.model,
            api_key=os.environ.get(cfg.backend.api_key_env),
        )
    return CompletionClient(
        backend,
        cache_dir=cfg.resolved_cache_dir() if use_cache else None,
        temperature=cfg.backend.temperature,
        max_output_tokens=cfg.backend.max_output_tokens,
        max_attempts=cfg.backend.max_attempts,
        max_in_flight=cfg.backend.max_in_flight,
        min_interval=cfg.backend.min_interval,
    )


def _check_tolerance(cfg: PipelineConfig, stage: str, failures: int, total: int) -> None:
    if total == 0:
        return
    fraction = failures / total
    if fraction > cfg.parse_tolerance:
        raise ParseToleranceExceeded(
            f"{stage}: {failures}/{total} paragraphs failed parsing "
            f"({fraction:.1%} > tolerance {cfg.parse_tolerance:.1%})"
        )


# --- stages -----------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig) -> None:
    out = _outdir(cfg)
    records = fetch_manifest(cfg.manifest)
    base = Path(cfg.manifest).parent if not cfg.manifest.startswith(("http://", "https://")) else Path(".")
    doc_rows = []
    blocks_dir = out / BLOCKS_DIR
    blocks_dir.mkdir(exist_ok=True)
    for rec in records:
        source = Path(rec.source_uri)
        if not source.is_absolute():
            source = base / source
        n_blocks = 0
        try:
            blocks = load_blocks(rec, source)
        except EmptyDocumentError:
            log_event("empty_document", doc_id=rec.doc_id, source=str(source))
            blocks = []
        if blocks:
            n_blocks = len(blocks)
            lines = []
            for b in blocks:
                row: dict = {"index": b.block_index}
                if b.page is not None:
                    row["page"] = b.page
                row.update(
                    text=b.text, word_count=b.word_count, numeric_char_ratio=b.numeric_char_ratio
                )
                lines.append(row)
            write_jsonl(blocks_dir / f"{rec.doc_id}.jsonl", lines)
        doc_rows.append(
            {
                "doc_id": rec.doc_id,
                "country": rec.country,
                "doc_type": rec.doc_type,
                "language": rec.language,
                "source_uri": rec.source_uri,
                "title": rec.title,
                "submission_round": rec.submission_round,
                "n_blocks": n_blocks,
            }
        )
    (out / DOCUMENTS_JSON).write_text(
        json.dumps(doc_rows, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    log_event("stage_done", stage="ingest", documents=len(doc_rows))


def cmd_clean(cfg: PipelineConfig) -> None:
    out = _outdir(cfg)
    docs = json.loads((out / DOCUMENTS_JSON).read_text(encoding="utf-8")) if (out / DOCUMENTS_JSON).exists() else None
    if docs is None:
        raise ConfigError(f"missing stage output: {out / DOCUMENTS_JSON} (run ingest first)")
    cleaning_config = CleaningConfig(caption_keywords=tuple(cfg.caption_keywords))
    segmenter = (
        RemoteSegmenter(cfg.model_service_url) if cfg.segmenter == "remote" else HeuristicSegmenter()
    )
    para_rows = []
    reports = {}
    for doc in docs:
        blocks_path = out / BLOCKS_DIR / f"{doc['doc_id']}.jsonl"
        if not blocks_path.exists():
            log_event("no_blocks", doc_id=doc["doc_id"])
            continue
        blocks = [
            make_block(row["index"], row["text"], row.get("page"))
            for row in read_jsonl(blocks_path)
        ]
        paragraphs, report = clean_pipeline(blocks, doc["doc_id"], cleaning_config, segmenter)
        if report.segmenter_fallback:
            log_event("segmenter_fallback", doc_id=doc["doc_id"])
        reports[doc["doc_id"]] = report.as_dict()
        for p in paragraphs:
            para_rows.append(
                {
                    "para_id": p.para_id,
                    "doc_id": p.doc_id,
                    "text": p.text,
                    "word_count": p.word_count,
                    "source_blocks": list(p.source_blocks),
                }
            )
    write_jsonl(out / PARAGRAPHS_JSONL, para_rows)
    (out / CLEANING_REPORTS_JSON).write_text(
        json.dumps(reports, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    log_event("stage_done", stage="clean", paragraphs=len(para_rows))


def cmd_tag(cfg: PipelineConfig) -> None:
    out = _outdir(cfg)
    paragraphs = read_jsonl(out / PARAGRAPHS_JSONL)
    rows = []
    failures = 0
    if cfg.strategy == "similarity":
        descriptions = load_descriptions(cfg.descriptions_path)
        backend = (
            RemoteEmbeddingBackend(cfg.model_service_url)
            if cfg.similarity_backend == "remote"
            else TfidfBackend()
        )
        for para in paragraphs:
            assignment = assign_sdg(para["para_id"], para["text"], descriptions, backend)
            rows.append(
                {
                    "para_id": para["para_id"],
                    "doc_id": para["doc_id"],
                    "strategy": "similarity",
                    "sdgs": [assignment.best],
                    "best": assignment.best,
                    "best_score": assignment.best_score,
                    "scores": list(assignment.scores),
                }
            )
    else:
        client = build_chat_client(cfg)
        for para in paragraphs:
            warnings: list[ParseWarning] = []
            try:
                sdgs = llm_sdg_set(para["text"], client, cfg.corrected_prompts, warnings)
            except StageParseError as exc:
                failures += 1
                log_event("parse_failure", stage="tag", para_id=para["para_id"], message=str(exc))
                sdgs = None
            _log_parse_warnings("tag", para["para_id"], warnings)
            rows.append(
                {
                    "para_id": para["para_id"],
                    "doc_id": para["doc_id"],
                    "strategy": "llm",
                    "sdgs": list(sdgs) if sdgs is not None else None,
                }
            )
        log_event("backend_stats", stage="tag", sends=client.stats.sends, cache_hits=client.stats.cache_hits)
    write_jsonl(out / ASSIGNMENTS_JSONL, rows)
    log_event("stage_done", stage="tag", paragraphs=len(rows), parse_failures=failures)
    _check_tolerance(cfg, "tag", failures, len(paragraphs))


def cmd_sentiment(cfg: PipelineConfig) -> None:
    out = _outdir(cfg)
    paragraphs = read_jsonl(out / PARAGRAPHS_JSONL)
    rows = []
    failures = 0
    if cfg.strategy == "llm":
        client = build_chat_client(cfg)
        for para in paragraphs:
            try:
                label = llm_sentiment_label(para["text"], client, cfg.corrected_prompts)
            except StageParseError as exc:
                failures += 1
                log_event("parse_failure", stage="sentiment", para_id=para["para_id"], message=str(exc))
                rows.append({"para_id": para["para_id"], "doc_id": para["doc_id"], "label": None})
                continue
            dist = SentimentDistribution.from_label(label)
            rows.append(
                {
                    "para_id": para["para_id"],
                    "doc_id": para["doc_id"],
                    "p0": dist.p0,
                    "p1": dist.p1,
                    "p2": dist.p2,
                    "expected": expected_sentiment(dist),
                    "label": label,
                }
            )
        log_event(
            "backend_stats", stage="sentiment", sends=client.stats.sends, cache_hits=client.stats.cache_hits
        )
    else:
        backend = (
            RemoteSentimentBackend(cfg.model_service_url)
            if cfg.sentiment_backend == "remote"
            else MockSentimentBackend()
        )
        for para in paragraphs:
            p0, p1, p2 = backend.classify(para["text"])
            dist = SentimentDistribution(p0, p1, p2)
            rows.append(
                {
                    "para_id": para["para_id"],
                    "doc_id": para["doc_id"],
                    "p0": dist.p0,
                    "p1": dist.p1,
                    "p2": dist.p2,
                    "expected": expected_sentiment(dist),
                    "label": None,
                }
            )
    write_jsonl(out / SENTIMENT_JSONL, rows)
    log_event("stage_done", stage="sentiment", paragraphs=len(rows), parse_failures=failures)
    _check_tolerance(cfg, "sentiment", failures, len(paragraphs))


def cmd_interlink(cfg: PipelineConfig) -> None:
    out = _outdir(cfg)
    paragraphs = read_jsonl(out / PARAGRAPHS_JSONL)
    descriptions = load_descriptions(cfg.descriptions_path)
    client = build_chat_client(cfg)
    rows = []
    failures = 0
    for para in paragraphs:
        warnings: list[ParseWarning] = []
        try:
            result = interlink_extract(
                para["text"], client, descriptions, cfg.corrected_prompts, warnings
            )
        except StageParseError as exc:
            failures += 1
            log_event("parse_failure", stage="interlink", para_id=para["para_id"], message=str(exc))
            continue
        _log_parse_warnings("interlink", para["para_id"], warnings)
        if result.partial:
            log_event(
                "partial_interlinkage",
                para_id=para["para_id"],
                errors=list(result.pair_errors),
            )
        rows.append(
            {
                "para_id": para["para_id"],
                "doc_id": para["doc_id"],
                "main": result.main,
                "main_reason": result.main_reason,
                "secondaries": [[n, reason] for n, reason in result.secondaries],
                "partial": result.partial,
                "records": [
                    {
                        "a": r.sdg_a,
                        "b": r.sdg_b,
                        "relationship": r.relationship,
                        "directionality": r.directionality,
                        "explanation": r.explanation,
                    }
                    for r in result.records
                ],
            }
        )
    log_event(
        "backend_stats", stage="interlink", sends=client.stats.sends, cache_hits=client.stats.cache_hits
    )
    write_jsonl(out / INTERLINK_JSONL, rows)
    log_event("stage_done", stage="interlink", paragraphs=len(rows), parse_failures=failures)
    _check_tolerance(cfg, "interlink", failures, len(paragraphs))


def cmd_robustness(cfg: PipelineConfig) -> None:
    out = _outdir(cfg)
    paragraphs = read_jsonl(out / PARAGRAPHS_JSONL)
    rng = random.Random(cfg.robustness.seed)
    k = min(cfg.robustness.sample_size, len(paragraphs))
    sampled_ids = {p["para_id"] for p in rng.sample(paragraphs, k)}
    sample = [(p["para_id"], p["text"]) for p in paragraphs if p["para_id"] in sampled_ids]
    variants = [get_template(v, cfg.corrected_prompts) for v in VARIANT_IDS]
    # Fresh calls are the point here: no cache, every run hits the backend.
    client = build_chat_client(cfg, use_cache=False)
    report = run_robustness_protocol(
        variants, sample, client, runs=cfg.robustness.runs, shuffle_seed=cfg.robustness.seed
    )
    (out / AGREEMENT_JSON).write_text(
        json.dumps(report.as_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    log_event(
        "stage_done",
        stage="robustness",
        sample=len(sample),
        requests=report.total_requests,
        order_sensitivity=report.order_sensitivity,
    )


def cmd_eval(cfg: PipelineConfig, gold_path: str, predictions_path: str | None) -> None:
    out = _outdir(cfg)
    gold_warnings: list[str] = []
    gold = load_gold_csv(gold_path, gold_warnings)
    for message in gold_warnings:
        log_event("gold_coarsened", message=message)
    pred_file = Path(predictions_path) if predictions_path else out / ASSIGNMENTS_JSONL
    predictions_all = {
        row["para_id"]: frozenset(row["sdgs"] or []) for row in read_jsonl(pred_file)
    }
    missing = [item for item in gold if item not in predictions_all]
    if missing:
        raise AnalyticsError(f"gold items without predictions: {missing[:5]}")
    predictions = {item: predictions_all[item] for item in gold}
    report = match_rate(predictions, gold)
    (out / EVAL_JSON).write_text(
        json.dumps(report.as_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    log_event(
        "stage_done",
        stage="eval",
        n_items=report.n_items,
        match_rate=report.match_rate,
        precision=report.precision,
    )


def _eval_from_dict(payload: dict) -> EvalReport:
    return EvalReport(
        match_rate=payload["match_rate"],
        precision=payload["precision"],
        n_items=payload["n_items"],
        per_sdg={
            int(sdg): SdgEvalRow(
                gold_count=row["gold_count"],
                predicted_count=row["predicted_count"],
                recall=row["recall"],
                bias=row["bias"],
            )
            for sdg, row in payload["per_sdg"].items()
        },
    )


def cmd_report(cfg: PipelineConfig) -> None:
    out = _outdir(cfg)
    docs = json.loads((out / DOCUMENTS_JSON).read_text(encoding="utf-8"))
    country_by_doc = {d["doc_id"]: d["country"] for d in docs}

    sentiments = []
    for row in read_jsonl(out / SENTIMENT_JSONL):
        if row.get("expected") is None:
            continue
        sentiments.append((country_by_doc[row["doc_id"]], row["expected"]))
    scores = country_scores(sentiments) if sentiments else []

    pairs = []
    for row in read_jsonl(out / ASSIGNMENTS_JSONL):
        for sdg in row.get("sdgs") or []:
            if sdg != 0:
                pairs.append((country_by_doc[row["doc_id"]], sdg))
    shares = category_shares(pairs) if pairs else {}

    records = []
    interlink_path = out / INTERLINK_JSONL
    if interlink_path.exists():
        for row in read_jsonl(interlink_path):
            for r in row["records"]:
                records.append(
                    InterlinkageRecord(
                        r["a"], r["b"], r["relationship"], r["directionality"], r["explanation"]
                    )
                )
    graph = build_interlinkage_graph(records)

    eval_report = None
    eval_path = out / EVAL_JSON
    if eval_path.exists():
        eval_report = _eval_from_dict(json.loads(eval_path.read_text(encoding="utf-8")))

    written = export_report(scores, shares, graph, eval_report, out / REPORT_DIR)
    log_event("stage_done", stage="report", files=sorted(written))


# --- entry point --------------------------------------------------------------

def _add_common_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # Shared flags are registered on the root parser and again on every
    # subparser (with SUPPRESS defaults) so they work in either position.
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="pipeline config file (YAML)")
    parser.add_argument(
        "--strategy", choices=["similarity", "llm"], default=default, help="override config strategy"
    )
    parser.add_argument(
        "--backend", choices=["mock", "http"], default=default, help="override chat backend kind"
    )
    parser.add_argument("--seed", type=int, default=default, help="override robustness seed")
    parser.add_argument("--out", default=default, help="override output directory")
    parser.add_argument(
        "--corrected-prompts",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="use typo-corrected prompt bodies instead of the published ones",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdglens",
        description="SDG tagging, climate sentiment and SDG interlinkages for policy corpora",
    )
    _add_common_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ingest", "clean", "tag", "sentiment", "interlink", "robustness", "report"):
        _add_common_flags(sub.add_parser(name), suppress=True)
    eval_parser = sub.add_parser("eval")
    _add_common_flags(eval_parser, suppress=True)
    eval_parser.add_argument("--gold", required=True, help="gold baseline CSV")
    eval_parser.add_argument("--predictions", help="predictions JSONL (default: tag output)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.config is None:
        build_parser().error("--config is required")
    try:
        cfg = load_config(args.config)
        if args.strategy:
            cfg.strategy = args.strategy
        if args.backend:
            cfg.backend.kind = args.backend
        if args.seed is not None:
            cfg.robustness.seed = args.seed
        if args.out:
            cfg.output_dir = args.out
        if args.corrected_prompts:
            cfg.corrected_prompts = True
        validate_config(cfg)

        if args.command == "ingest":
            cmd_ingest(cfg)
        elif args.command == "clean":
            cmd_clean(cfg)
        elif args.command == "tag":
            cmd_tag(cfg)
        elif args.command == "sentiment":
            cmd_sentiment(cfg)
        elif args.command == "interlink":
            cmd_interlink(cfg)
        elif args.command == "robustness":
            cmd_robustness(cfg)
        elif args.command == "eval":
            cmd_eval(cfg, args.gold, args.predictions)
        elif args.command == "report":
            cmd_report(cfg)
        return EXIT_OK
    except (ParseToleranceExceeded, StageParseError) as exc:
        log_event("error", kind="parse", message=str(exc))
        return EXIT_PARSE
    except BackendError as exc:
        log_event("error", kind="backend", message=str(exc))
        return EXIT_BACKEND
    except (
        ConfigError,
        IngestError,
        AnalyticsError,
        SimilarityError,
        PromptError,
        ParseError,
        ExportError,
        OSError,
        ValueError,
    ) as exc:
        log_event("error", kind="validation", message=str(exc))
        return EXIT_VALIDATION


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
