"""Stage orchestration: artifact paths, atomic writes, run manifests.

Every stage reads its inputs from disk, writes its outputs atomically
(temp file + rename) and records a manifest with the config hash, seed,
input hashes, and output counts. Manifests carry no timestamps, so a rerun
with the same config, seed, and inputs reproduces every artifact byte for
byte. Corpus-scanning stages shard the input into fixed-size line chunks;
chunk results are consumed in input order, so output does not depend on
the worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import multiprocessing
import os
from dataclasses import dataclass, field
from datetime import date as Date
from functools import partial
from pathlib import Path
from typing import IO, Callable, Iterable, Iterator

from .batches import CorruptionConfig, write_batches
from .config import PipelineConfig, config_sha256
from .errors import MissingInputError, PipelineError
from .fewshot import read_embeddings, run_fewshot
from .groups import (
    GroupConfig,
    StatementIndex,
    assemble_groups,
    group_to_record,
    read_groups,
    statement_from_record,
    statement_to_record,
)
from .ingest import ParseCounters, parse_corpus_stream, parse_event_file
from .model import extract_document_statements
from .pairsel import (
    PROVENANCE_DATE_WINDOW,
    PROVENANCE_EVENT,
    PROVENANCE_RANDOM,
    PairFilter,
    SelectedPair,
    select_date_window_pairs,
    select_event_guided_pairs,
    select_random_pairs,
    windows_for_range,
)
from .stats import (
    DailyStatsIndex,
    DateWindow,
    PairStats,
    merge_daily_stats,
    stats_to_lines,
)

log = logging.getLogger(__name__)

CHUNK_LINES = 20000


class ArtifactPaths:
    """Canonical artifact locations under one output directory."""

    def __init__(self, output_dir: str | Path):
        self.root = Path(output_dir)
        self.statements = self.root / "statements.jsonl"
        self.daily_stats = self.root / "daily_stats.jsonl"
        self.selected_pairs = self.root / "selected_pairs.jsonl"
        self.groups = self.root / "groups.jsonl"
        self.batches = self.root / "batches.jsonl"
        self.eval_report = self.root / "eval_report.json"
        self.pipeline_manifest = self.root / "pipeline_manifest.json"

    def manifest_for(self, stage: str) -> Path:
        return self.root / f"{stage}_manifest.json"

    def ensure_root(self):
        self.root.mkdir(parents=True, exist_ok=True)


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def atomic_write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


class AtomicLineWriter:
    """Write lines to <path>.tmp, hashing as it goes; rename on close."""

    def __init__(self, path: Path):
        self.path = path
        self.tmp = path.with_name(path.name + ".tmp")
        self.fh: IO[str] = open(self.tmp, "w", encoding="utf-8")
        self.digest = hashlib.sha256()
        self.n_lines = 0

    def write_line(self, line: str):
        self.fh.write(line)
        self.fh.write("\n")
        self.digest.update(line.encode("utf-8"))
        self.digest.update(b"\n")
        self.n_lines += 1

    def write_block(self, text: str):
        self.fh.write(text)
        self.digest.update(text.encode("utf-8"))
        self.n_lines += text.count("\n")

    def commit(self) -> str:
        self.fh.close()
        os.replace(self.tmp, self.path)
        return self.digest.hexdigest()

    def abort(self):
        if not self.fh.closed:
            self.fh.close()
        if self.tmp.exists():
            self.tmp.unlink()


def write_manifest(path: Path, manifest: dict):
    atomic_write_text(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def require_input(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not str(path):
        raise MissingInputError(f"{what}: no path configured")
    if not p.is_file():
        raise MissingInputError(f"{what}: {p} does not exist")
    return p


def _base_manifest(stage: str, cfg: PipelineConfig) -> dict:
    return {
        "stage": stage,
        "format_version": 1,
        "config_sha256": config_sha256(cfg),
        "seed": cfg.seed,
        "inputs": {},
        "outputs": {},
        "counts": {},
    }


# ---------------------------------------------------------------------------
# Corpus scanning (extract and stats share one chunked pass).

@dataclass(slots=True)
class ChunkResult:
    articles: int = 0
    sentences: int = 0
    mentions: int = 0
    candidate_pairs: int = 0
    degenerate_pairs: int = 0
    statements: int = 0
    skipped_records: int = 0
    statement_text: str = ""
    distinct_pairs: set = field(default_factory=set)
    daily: dict | None = None


def _process_chunk(lines: list[str], want_statements: bool, want_stats: bool) -> ChunkResult:
    from .stats import accumulate_daily_stats

    result = ChunkResult()
    counters = ParseCounters()
    docs = list(parse_corpus_stream(lines, strict=False, counters=counters))
    result.skipped_records = counters.skipped
    out_lines: list[str] = []
    for doc in docs:
        result.articles += 1
        result.sentences += len(doc.sentences)
        for sentence in doc.sentences:
            m = len(sentence.mentions)
            result.mentions += m
            result.candidate_pairs += m * (m - 1) // 2
        for stmt in extract_document_statements(doc):
            result.statements += 1
            result.distinct_pairs.add((stmt.pair.key_a, stmt.pair.key_b))
            if want_statements:
                out_lines.append(json.dumps(statement_to_record(stmt), separators=(",", ":")))
    result.degenerate_pairs = result.candidate_pairs - result.statements
    if want_statements and out_lines:
        result.statement_text = "\n".join(out_lines) + "\n"
    if want_stats:
        result.daily = accumulate_daily_stats(docs)
    return result


def _read_chunks(path: Path) -> Iterator[list[str]]:
    chunk: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            chunk.append(line)
            if len(chunk) >= CHUNK_LINES:
                yield chunk
                chunk = []
    if chunk:
        yield chunk


def _map_chunks(chunks: Iterator[list[str]], fn: Callable, workers: int) -> Iterator[ChunkResult]:
    if workers <= 1:
        yield from map(fn, chunks)
        return
    ctx = multiprocessing.get_context("spawn")
    with ctx.Pool(processes=workers) as pool:
        yield from pool.imap(fn, chunks, chunksize=1)


def scan_corpus(cfg: PipelineConfig, want_statements: bool, want_stats: bool) -> dict:
    """One chunked pass over the corpus; writes the statements artifact,
    the daily stats artifact, or both, plus their stage manifests."""
    corpus = require_input(cfg.paths.corpus, "corpus")
    paths = ArtifactPaths(cfg.paths.output_dir)
    paths.ensure_root()
    corpus_sha = sha256_file(corpus)

    totals = ChunkResult()
    daily_shards: list[dict] = []
    writer = AtomicLineWriter(paths.statements) if want_statements else None
    fn = partial(_process_chunk, want_statements=want_statements, want_stats=want_stats)
    try:
        for result in _map_chunks(_read_chunks(corpus), fn, cfg.workers):
            totals.articles += result.articles
            totals.sentences += result.sentences
            totals.mentions += result.mentions
            totals.candidate_pairs += result.candidate_pairs
            totals.degenerate_pairs += result.degenerate_pairs
            totals.statements += result.statements
            totals.skipped_records += result.skipped_records
            totals.distinct_pairs.update(result.distinct_pairs)
            if writer is not None and result.statement_text:
                writer.write_block(result.statement_text)
            if want_stats and result.daily:
                daily_shards.append(result.daily)
    except Exception:
        if writer is not None:
            writer.abort()
        raise

    manifests = {}
    counts = {
        "articles": totals.articles,
        "sentences": totals.sentences,
        "mentions": totals.mentions,
        "candidate_pairs": totals.candidate_pairs,
        "degenerate_pairs": totals.degenerate_pairs,
        "statements": totals.statements,
        "distinct_pairs": len(totals.distinct_pairs),
        "skipped_records": totals.skipped_records,
    }
    if writer is not None:
        statements_sha = writer.commit()
        manifest = _base_manifest("extract", cfg)
        manifest["inputs"]["corpus"] = {"path": str(corpus), "sha256": corpus_sha}
        manifest["outputs"]["statements"] = {
            "path": paths.statements.name, "sha256": statements_sha}
        manifest["counts"] = dict(counts)
        write_manifest(paths.manifest_for("extract"), manifest)
        manifests["extract"] = manifest
    if want_stats:
        daily = merge_daily_stats(daily_shards)
        stats_writer = AtomicLineWriter(paths.daily_stats)
        pair_entries = 0
        entity_entries = 0
        try:
            for day in sorted(daily):
                block = daily[day]
                pair_entries += len(block.pair_article_counts)
                entity_entries += len(block.entity_article_counts)
                for line in stats_to_lines(block):
                    stats_writer.write_line(line)
        except Exception:
            stats_writer.abort()
            raise
        stats_sha = stats_writer.commit()
        manifest = _base_manifest("stats", cfg)
        manifest["inputs"]["corpus"] = {"path": str(corpus), "sha256": corpus_sha}
        manifest["outputs"]["daily_stats"] = {
            "path": paths.daily_stats.name, "sha256": stats_sha}
        manifest["counts"] = {
            "articles": totals.articles,
            "days": len(daily),
            "entity_entries": entity_entries,
            "pair_entries": pair_entries,
            "distinct_pairs": len(totals.distinct_pairs),
            "skipped_records": totals.skipped_records,
        }
        write_manifest(paths.manifest_for("stats"), manifest)
        manifests["stats"] = manifest
    return manifests


def stage_extract(cfg: PipelineConfig) -> dict:
    return scan_corpus(cfg, want_statements=True, want_stats=False)["extract"]


def stage_stats(cfg: PipelineConfig) -> dict:
    return scan_corpus(cfg, want_statements=False, want_stats=True)["stats"]


# ---------------------------------------------------------------------------
# Pair selection.

def load_daily_index(path: Path) -> DailyStatsIndex:
    from .stats import read_stats_blocks

    with open(path, "r", encoding="utf-8") as fh:
        blocks = read_stats_blocks(fh)
    daily: dict[Date, PairStats] = {}
    for block in blocks:
        if block.window.length_days != 0 or block.window.start in daily:
            raise PipelineError(
                f"daily stats file {path} holds a non-daily or duplicate block "
                f"for {block.window.start.isoformat()}")
        daily[block.window.start] = block
    return DailyStatsIndex(daily)


def selected_pair_to_record(sp: SelectedPair) -> dict:
    window = None
    if sp.window is not None:
        window = {"start": sp.window.start.isoformat(), "length_days": sp.window.length_days}
    return {
        "pair": {"a": sp.pair.key_a, "b": sp.pair.key_b},
        "window": window,
        "provenance": sp.provenance,
        "count": sp.count,
        "score": sp.score,
        "event_id": sp.event_id,
    }


def selected_pair_from_record(rec: dict) -> SelectedPair:
    from .model import EntityPair

    window = None
    if rec.get("window") is not None:
        window = DateWindow(Date.fromisoformat(rec["window"]["start"]),
                           rec["window"]["length_days"])
    return SelectedPair(
        pair=EntityPair(rec["pair"]["a"], rec["pair"]["b"]),
        window=window,
        provenance=rec["provenance"],
        count=rec["count"],
        score=rec["score"],
        event_id=rec.get("event_id"),
    )


def stage_pair(cfg: PipelineConfig) -> dict:
    paths = ArtifactPaths(cfg.paths.output_dir)
    paths.ensure_root()
    stats_path = require_input(paths.daily_stats, "daily stats (run the stats stage first)")
    index = load_daily_index(stats_path)
    pair_filter = PairFilter(
        min_article_count=cfg.filter.min_count,
        min_ppmi=cfg.filter.min_ppmi,
        combine=cfg.filter.combine,
        smoothing_exponent=cfg.filter.smoothing_exponent,
    )
    seed = f"{cfg.seed}|pair"
    manifest = _base_manifest("pair", cfg)
    manifest["inputs"]["daily_stats"] = {
        "path": stats_path.name, "sha256": sha256_file(stats_path)}

    if cfg.strategy == PROVENANCE_RANDOM:
        selected = select_random_pairs(index.whole_range(), pair_filter, cfg.budget, seed)
    elif cfg.strategy == PROVENANCE_DATE_WINDOW:
        windowed = windows_for_range(index, cfg.windows.date_window_days)
        selected = select_date_window_pairs(windowed, pair_filter, cfg.budget, seed,
                                            dedupe=cfg.dedupe)
    else:
        events_path = require_input(cfg.paths.events, "event file")
        with open(events_path, "r", encoding="utf-8") as fh:
            events = parse_event_file(fh)
        manifest["inputs"]["events"] = {
            "path": str(events_path), "sha256": sha256_file(events_path)}
        selected = select_event_guided_pairs(
            events, index, pair_filter,
            noun_window_days=cfg.windows.noun_days,
            ne_window_days=cfg.windows.ne_days,
            seed=seed, budget=cfg.budget, dedupe=cfg.dedupe,
        )

    writer = AtomicLineWriter(paths.selected_pairs)
    try:
        for sp in selected:
            writer.write_line(json.dumps(selected_pair_to_record(sp), separators=(",", ":")))
    except Exception:
        writer.abort()
        raise
    sha = writer.commit()
    if not selected:
        log.warning("pair selection produced no pairs under the current filter")
    by_provenance: dict[str, int] = {}
    for sp in selected:
        by_provenance[sp.provenance] = by_provenance.get(sp.provenance, 0) + 1
    manifest["outputs"]["selected_pairs"] = {
        "path": paths.selected_pairs.name, "sha256": sha}
    manifest["counts"] = {
        "strategy": cfg.strategy,
        "selected": len(selected),
        "distinct_pairs": len({sp.pair for sp in selected}),
        "by_provenance": by_provenance,
    }
    write_manifest(paths.manifest_for("pair"), manifest)
    return manifest


# ---------------------------------------------------------------------------
# Group assembly and batch emission.

def stage_groups(cfg: PipelineConfig) -> dict:
    paths = ArtifactPaths(cfg.paths.output_dir)
    paths.ensure_root()
    statements_path = require_input(paths.statements, "statements (run the extract stage first)")
    pairs_path = require_input(paths.selected_pairs, "selected pairs (run the pair stage first)")
    with open(statements_path, "r", encoding="utf-8") as fh:
        statements = [statement_from_record(json.loads(line)) for line in fh if line.strip()]
    with open(pairs_path, "r", encoding="utf-8") as fh:
        selected = [selected_pair_from_record(json.loads(line)) for line in fh if line.strip()]
    index = StatementIndex(statements)
    group_config = GroupConfig(
        n_pos=cfg.groups.n_pos,
        n_easy=cfg.groups.n_easy,
        n_hard=cfg.groups.n_hard,
        sentence_mode=cfg.groups.sentence_mode,
        min_positives=cfg.groups.min_positives,
    )
    groups, report = assemble_groups(selected, index, group_config, seed=f"{cfg.seed}|groups")
    writer = AtomicLineWriter(paths.groups)
    try:
        for group in groups:
            writer.write_line(json.dumps(group_to_record(group), separators=(",", ":")))
    except Exception:
        writer.abort()
        raise
    sha = writer.commit()
    manifest = _base_manifest("groups", cfg)
    manifest["inputs"]["statements"] = {
        "path": statements_path.name, "sha256": sha256_file(statements_path)}
    manifest["inputs"]["selected_pairs"] = {
        "path": pairs_path.name, "sha256": sha256_file(pairs_path)}
    manifest["outputs"]["groups"] = {"path": paths.groups.name, "sha256": sha}
    manifest["counts"] = report.to_dict()
    write_manifest(paths.manifest_for("groups"), manifest)
    return manifest


def stage_batches(cfg: PipelineConfig) -> dict:
    paths = ArtifactPaths(cfg.paths.output_dir)
    paths.ensure_root()
    groups_path = require_input(paths.groups, "groups (run the groups stage first)")
    corruption = CorruptionConfig(alpha=cfg.corruption.alpha, beta=cfg.corruption.beta,
                                  seed=cfg.seed)
    tmp = paths.batches.with_name(paths.batches.name + ".tmp")
    try:
        with open(groups_path, "r", encoding="utf-8") as groups_fh, \
                open(tmp, "w", encoding="utf-8") as sink:
            batch_manifest = write_batches(read_groups(groups_fh), corruption, sink,
                                           batch_size=cfg.batch_size)
    except Exception:
        if tmp.exists():
            tmp.unlink()
        raise
    os.replace(tmp, paths.batches)
    manifest = _base_manifest("batches", cfg)
    manifest["inputs"]["groups"] = {
        "path": groups_path.name, "sha256": sha256_file(groups_path)}
    manifest["outputs"]["batches"] = {
        "path": paths.batches.name, "sha256": batch_manifest.sha256}
    manifest["counts"] = {
        "groups": batch_manifest.n_groups,
        "batches": batch_manifest.n_batches,
        "statements": batch_manifest.n_statements,
    }
    manifest["corruption"] = {
        "alpha": batch_manifest.alpha,
        "beta": batch_manifest.beta,
        "batch_size": batch_manifest.batch_size,
    }
    write_manifest(paths.manifest_for("batches"), manifest)
    return manifest


# ---------------------------------------------------------------------------
# Few-shot evaluation over an embedding file.

def stage_eval(cfg: PipelineConfig) -> dict:
    paths = ArtifactPaths(cfg.paths.output_dir)
    paths.ensure_root()
    embeddings_path = require_input(cfg.eval.embeddings, "embeddings file")
    with open(embeddings_path, "r", encoding="utf-8") as fh:
        table = read_embeddings(fh)
    report = run_fewshot(
        table,
        n_way=cfg.eval.n_way,
        k_shot=cfg.eval.k_shot,
        trials=cfg.eval.trials,
        seed=f"{cfg.seed}|eval",
        num_queries=cfg.eval.num_queries,
    )
    manifest = _base_manifest("eval", cfg)
    manifest["inputs"]["embeddings"] = {
        "path": str(embeddings_path), "sha256": sha256_file(embeddings_path)}
    manifest["counts"] = {"embeddings": len(table), "labels": len(table.labels)}
    manifest["report"] = report
    write_manifest(paths.eval_report, manifest)
    return manifest


# ---------------------------------------------------------------------------
# Chained run.

def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run extract+stats in one corpus pass, then pair, groups, and batches;
    eval runs too when an embeddings file is configured."""
    manifests = scan_corpus(cfg, want_statements=True, want_stats=True)
    manifests["pair"] = stage_pair(cfg)
    manifests["groups"] = stage_groups(cfg)
    manifests["batches"] = stage_batches(cfg)
    if cfg.eval.embeddings:
        manifests["eval"] = stage_eval(cfg)
    else:
        log.info("no embeddings file configured; skipping eval")
    paths = ArtifactPaths(cfg.paths.output_dir)
    summary = {
        "stage": "pipeline",
        "format_version": 1,
        "config_sha256": config_sha256(cfg),
        "seed": cfg.seed,
        "stages": sorted(manifests),
        "counts": {name: m.get("counts", {}) for name, m in manifests.items()},
    }
    write_manifest(paths.pipeline_manifest, summary)
    return manifests


STAGES: dict[str, Callable[[PipelineConfig], dict]] = {
    "extract": stage_extract,
    "stats": stage_stats,
    "pair": stage_pair,
    "groups": stage_groups,
    "batches": stage_batches,
    "eval": stage_eval,
    "pipeline": run_pipeline,
}
