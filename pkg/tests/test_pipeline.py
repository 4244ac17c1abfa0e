"""Tests for stage orchestration: manifests, atomicity, composability."""

import hashlib
import json
import math
from datetime import date as Date

import pytest

from reldenoise.config import config_from_dict
from reldenoise.errors import MissingInputError, PipelineError
from reldenoise.ingest import document_to_record
from reldenoise.pipeline import (
    STAGES,
    ArtifactPaths,
    AtomicLineWriter,
    load_daily_index,
    run_pipeline,
    scan_corpus,
    selected_pair_from_record,
    selected_pair_to_record,
    sha256_file,
    stage_batches,
    stage_extract,
    stage_groups,
    stage_pair,
    stage_stats,
)
from reldenoise.model import EntityPair
from reldenoise.pairsel import PROVENANCE_EVENT, PROVENANCE_RANDOM, SelectedPair
from reldenoise.stats import DateWindow, PairStats, stats_to_lines

from conftest import make_doc, make_mention, make_sentence

ARTIFACTS = ("statements.jsonl", "daily_stats.jsonl", "selected_pairs.jsonl",
             "groups.jsonl", "batches.jsonl")
MANIFESTS = ("extract_manifest.json", "stats_manifest.json", "pair_manifest.json",
             "groups_manifest.json", "batches_manifest.json")


def write_mini_corpus(path, with_garbage=False):
    """Six articles over two days plus one unparseable line."""
    d1, d2 = Date(2019, 3, 1), Date(2019, 3, 2)

    def doc(doc_id, day, *keys):
        mentions = [make_mention(2 * i, 2 * i + 1, k) for i, k in enumerate(keys)]
        return make_doc(doc_id, day, [make_sentence(2 * len(keys), mentions)])

    docs = [
        doc("a0", d1, "alpha", "beta"),
        doc("a1", d1, "alpha", "beta"),
        doc("a2", d1, "alpha", "beta", "alpha"),
        doc("a3", d1, "gamma", "delta"),
        doc("b0", d2, "gamma", "delta"),
        doc("b1", d2, "epsilon", "zeta"),
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(document_to_record(d)) + "\n")
        if with_garbage:
            fh.write("{not json\n")


def mini_config(tmp_path, **extra):
    corpus = tmp_path / "corpus.jsonl"
    if not corpus.exists():
        write_mini_corpus(corpus, with_garbage=True)
    data = {
        "paths": {"corpus": str(corpus), "output_dir": str(tmp_path / "out")},
        "strategy": "RANDOM",
        "filter": {"min_count": 1, "min_ppmi": 0.0},
        "groups": {"n_pos": 2, "n_easy": 1, "n_hard": 1, "min_positives": 1,
                   "sentence_mode": "random"},
        "corruption": {"alpha": 0.5, "beta": 0.5},
        "batch_size": 8,
    }
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    return config_from_dict(data)


def fixture_config(fixtures, out_dir, **extra):
    data = {
        "paths": {"corpus": str(fixtures["corpus"]),
                  "events": str(fixtures["events"]),
                  "output_dir": str(out_dir)},
        "strategy": "EVENT",
    }
    data.update(extra)
    return config_from_dict(data)


def read_tree(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


class TestAtomicLineWriter:
    def test_commit_renames_and_hashes(self, tmp_path):
        target = tmp_path / "x.jsonl"
        w = AtomicLineWriter(target)
        w.write_line('{"a":1}')
        w.write_block('{"b":2}\n{"c":3}\n')
        sha = w.commit()
        content = target.read_bytes()
        assert content == b'{"a":1}\n{"b":2}\n{"c":3}\n'
        assert sha == hashlib.sha256(content).hexdigest()
        assert w.n_lines == 3
        assert not target.with_name("x.jsonl.tmp").exists()

    def test_abort_removes_partial_file(self, tmp_path):
        target = tmp_path / "x.jsonl"
        w = AtomicLineWriter(target)
        w.write_line("partial")
        w.abort()
        assert not target.exists()
        assert not target.with_name("x.jsonl.tmp").exists()

    def test_commit_overwrites_previous_version(self, tmp_path):
        target = tmp_path / "x.jsonl"
        for payload in ("one", "two"):
            w = AtomicLineWriter(target)
            w.write_line(payload)
            w.commit()
        assert target.read_text() == "two\n"


class TestScanCounts:
    def test_extract_accounting(self, tmp_path):
        cfg = mini_config(tmp_path)
        manifest = stage_extract(cfg)
        counts = manifest["counts"]
        # six documents, one sentence each; a2 has three mentions
        assert counts["articles"] == 6
        assert counts["sentences"] == 6
        assert counts["mentions"] == 13
        assert counts["candidate_pairs"] == sum(math.comb(m, 2) for m in (2, 2, 3, 2, 2, 2))
        # a2 contributes two alpha-beta statements and one degenerate alpha-alpha
        assert counts["statements"] == 7
        assert counts["degenerate_pairs"] == 1
        assert counts["statements"] + counts["degenerate_pairs"] == counts["candidate_pairs"]
        assert counts["distinct_pairs"] == 3
        assert counts["skipped_records"] == 1

        out = ArtifactPaths(cfg.paths.output_dir)
        lines = out.statements.read_text().splitlines()
        assert len(lines) == counts["statements"]
        assert manifest["outputs"]["statements"]["sha256"] == sha256_file(out.statements)

    def test_stats_counts_days(self, tmp_path):
        cfg = mini_config(tmp_path)
        manifest = stage_stats(cfg)
        assert manifest["counts"]["articles"] == 6
        assert manifest["counts"]["days"] == 2
        assert manifest["counts"]["skipped_records"] == 1
        out = ArtifactPaths(cfg.paths.output_dir)
        index = load_daily_index(out.daily_stats)
        assert index.date_range == (Date(2019, 3, 1), Date(2019, 3, 2))
        whole = index.whole_range()
        assert whole.n_articles == 6
        assert whole.pair_count(EntityPair("alpha", "beta")) == 3

    def test_combined_scan_equals_separate_stages(self, tmp_path):
        cfg_a = mini_config(tmp_path, paths={"output_dir": str(tmp_path / "a")})
        cfg_b = mini_config(tmp_path, paths={"output_dir": str(tmp_path / "b")})
        scan_corpus(cfg_a, want_statements=True, want_stats=True)
        stage_extract(cfg_b)
        stage_stats(cfg_b)
        a = read_tree(ArtifactPaths(cfg_a.paths.output_dir).root)
        b = read_tree(ArtifactPaths(cfg_b.paths.output_dir).root)
        assert a == b


class TestPipelineComposability:
    def test_stagewise_equals_chained(self, tmp_path, planted_fixture_paths):
        cfg_chain = fixture_config(planted_fixture_paths, tmp_path / "chain")
        cfg_steps = fixture_config(planted_fixture_paths, tmp_path / "steps")
        run_pipeline(cfg_chain)
        for stage in ("extract", "stats", "pair", "groups", "batches"):
            STAGES[stage](cfg_steps)
        chain = read_tree(ArtifactPaths(cfg_chain.paths.output_dir).root)
        steps = read_tree(ArtifactPaths(cfg_steps.paths.output_dir).root)
        chain.pop("pipeline_manifest.json")
        assert chain == steps

    def test_rerun_reproduces_every_byte(self, tmp_path, planted_fixture_paths):
        cfg = fixture_config(planted_fixture_paths, tmp_path / "out")
        run_pipeline(cfg)
        first = read_tree(ArtifactPaths(cfg.paths.output_dir).root)
        run_pipeline(cfg)
        second = read_tree(ArtifactPaths(cfg.paths.output_dir).root)
        assert first == second
        for name in ARTIFACTS + MANIFESTS:
            assert name in first

    def test_no_temp_files_left(self, tmp_path, planted_fixture_paths):
        cfg = fixture_config(planted_fixture_paths, tmp_path / "out")
        run_pipeline(cfg)
        leftovers = [p for p in ArtifactPaths(cfg.paths.output_dir).root.iterdir()
                     if p.name.endswith(".tmp")]
        assert leftovers == []

    def test_pipeline_manifest_summarizes_stages(self, tmp_path, planted_fixture_paths):
        cfg = fixture_config(planted_fixture_paths, tmp_path / "out")
        run_pipeline(cfg)
        manifest = json.loads(
            ArtifactPaths(cfg.paths.output_dir).pipeline_manifest.read_text())
        assert manifest["stages"] == ["batches", "extract", "groups", "pair", "stats"]
        assert manifest["counts"]["pair"]["selected"] == 10
        assert manifest["counts"]["groups"]["groups_out"] == 10
        for stage_counts in manifest["counts"].values():
            assert stage_counts

    def test_worker_count_does_not_change_artifacts(self, tmp_path, planted_fixture_paths,
                                                    monkeypatch):
        monkeypatch.setattr("reldenoise.pipeline.CHUNK_LINES", 80)
        cfg1 = fixture_config(planted_fixture_paths, tmp_path / "w1", workers=1)
        cfg2 = fixture_config(planted_fixture_paths, tmp_path / "w2", workers=2)
        scan_corpus(cfg1, want_statements=True, want_stats=True)
        scan_corpus(cfg2, want_statements=True, want_stats=True)
        t1 = read_tree(ArtifactPaths(cfg1.paths.output_dir).root)
        t2 = read_tree(ArtifactPaths(cfg2.paths.output_dir).root)
        assert t1 == t2

    def test_seed_changes_corruption_not_extraction(self, tmp_path):
        cfg0 = mini_config(tmp_path, seed=0, paths={"output_dir": str(tmp_path / "s0")})
        cfg1 = mini_config(tmp_path, seed=1, paths={"output_dir": str(tmp_path / "s1")})
        run_pipeline(cfg0)
        run_pipeline(cfg1)
        out0 = ArtifactPaths(cfg0.paths.output_dir)
        out1 = ArtifactPaths(cfg1.paths.output_dir)
        assert out0.statements.read_bytes() == out1.statements.read_bytes()
        assert out0.daily_stats.read_bytes() == out1.daily_stats.read_bytes()
        assert out0.batches.read_bytes() != out1.batches.read_bytes()


class TestMissingInputs:
    def test_extract_requires_corpus(self, tmp_path):
        cfg = config_from_dict({"paths": {"corpus": str(tmp_path / "absent.jsonl"),
                                          "output_dir": str(tmp_path / "out")}})
        with pytest.raises(MissingInputError):
            stage_extract(cfg)
        cfg = config_from_dict({"paths": {"output_dir": str(tmp_path / "out")}})
        with pytest.raises(MissingInputError):
            stage_extract(cfg)

    def test_pair_requires_stats(self, tmp_path):
        cfg = mini_config(tmp_path)
        with pytest.raises(MissingInputError, match="stats stage"):
            stage_pair(cfg)

    def test_groups_requires_extract_and_pair(self, tmp_path):
        cfg = mini_config(tmp_path)
        with pytest.raises(MissingInputError, match="extract stage"):
            stage_groups(cfg)
        stage_extract(cfg)
        with pytest.raises(MissingInputError, match="pair stage"):
            stage_groups(cfg)

    def test_batches_requires_groups(self, tmp_path):
        cfg = mini_config(tmp_path)
        with pytest.raises(MissingInputError, match="groups stage"):
            stage_batches(cfg)

    def test_event_strategy_requires_events_file(self, tmp_path):
        cfg = mini_config(tmp_path, strategy="EVENT")
        stage_stats(cfg)
        with pytest.raises(MissingInputError, match="event"):
            stage_pair(cfg)


class TestLoadDailyIndex:
    def test_rejects_non_daily_block(self, tmp_path):
        stats = PairStats(window=DateWindow(Date(2019, 3, 1), 2))
        path = tmp_path / "daily_stats.jsonl"
        path.write_text("".join(line + "\n" for line in stats_to_lines(stats)))
        with pytest.raises(PipelineError, match="non-daily"):
            load_daily_index(path)

    def test_rejects_duplicate_day(self, tmp_path):
        stats = PairStats(window=DateWindow(Date(2019, 3, 1), 0))
        lines = list(stats_to_lines(stats)) + list(stats_to_lines(stats))
        path = tmp_path / "daily_stats.jsonl"
        path.write_text("".join(line + "\n" for line in lines))
        with pytest.raises(PipelineError, match="duplicate"):
            load_daily_index(path)


class TestSelectedPairRecords:
    def test_round_trip_with_window(self):
        sp = SelectedPair(pair=EntityPair("a", "b"),
                          window=DateWindow(Date(2019, 3, 1), 7),
                          provenance=PROVENANCE_EVENT, count=4, score=2.5,
                          event_id="2019-03-01:0")
        assert selected_pair_from_record(selected_pair_to_record(sp)) == sp

    def test_round_trip_without_window(self):
        sp = SelectedPair(pair=EntityPair("a", "b"), window=None,
                          provenance=PROVENANCE_RANDOM, count=4, score=2.5)
        rec = selected_pair_to_record(sp)
        assert rec["window"] is None and rec["event_id"] is None
        assert selected_pair_from_record(rec) == sp


class TestEvalStage:
    def test_eval_report_written(self, tmp_path, planted_fixture_paths):
        cfg = fixture_config(planted_fixture_paths, tmp_path / "out",
                             eval={"embeddings": str(planted_fixture_paths["embeddings"]),
                                   "n_way": 5, "k_shot": 1, "trials": 2})
        manifest = STAGES["eval"](cfg)
        assert manifest["report"]["mean_accuracy"] == 1.0
        report_path = ArtifactPaths(cfg.paths.output_dir).eval_report
        assert json.loads(report_path.read_text()) == manifest

    def test_pipeline_includes_eval_only_when_configured(self, tmp_path,
                                                         planted_fixture_paths):
        cfg = fixture_config(planted_fixture_paths, tmp_path / "no_eval")
        manifests = run_pipeline(cfg)
        assert "eval" not in manifests
        cfg2 = fixture_config(planted_fixture_paths, tmp_path / "with_eval",
                              eval={"embeddings": str(planted_fixture_paths["embeddings"])})
        manifests2 = run_pipeline(cfg2)
        assert "eval" in manifests2
        summary = json.loads(
            ArtifactPaths(cfg2.paths.output_dir).pipeline_manifest.read_text())
        assert "eval" in summary["stages"]
