"""Windowed entity-pair occurrence counting and in-article PPMI.

The co-occurrence unit is the article: a pair is counted once per article
that contains both keys in a single sentence, and an entity once per article
that mentions it anywhere. Counts are exact hash-map counts; sharded
accumulation plus ``merge_stats`` is byte-identical to a sequential pass.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import date as Date, timedelta
from typing import IO, Iterable

from .errors import UndefinedScoreError, WindowMismatchError
from .model import Document, EntityPair

# Valid range for denoising windows (pair selection and sentence selection).
# Stats windows themselves may span the whole corpus range.
MAX_DENOISING_WINDOW_DAYS = 7


@dataclass(frozen=True, slots=True)
class DateWindow:
    """The inclusive date range ``[start, start + length_days]``."""

    start: Date
    length_days: int

    def __post_init__(self):
        if self.length_days < 0:
            raise ValueError(f"window length must be >= 0, got {self.length_days}")

    @property
    def end(self) -> Date:
        return self.start + timedelta(days=self.length_days)

    def contains(self, day: Date) -> bool:
        return self.start <= day <= self.end

    def dates(self) -> list[Date]:
        return [self.start + timedelta(days=o) for o in range(self.length_days + 1)]


@dataclass(slots=True)
class PairStats:
    """Article-level occurrence counts for one date window."""

    window: DateWindow
    n_articles: int = 0
    pair_article_counts: dict[EntityPair, int] = field(default_factory=dict)
    entity_article_counts: dict[str, int] = field(default_factory=dict)

    def pair_count(self, pair: EntityPair) -> int:
        return self.pair_article_counts.get(pair, 0)

    def entity_count(self, key: str) -> int:
        return self.entity_article_counts.get(key, 0)


def _article_keys_and_pairs(doc: Document) -> tuple[set[str], set[EntityPair]]:
    keys: set[str] = set()
    pairs: set[EntityPair] = set()
    for sentence in doc.sentences:
        sent_keys = {m.entity_key for m in sentence.mentions}
        keys.update(sent_keys)
        if len(sent_keys) > 1:
            ordered = sorted(sent_keys)
            for i in range(len(ordered) - 1):
                for j in range(i + 1, len(ordered)):
                    pairs.add(EntityPair(ordered[i], ordered[j]))
    return keys, pairs


def accumulate_stats(documents: Iterable[Document], window: DateWindow) -> PairStats:
    """Single pass over a document stream, counting only in-window articles."""
    stats = PairStats(window=window)
    pair_counts = stats.pair_article_counts
    entity_counts = stats.entity_article_counts
    for doc in documents:
        if not window.contains(doc.date):
            continue
        stats.n_articles += 1
        keys, pairs = _article_keys_and_pairs(doc)
        for key in keys:
            entity_counts[key] = entity_counts.get(key, 0) + 1
        for pair in pairs:
            pair_counts[pair] = pair_counts.get(pair, 0) + 1
    return stats


def merge_stats(a: PairStats, b: PairStats) -> PairStats:
    """Field-wise sum of two shards counted over disjoint article sets."""
    if a.window != b.window:
        raise WindowMismatchError(f"cannot merge stats for windows {a.window} and {b.window}")
    merged = PairStats(window=a.window, n_articles=a.n_articles + b.n_articles)
    pair_counts = Counter(a.pair_article_counts)
    pair_counts.update(b.pair_article_counts)
    entity_counts = Counter(a.entity_article_counts)
    entity_counts.update(b.entity_article_counts)
    merged.pair_article_counts = dict(pair_counts)
    merged.entity_article_counts = dict(entity_counts)
    return merged


def ppmi(stats: PairStats, pair: EntityPair, smoothing_exponent: float = 1.0) -> float:
    """In-article positive pointwise mutual information, base-2 log.

    ``max(0, log2((c(a,b) * N) / (c(a) * c(b))))`` with N the number of
    articles in the window and c(.) article counts. The optional smoothing
    exponent s is applied symmetrically to both marginal probabilities
    (``(c/N)**s``); 1.0 means no smoothing, which is the default. Raises
    UndefinedScoreError when the pair has zero joint count.
    """
    joint = stats.pair_count(pair)
    if joint == 0:
        raise UndefinedScoreError(f"pair ({pair.key_a}, {pair.key_b}) has zero count in window")
    n = stats.n_articles
    ca = stats.entity_count(pair.key_a)
    cb = stats.entity_count(pair.key_b)
    if smoothing_exponent == 1.0:
        value = math.log2((joint * n) / (ca * cb))
    else:
        s = smoothing_exponent
        value = math.log2(joint / n) - s * (math.log2(ca / n) + math.log2(cb / n))
    return max(0.0, value)


# ---------------------------------------------------------------------------
# Checkpoint serialization: deterministic, sorted, line-oriented JSON so two
# runs over the same corpus compare byte-identical.

def stats_to_lines(stats: PairStats) -> list[str]:
    header = {
        "kind": "pair_stats",
        "version": 1,
        "window": {"start": stats.window.start.isoformat(), "length_days": stats.window.length_days},
        "n_articles": stats.n_articles,
        "n_entities": len(stats.entity_article_counts),
        "n_pairs": len(stats.pair_article_counts),
    }
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for key in sorted(stats.entity_article_counts):
        lines.append(json.dumps({"e": key, "c": stats.entity_article_counts[key]},
                                sort_keys=True, separators=(",", ":")))
    for pair in sorted(stats.pair_article_counts, key=lambda p: (p.key_a, p.key_b)):
        lines.append(json.dumps({"p": [pair.key_a, pair.key_b], "c": stats.pair_article_counts[pair]},
                                sort_keys=True, separators=(",", ":")))
    return lines


def stats_to_bytes(stats: PairStats) -> bytes:
    return ("\n".join(stats_to_lines(stats)) + "\n").encode("utf-8")


def write_stats_checkpoint(stats: PairStats, sink: IO[str]) -> None:
    for line in stats_to_lines(stats):
        sink.write(line)
        sink.write("\n")


def read_stats_blocks(stream: Iterable[str]) -> list[PairStats]:
    """Read one or more concatenated stats checkpoints from a stream."""
    blocks: list[PairStats] = []
    current: PairStats | None = None
    for line in stream:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if rec.get("kind") == "pair_stats":
            w = rec["window"]
            current = PairStats(
                window=DateWindow(Date.fromisoformat(w["start"]), w["length_days"]),
                n_articles=rec["n_articles"],
            )
            blocks.append(current)
        elif current is None:
            raise ValueError("stats checkpoint is missing its header line")
        elif "e" in rec:
            current.entity_article_counts[rec["e"]] = rec["c"]
        else:
            a, b = rec["p"]
            current.pair_article_counts[EntityPair(a, b)] = rec["c"]
    return blocks


# ---------------------------------------------------------------------------
# Daily breakdown: because every article carries exactly one date, any window
# of interest is the field-wise sum of per-day stats. One counting pass then
# serves sliding windows, per-event windows and whole-corpus marginals alike.

def accumulate_daily_stats(documents: Iterable[Document]) -> dict[Date, PairStats]:
    daily: dict[Date, PairStats] = {}
    for doc in documents:
        day = doc.date
        stats = daily.get(day)
        if stats is None:
            stats = daily[day] = PairStats(window=DateWindow(day, 0))
        stats.n_articles += 1
        keys, pairs = _article_keys_and_pairs(doc)
        entity_counts = stats.entity_article_counts
        pair_counts = stats.pair_article_counts
        for key in keys:
            entity_counts[key] = entity_counts.get(key, 0) + 1
        for pair in pairs:
            pair_counts[pair] = pair_counts.get(pair, 0) + 1
    return daily


def merge_daily_stats(shards: Iterable[dict[Date, PairStats]]) -> dict[Date, PairStats]:
    merged: dict[Date, PairStats] = {}
    for shard in shards:
        for day, stats in shard.items():
            if day in merged:
                merged[day] = merge_stats(merged[day], stats)
            else:
                merged[day] = stats
    return merged


def combine_daily_stats(daily: dict[Date, PairStats], window: DateWindow) -> PairStats:
    """PairStats for an arbitrary window, summed from the daily breakdown."""
    combined = PairStats(window=window)
    pair_counts: Counter = Counter()
    entity_counts: Counter = Counter()
    for day in window.dates():
        stats = daily.get(day)
        if stats is None:
            continue
        combined.n_articles += stats.n_articles
        pair_counts.update(stats.pair_article_counts)
        entity_counts.update(stats.entity_article_counts)
    combined.pair_article_counts = dict(pair_counts)
    combined.entity_article_counts = dict(entity_counts)
    return combined


class DailyStatsIndex:
    """Caches window combinations over a daily stats breakdown.

    This is the per-event stats provider for event-guided selection and the
    window source for sliding-window selection.
    """

    def __init__(self, daily: dict[Date, PairStats]):
        self.daily = daily
        self._cache: dict[DateWindow, PairStats] = {}

    @classmethod
    def from_documents(cls, documents: Iterable[Document]) -> "DailyStatsIndex":
        return cls(accumulate_daily_stats(documents))

    @property
    def date_range(self) -> tuple[Date, Date] | None:
        if not self.daily:
            return None
        days = sorted(self.daily)
        return days[0], days[-1]

    def window(self, window: DateWindow) -> PairStats:
        cached = self._cache.get(window)
        if cached is None:
            cached = self._cache[window] = combine_daily_stats(self.daily, window)
        return cached

    def whole_range(self) -> PairStats:
        span = self.date_range
        if span is None:
            return PairStats(window=DateWindow(Date(1970, 1, 1), 0))
        first, last = span
        return self.window(DateWindow(first, (last - first).days))


def sliding_windows(first: Date, last: Date, length_days: int) -> list[DateWindow]:
    """All windows of the given length whose start lies in [first, last], stride one day."""
    if last < first:
        return []
    return [DateWindow(first + timedelta(days=o), length_days) for o in range((last - first).days + 1)]
