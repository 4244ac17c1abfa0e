"""Entity-pair selection: random, sliding date windows, or event-guided.

Every strategy filters candidate pairs by article count and PPMI and is a
deterministic function of its inputs and seed. Event-guided selection only
ever returns pairs that occur in some event description.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .errors import ConfigError
from .ingest import EventRecord
from .model import KIND_NAMED_ENTITY, EntityPair
from .stats import DailyStatsIndex, DateWindow, PairStats, ppmi, sliding_windows

log = logging.getLogger(__name__)

PROVENANCE_RANDOM = "RANDOM"
PROVENANCE_DATE_WINDOW = "DATE_WINDOW"
PROVENANCE_EVENT = "EVENT"

FILTER_AND = "and"
FILTER_OR = "or"


@dataclass(frozen=True, slots=True)
class PairFilter:
    """Thresholds a pair must clear within the window it was counted in.

    ``combine`` decides whether both thresholds must hold ("and", the
    default) or either suffices ("or").
    """

    min_article_count: int = 3
    min_ppmi: float = 1.0
    combine: str = FILTER_AND
    smoothing_exponent: float = 1.0

    def __post_init__(self):
        if self.min_article_count < 1:
            raise ConfigError(f"filter.min_count: must be >= 1, got {self.min_article_count}")
        if self.min_ppmi < 0:
            raise ConfigError(f"filter.min_ppmi: must be >= 0, got {self.min_ppmi}")
        if self.combine not in (FILTER_AND, FILTER_OR):
            raise ConfigError(f"filter.combine: must be 'and' or 'or', got {self.combine!r}")

    def passes(self, count: int, score: float) -> bool:
        count_ok = count >= self.min_article_count
        ppmi_ok = score >= self.min_ppmi
        return (count_ok and ppmi_ok) if self.combine == FILTER_AND else (count_ok or ppmi_ok)


@dataclass(frozen=True, slots=True)
class SelectedPair:
    """A pair chosen for a training group, with its selection evidence."""

    pair: EntityPair
    window: DateWindow | None
    provenance: str
    count: int
    score: float
    event_id: str | None = None

    def __post_init__(self):
        if self.provenance == PROVENANCE_RANDOM and self.window is not None:
            raise ValueError("random provenance carries no window")
        if self.provenance in (PROVENANCE_DATE_WINDOW, PROVENANCE_EVENT) and self.window is None:
            raise ValueError(f"{self.provenance} provenance requires a window")


def eligible_pairs(stats: PairStats, pair_filter: PairFilter) -> list[tuple[EntityPair, int, float]]:
    """All pairs in the stats passing the filter, sorted by canonical key."""
    out = []
    for pair in sorted(stats.pair_article_counts, key=lambda p: (p.key_a, p.key_b)):
        count = stats.pair_article_counts[pair]
        score = ppmi(stats, pair, pair_filter.smoothing_exponent)
        if pair_filter.passes(count, score):
            out.append((pair, count, score))
    return out


def _sample(pool: list, budget: int | None, rng: random.Random, what: str) -> list:
    if budget is None:
        return list(pool)
    if budget >= len(pool):
        if budget > len(pool):
            log.warning("budget %d exceeds the %d eligible %s; returning all of them",
                        budget, len(pool), what)
        return list(pool)
    return rng.sample(pool, budget)


def select_random_pairs(
    stats: PairStats, pair_filter: PairFilter, budget: int | None, seed: int | str
) -> list[SelectedPair]:
    """Uniform sample without replacement from all pairs passing the filter;
    a budget of None keeps every eligible pair."""
    if budget is not None and budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    rng = random.Random(f"{seed}|random-pairs")
    chosen = _sample(eligible_pairs(stats, pair_filter), budget, rng, "pairs")
    chosen.sort(key=lambda item: (item[0].key_a, item[0].key_b))
    return [
        SelectedPair(pair=pair, window=None, provenance=PROVENANCE_RANDOM, count=count, score=score)
        for pair, count, score in chosen
    ]


def select_date_window_pairs(
    windowed_stats: list[PairStats],
    pair_filter: PairFilter,
    budget_per_window: int | None,
    seed: int | str,
    dedupe: bool = False,
) -> list[SelectedPair]:
    """Per-window filtering and sampling over a sequence of sliding windows.

    A pair may be selected in several windows; with ``dedupe`` only its first
    selection (in window order) is kept. A budget of None keeps every
    eligible pair in every window.
    """
    if budget_per_window is not None and budget_per_window < 0:
        raise ValueError(f"budget must be >= 0, got {budget_per_window}")
    selected: list[SelectedPair] = []
    seen: set[EntityPair] = set()
    for stats in sorted(windowed_stats, key=lambda s: (s.window.start, s.window.length_days)):
        if stats.n_articles == 0:
            continue
        rng = random.Random(f"{seed}|window|{stats.window.start.isoformat()}|{stats.window.length_days}")
        chosen = _sample(eligible_pairs(stats, pair_filter), budget_per_window, rng, "pairs")
        chosen.sort(key=lambda item: (item[0].key_a, item[0].key_b))
        for pair, count, score in chosen:
            if dedupe:
                if pair in seen:
                    continue
                seen.add(pair)
            selected.append(
                SelectedPair(pair=pair, window=stats.window, provenance=PROVENANCE_DATE_WINDOW,
                             count=count, score=score)
            )
    return selected


def event_window_length(event: EventRecord, pair: EntityPair,
                        noun_window_days: int, ne_window_days: int) -> int:
    """Window length for one event pair: the NE length only if every mention
    of both keys in the description is a named entity, else the (shorter)
    noun length."""
    kinds = {key: set() for key in (pair.key_a, pair.key_b)}
    for m in event.mentions:
        if m.entity_key in kinds:
            kinds[m.entity_key].add(m.kind)
    all_ne = all(k == {KIND_NAMED_ENTITY} for k in kinds.values() if k)
    return ne_window_days if all_ne else noun_window_days


def select_event_guided_pairs(
    events: list[EventRecord],
    stats_provider: DailyStatsIndex,
    pair_filter: PairFilter,
    noun_window_days: int = 4,
    ne_window_days: int = 7,
    seed: int | str = 0,
    budget: int | None = None,
    dedupe: bool = False,
) -> list[SelectedPair]:
    """Select event-description pairs that clear the filter in the days
    following their event date.

    The window is ``[event_date, event_date + w]`` with w chosen per pair
    kind. Output order is deterministic: (event date, event id, pair key).
    Uncapped by default; a budget, when given, samples uniformly from the
    qualifying selections.
    """
    selected: list[SelectedPair] = []
    seen: set[EntityPair] = set()
    for event in sorted(events, key=lambda e: (e.event_date, e.event_id)):
        if not event.pairs:
            continue
        for pair in sorted(event.pairs, key=lambda p: (p.key_a, p.key_b)):
            length = event_window_length(event, pair, noun_window_days, ne_window_days)
            window = DateWindow(event.event_date, length)
            stats = stats_provider.window(window)
            count = stats.pair_count(pair)
            if count == 0:
                continue
            score = ppmi(stats, pair, pair_filter.smoothing_exponent)
            if not pair_filter.passes(count, score):
                continue
            if dedupe:
                if pair in seen:
                    continue
                seen.add(pair)
            selected.append(
                SelectedPair(pair=pair, window=window, provenance=PROVENANCE_EVENT,
                             count=count, score=score, event_id=event.event_id)
            )
    if budget is not None and budget < len(selected):
        rng = random.Random(f"{seed}|event-pairs")
        keep = set(rng.sample(range(len(selected)), budget))
        selected = [sp for i, sp in enumerate(selected) if i in keep]
    return selected


def windows_for_range(stats_provider: DailyStatsIndex, length_days: int) -> list[PairStats]:
    """Stats for every sliding window of the given length over the corpus range."""
    span = stats_provider.date_range
    if span is None:
        return []
    first, last = span
    return [stats_provider.window(w) for w in sliding_windows(first, last, length_days)]
