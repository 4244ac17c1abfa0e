"""Positive-statement selection and easy/hard negative sampling per pair.

A statement "contains" an entity key when the key is one of its two marked
span keys. Positives carry both keys of the group's pair, hard negatives
exactly one, easy negatives neither; every group is checked against that
trichotomy by construction and again in the tests by re-deriving keys from
the raw tokens.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from datetime import date as Date
from typing import IO, Iterable, Iterator

from .errors import DegenerateCorpusError, EmptyGroupError
from .model import EntityPair, RelationStatement
from .pairsel import SelectedPair
from .stats import DateWindow

log = logging.getLogger(__name__)

MODE_RANDOM = "random"
MODE_DATE_WINDOW = "date_window"


@dataclass(frozen=True, slots=True)
class GroupConfig:
    n_pos: int = 6
    n_easy: int = 3
    n_hard: int = 3
    sentence_mode: str = MODE_DATE_WINDOW
    min_positives: int = 2


@dataclass(slots=True)
class TrainingGroup:
    group_id: str
    pair: EntityPair
    positives: list[RelationStatement]
    easy_negatives: list[RelationStatement]
    hard_negatives: list[RelationStatement]
    provenance: str | None = None
    window: DateWindow | None = None
    short_positives: bool = False
    short_negatives: bool = False

    def all_statements(self) -> list[RelationStatement]:
        return self.positives + self.easy_negatives + self.hard_negatives


class StatementIndex:
    """Immutable lookup over extracted statements: by pair, by single key,
    and globally for easy-negative sampling. Shared read-only across
    workers during assembly."""

    def __init__(self, statements: Iterable[RelationStatement]):
        self.statements: list[RelationStatement] = list(statements)
        self.by_pair: dict[EntityPair, list[RelationStatement]] = {}
        self.by_key: dict[str, list[RelationStatement]] = {}
        for stmt in self.statements:
            self.by_pair.setdefault(stmt.pair, []).append(stmt)
            self.by_key.setdefault(stmt.pair.key_a, []).append(stmt)
            self.by_key.setdefault(stmt.pair.key_b, []).append(stmt)

    def for_pair(self, pair: EntityPair) -> list[RelationStatement]:
        return self.by_pair.get(pair, [])

    def touching(self, key: str) -> list[RelationStatement]:
        return self.by_key.get(key, [])


def _split_by_window(pool: list[RelationStatement], window: DateWindow | None):
    if window is None:
        return pool, []
    inside = [s for s in pool if window.contains(s.date)]
    outside = [s for s in pool if not window.contains(s.date)]
    return inside, outside


def _sample_prefer_window(pool: list[RelationStatement], n: int, window: DateWindow | None,
                          rng: random.Random) -> list[RelationStatement]:
    inside, outside = _split_by_window(pool, window)
    if len(inside) >= n:
        return rng.sample(inside, n)
    picked = list(inside)
    deficit = n - len(picked)
    picked.extend(rng.sample(outside, min(deficit, len(outside))))
    return picked


def select_positive_statements(
    selected: SelectedPair,
    index: StatementIndex,
    mode: str,
    n_pos: int,
    seed: int | str,
) -> tuple[list[RelationStatement], bool]:
    """Sample positives for a pair, without replacement.

    In date-window mode only statements dated inside the pair's window are
    eligible; a pair without a window falls back to random mode. Returns the
    statements plus a shortfall flag; raises EmptyGroupError when nothing is
    available at all.
    """
    pool = index.for_pair(selected.pair)
    if mode == MODE_DATE_WINDOW and selected.window is not None:
        pool = [s for s in pool if selected.window.contains(s.date)]
    if not pool:
        raise EmptyGroupError(
            f"no statements available for pair ({selected.pair.key_a}, {selected.pair.key_b})"
        )
    rng = random.Random(f"{seed}|pos")
    if len(pool) <= n_pos:
        return list(pool), len(pool) < n_pos
    return rng.sample(pool, n_pos), False


def sample_negatives(
    pair: EntityPair,
    index: StatementIndex,
    n_easy: int,
    n_hard: int,
    window: DateWindow | None,
    seed: int | str,
) -> tuple[list[RelationStatement], list[RelationStatement]]:
    """Easy and hard negatives for a pair, preferring the pair's window.

    Hard negatives contain exactly one of the pair's keys, easy negatives
    neither. When the hard pool falls short the difference is topped up with
    extra easy negatives so the group keeps its total negative count. A
    corpus with no easy negatives at all is degenerate and raises.
    """
    rng = random.Random(f"{seed}|neg")
    hard_pool = [
        s
        for s in dict.fromkeys(index.touching(pair.key_a) + index.touching(pair.key_b))
        if s.pair != pair
    ]
    hard = _sample_prefer_window(hard_pool, n_hard, window, rng)

    easy_pool = [
        s for s in index.statements
        if not (s.pair.contains(pair.key_a) or s.pair.contains(pair.key_b))
    ]
    if not easy_pool:
        raise DegenerateCorpusError(
            f"corpus has no statement avoiding both {pair.key_a!r} and {pair.key_b!r}"
        )
    n_easy_wanted = n_easy + (n_hard - len(hard))
    easy = _sample_prefer_window(easy_pool, n_easy_wanted, window, rng)
    return easy, hard


@dataclass(slots=True)
class AssemblyReport:
    """The denoised-corpus accounting: pairs in, groups out, statements out."""

    pairs_in: int = 0
    groups_out: int = 0
    dropped_no_statements: int = 0
    dropped_few_positives: int = 0
    short_positive_groups: int = 0
    short_negative_groups: int = 0
    positives_out: int = 0
    negatives_out: int = 0

    @property
    def statements_out(self) -> int:
        return self.positives_out + self.negatives_out

    def to_dict(self) -> dict:
        return {
            "pairs_in": self.pairs_in,
            "groups_out": self.groups_out,
            "dropped_no_statements": self.dropped_no_statements,
            "dropped_few_positives": self.dropped_few_positives,
            "short_positive_groups": self.short_positive_groups,
            "short_negative_groups": self.short_negative_groups,
            "positives_out": self.positives_out,
            "negatives_out": self.negatives_out,
            "statements_out": self.statements_out,
        }


def assemble_groups(
    selected_pairs: list[SelectedPair],
    index: StatementIndex,
    config: GroupConfig,
    seed: int | str,
) -> tuple[list[TrainingGroup], AssemblyReport]:
    """One training group per selected pair that yields enough positives.

    Group ids and sampling are deterministic functions of the input order
    and seed, independent of any worker scheduling.
    """
    groups: list[TrainingGroup] = []
    report = AssemblyReport(pairs_in=len(selected_pairs))
    for ordinal, selected in enumerate(selected_pairs):
        group_seed = f"{seed}|group|{ordinal}"
        try:
            positives, short_pos = select_positive_statements(
                selected, index, config.sentence_mode, config.n_pos, group_seed
            )
        except EmptyGroupError:
            report.dropped_no_statements += 1
            continue
        if len(positives) < config.min_positives:
            report.dropped_few_positives += 1
            continue
        easy, hard = sample_negatives(
            selected.pair, index, config.n_easy, config.n_hard, selected.window, group_seed
        )
        short_neg = len(easy) + len(hard) < config.n_easy + config.n_hard
        group = TrainingGroup(
            group_id=f"g{ordinal:06d}:{selected.pair.key_a}|{selected.pair.key_b}",
            pair=selected.pair,
            positives=positives,
            easy_negatives=easy,
            hard_negatives=hard,
            provenance=selected.provenance,
            window=selected.window,
            short_positives=short_pos,
            short_negatives=short_neg,
        )
        groups.append(group)
        report.groups_out += 1
        report.positives_out += len(positives)
        report.negatives_out += len(easy) + len(hard)
        report.short_positive_groups += int(short_pos)
        report.short_negative_groups += int(short_neg)
    return groups, report


# ---------------------------------------------------------------------------
# Groups file: newline-delimited records with full token payloads.

def statement_to_record(stmt: RelationStatement) -> dict:
    return {
        "statement_id": stmt.statement_id,
        "doc_id": stmt.doc_id,
        "date": stmt.date.isoformat(),
        "tokens": list(stmt.tokens),
        "span1": list(stmt.span1),
        "span2": list(stmt.span2),
        "pair": {"a": stmt.pair.key_a, "b": stmt.pair.key_b},
    }


def statement_from_record(rec: dict) -> RelationStatement:
    return RelationStatement(
        statement_id=rec["statement_id"],
        doc_id=rec["doc_id"],
        date=Date.fromisoformat(rec["date"]),
        tokens=tuple(rec["tokens"]),
        span1=tuple(rec["span1"]),
        span2=tuple(rec["span2"]),
        pair=EntityPair(rec["pair"]["a"], rec["pair"]["b"]),
    )


def group_to_record(group: TrainingGroup) -> dict:
    window = None
    if group.window is not None:
        window = {"start": group.window.start.isoformat(), "length_days": group.window.length_days}
    return {
        "group_id": group.group_id,
        "pair": {"a": group.pair.key_a, "b": group.pair.key_b},
        "provenance": group.provenance,
        "window": window,
        "short_positives": group.short_positives,
        "short_negatives": group.short_negatives,
        "positives": [statement_to_record(s) for s in group.positives],
        "easy_negatives": [statement_to_record(s) for s in group.easy_negatives],
        "hard_negatives": [statement_to_record(s) for s in group.hard_negatives],
    }


def group_from_record(rec: dict) -> TrainingGroup:
    window = None
    if rec.get("window"):
        window = DateWindow(Date.fromisoformat(rec["window"]["start"]), rec["window"]["length_days"])
    return TrainingGroup(
        group_id=rec["group_id"],
        pair=EntityPair(rec["pair"]["a"], rec["pair"]["b"]),
        positives=[statement_from_record(r) for r in rec["positives"]],
        easy_negatives=[statement_from_record(r) for r in rec["easy_negatives"]],
        hard_negatives=[statement_from_record(r) for r in rec["hard_negatives"]],
        provenance=rec.get("provenance"),
        window=window,
        short_positives=rec.get("short_positives", False),
        short_negatives=rec.get("short_negatives", False),
    )


def write_groups(groups: Iterable[TrainingGroup], sink: IO[str]) -> int:
    count = 0
    for group in groups:
        sink.write(json.dumps(group_to_record(group), separators=(",", ":")))
        sink.write("\n")
        count += 1
    return count


def read_groups(stream: Iterable[str]) -> Iterator[TrainingGroup]:
    for line in stream:
        line = line.strip()
        if line:
            yield group_from_record(json.loads(line))
