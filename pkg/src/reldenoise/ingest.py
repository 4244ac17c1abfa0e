"""Parsing of the annotated corpus stream and the date-marked event file.

Both inputs are newline-delimited JSON (UTF-8). Field layout:

corpus record
    {"doc_id": str, "date": "YYYY-MM-DD", "lang": str,
     "sentences": [{"tokens": [str],
                    "mentions": [{"start": int, "end": int,
                                  "kind": "NE"|"NOUN", "key": str}]}]}

event record
    {"date": "YYYY-MM-DD", "tokens": [str], "mentions": [as above]}

Mentions arrive pre-annotated; re-implementing a tagger is out of scope and
``naive_mention_fallback`` is an explicitly lossy substitute for demos and
tests only.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date as Date
from typing import IO, Iterable, Iterator

from .errors import ParseError
from .model import (
    KIND_NAMED_ENTITY,
    MENTION_KINDS,
    Document,
    EntityMention,
    EntityPair,
    Sentence,
    canonical_pair,
    normalize_entity_key,
    validate_sentence,
)

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass
class ParseCounters:
    """Bookkeeping for a lenient parse: yielded + skipped == input records."""

    yielded: int = 0
    skipped: int = 0
    pairless_events: int = 0
    reasons: list[str] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class EventRecord:
    """A dated event description and the entity pairs extracted from it."""

    event_id: str
    event_date: Date
    description_tokens: tuple[str, ...]
    mentions: tuple[EntityMention, ...]
    pairs: tuple[EntityPair, ...]


def _parse_date(raw, line_no: int) -> Date:
    if not isinstance(raw, str):
        raise ParseError(f"field 'date' must be a string, got {type(raw).__name__}", line_no, "date")
    try:
        return Date.fromisoformat(raw)
    except ValueError:
        raise ParseError(f"field 'date' is not a valid ISO date: {raw!r}", line_no, "date") from None


def _parse_mentions(raw, line_no: int) -> tuple[EntityMention, ...]:
    if not isinstance(raw, list):
        raise ParseError("field 'mentions' must be an array", line_no, "mentions")
    mentions = []
    for m in raw:
        if not isinstance(m, dict):
            raise ParseError("mention must be an object", line_no, "mentions")
        try:
            start, end, kind, key = m["start"], m["end"], m["kind"], m["key"]
        except KeyError as exc:
            raise ParseError(f"mention missing field {exc.args[0]!r}", line_no, "mentions") from None
        if not isinstance(start, int) or not isinstance(end, int):
            raise ParseError("mention span indices must be integers", line_no, "mentions")
        if kind not in MENTION_KINDS:
            raise ParseError(f"unknown mention kind {kind!r}", line_no, "mentions")
        if not isinstance(key, str) or not normalize_entity_key(key):
            raise ParseError("mention key must be a non-empty string", line_no, "mentions")
        mentions.append(EntityMention(start, end, kind, normalize_entity_key(key)))
    # Sorting is tolerated here; overlap and bounds violations are not.
    mentions.sort(key=lambda m: (m.start, m.end))
    return tuple(mentions)


def _parse_sentence(raw, line_no: int) -> Sentence:
    if not isinstance(raw, dict):
        raise ParseError("sentence must be an object", line_no, "sentences")
    tokens = raw.get("tokens")
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise ParseError("field 'tokens' must be an array of strings", line_no, "tokens")
    mentions = _parse_mentions(raw.get("mentions", []), line_no)
    reason = validate_sentence(tokens, mentions)
    if reason is not None:
        raise ParseError(reason, line_no, "mentions")
    return Sentence(tokens=tuple(tokens), mentions=mentions)


def _parse_document(raw: dict, line_no: int) -> Document:
    doc_id = raw.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ParseError("field 'doc_id' must be a non-empty string", line_no, "doc_id")
    day = _parse_date(raw.get("date"), line_no)
    lang = raw.get("lang")
    if not isinstance(lang, str) or not lang:
        raise ParseError("field 'lang' must be a non-empty string", line_no, "lang")
    sentences_raw = raw.get("sentences")
    if not isinstance(sentences_raw, list):
        raise ParseError("field 'sentences' must be an array", line_no, "sentences")
    sentences = tuple(_parse_sentence(s, line_no) for s in sentences_raw)
    return Document(doc_id=doc_id, date=day, lang=lang, sentences=sentences)


def _record_lines(stream: Iterable[str]) -> Iterator[tuple[int, str]]:
    for line_no, line in enumerate(stream, 1):
        line = line.strip()
        if line:
            yield line_no, line


def parse_corpus_stream(
    stream: Iterable[str] | IO[str],
    *,
    strict: bool = False,
    counters: ParseCounters | None = None,
) -> Iterator[Document]:
    """Lazily parse corpus records in file order.

    In lenient mode (the default) malformed records are counted and skipped,
    so the parse never aborts; in strict mode the first violation raises
    ParseError with its line number.
    """
    counters = counters if counters is not None else ParseCounters()
    for line_no, line in _record_lines(stream):
        try:
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(raw, dict):
                raise ParseError("record must be a JSON object", line_no)
            doc = _parse_document(raw, line_no)
        except ParseError as exc:
            if strict:
                raise
            counters.skipped += 1
            counters.reasons.append(str(exc))
            log.debug("skipping corpus record: %s", exc)
            continue
        counters.yielded += 1
        yield doc


def parse_event_file(
    stream: Iterable[str] | IO[str],
    *,
    strict: bool = False,
    counters: ParseCounters | None = None,
) -> list[EventRecord]:
    """Parse the event file, grouped and sorted by event date.

    Event ids are deterministic: ``<date>:<ordinal within that date>`` in
    file order. Pairs are all canonical pairs over the description's
    mentions with distinct keys; events with fewer than two distinct keys
    are retained with empty pairs and counted.
    """
    counters = counters if counters is not None else ParseCounters()
    parsed: list[tuple[Date, tuple[str, ...], tuple[EntityMention, ...]]] = []
    for line_no, line in _record_lines(stream):
        try:
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(raw, dict):
                raise ParseError("record must be a JSON object", line_no)
            day = _parse_date(raw.get("date"), line_no)
            sent = _parse_sentence({"tokens": raw.get("tokens"), "mentions": raw.get("mentions", [])}, line_no)
        except ParseError as exc:
            if strict:
                raise
            counters.skipped += 1
            counters.reasons.append(str(exc))
            log.debug("skipping event record: %s", exc)
            continue
        counters.yielded += 1
        parsed.append((day, sent.tokens, sent.mentions))

    parsed.sort(key=lambda item: item[0])  # stable: file order within a date
    events = []
    ordinal_by_date: dict[Date, int] = {}
    for day, tokens, mentions in parsed:
        ordinal = ordinal_by_date.get(day, 0)
        ordinal_by_date[day] = ordinal + 1
        keys = sorted({m.entity_key for m in mentions})
        pairs = tuple(
            canonical_pair(keys[i], keys[j])
            for i in range(len(keys) - 1)
            for j in range(i + 1, len(keys))
        )
        if not pairs:
            counters.pairless_events += 1
            log.warning("event %s:%d has no entity pair", day.isoformat(), ordinal)
        events.append(
            EventRecord(
                event_id=f"{day.isoformat()}:{ordinal}",
                event_date=day,
                description_tokens=tokens,
                mentions=mentions,
                pairs=pairs,
            )
        )
    return events


def naive_mention_fallback(text: str) -> Sentence:
    """Tokenize raw text and mark maximal capitalized runs as NE mentions.

    Demo-quality substitute for a real tagger: whitespace/punctuation
    tokenization, capitalization as the only entity signal (including the
    sentence-initial token), and no NOUN mentions at all.
    """
    tokens = _TOKEN_RE.findall(text)
    mentions = []
    run_start = None
    for idx, tok in enumerate(tokens + [""]):
        capitalized = bool(tok) and tok[0].isupper()
        if capitalized and run_start is None:
            run_start = idx
        elif not capitalized and run_start is not None:
            surface = " ".join(tokens[run_start:idx])
            mentions.append(
                EntityMention(run_start, idx, KIND_NAMED_ENTITY, normalize_entity_key(surface))
            )
            run_start = None
    return Sentence(tokens=tuple(tokens), mentions=tuple(mentions))


def mention_to_record(m: EntityMention) -> dict:
    return {"start": m.start, "end": m.end, "kind": m.kind, "key": m.entity_key}


def document_to_record(doc: Document) -> dict:
    """Serialize a Document back into the corpus record shape (round-trips)."""
    return {
        "doc_id": doc.doc_id,
        "date": doc.date.isoformat(),
        "lang": doc.lang,
        "sentences": [
            {"tokens": list(s.tokens), "mentions": [mention_to_record(m) for m in s.mentions]}
            for s in doc.sentences
        ],
    }


def event_to_record(ev: EventRecord) -> dict:
    return {
        "date": ev.event_date.isoformat(),
        "tokens": list(ev.description_tokens),
        "mentions": [mention_to_record(m) for m in ev.mentions],
    }
