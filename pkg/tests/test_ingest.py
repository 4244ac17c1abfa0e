import json
from datetime import date as Date

import pytest

from reldenoise.errors import ParseError
from reldenoise.ingest import (
    EventRecord,
    ParseCounters,
    document_to_record,
    naive_mention_fallback,
    parse_corpus_stream,
    parse_event_file,
)
from reldenoise.model import EntityPair


def doc_line(doc_id="d1", date="2019-01-02", lang="en", sentences=None):
    if sentences is None:
        sentences = [{
            "tokens": ["Acme", "Corp", "bought", "Zeta"],
            "mentions": [
                {"start": 0, "end": 2, "kind": "NE", "key": "Acme  Corp"},
                {"start": 3, "end": 4, "kind": "NE", "key": "Zeta"},
            ],
        }]
    return json.dumps({"doc_id": doc_id, "date": date, "lang": lang, "sentences": sentences})


def test_parse_corpus_happy_path_normalizes_keys():
    docs = list(parse_corpus_stream([doc_line()]))
    assert len(docs) == 1
    doc = docs[0]
    assert doc.doc_id == "d1"
    assert doc.date == Date(2019, 1, 2)
    keys = [m.entity_key for m in doc.sentences[0].mentions]
    assert keys == ["acme corp", "zeta"]


def test_parse_corpus_lenient_skips_and_counts():
    lines = [
        doc_line(),
        "not json at all {",
        doc_line(date="02/01/2019"),
        "",
        doc_line(doc_id="d2"),
    ]
    counters = ParseCounters()
    docs = list(parse_corpus_stream(lines, counters=counters))
    assert [d.doc_id for d in docs] == ["d1", "d2"]
    assert counters.yielded == 2
    assert counters.skipped == 2
    assert len(counters.reasons) == 2


def test_parse_corpus_strict_raises_with_line_number():
    lines = [doc_line(), doc_line(date="not-a-date")]
    with pytest.raises(ParseError) as err:
        list(parse_corpus_stream(lines, strict=True))
    assert "line 2" in str(err.value)
    assert err.value.field == "date"


def test_parse_corpus_rejects_overlapping_mentions():
    bad = [{
        "tokens": ["a", "b", "c"],
        "mentions": [
            {"start": 0, "end": 2, "kind": "NE", "key": "x"},
            {"start": 1, "end": 3, "kind": "NE", "key": "y"},
        ],
    }]
    with pytest.raises(ParseError):
        list(parse_corpus_stream([doc_line(sentences=bad)], strict=True))


def test_parse_corpus_accepts_unsorted_mentions():
    sentences = [{
        "tokens": ["a", "b", "c", "d"],
        "mentions": [
            {"start": 2, "end": 3, "kind": "NE", "key": "later"},
            {"start": 0, "end": 1, "kind": "NOUN", "key": "earlier"},
        ],
    }]
    docs = list(parse_corpus_stream([doc_line(sentences=sentences)], strict=True))
    starts = [m.start for m in docs[0].sentences[0].mentions]
    assert starts == [0, 2]


def test_document_record_round_trip():
    doc = list(parse_corpus_stream([doc_line()], strict=True))[0]
    rec = document_to_record(doc)
    doc2 = list(parse_corpus_stream([json.dumps(rec)], strict=True))[0]
    assert doc == doc2


def event_line(date, keys, tokens=None):
    tokens = tokens or ["something", "happened"]
    mentions = [
        {"start": 0, "end": 1, "kind": "NE", "key": k} for k in keys
    ]
    # keep spans structurally valid: spread mentions over distinct positions
    for i, m in enumerate(mentions):
        m["start"], m["end"] = i, i + 1
    tokens = list(tokens) + ["pad"] * max(0, len(keys) - len(tokens))
    return json.dumps({"date": date, "tokens": tokens, "mentions": mentions})


def test_parse_event_file_sorted_with_deterministic_ids():
    lines = [
        event_line("2019-02-05", ["b", "a"]),
        event_line("2019-02-01", ["x", "y"]),
        event_line("2019-02-05", ["c", "d"]),
    ]
    events = parse_event_file(lines)
    assert [e.event_id for e in events] == ["2019-02-01:0", "2019-02-05:0", "2019-02-05:1"]
    assert events[0].event_date == Date(2019, 2, 1)
    # pairs are canonical over sorted distinct keys
    assert events[1].pairs == (EntityPair("a", "b"),)


def test_parse_event_file_multiple_pairs_from_three_keys():
    events = parse_event_file([event_line("2019-03-01", ["c", "a", "b"])])
    assert events[0].pairs == (
        EntityPair("a", "b"), EntityPair("a", "c"), EntityPair("b", "c"),
    )


def test_parse_event_file_keeps_pairless_events():
    counters = ParseCounters()
    events = parse_event_file(
        [event_line("2019-03-01", ["solo"]), event_line("2019-03-02", ["p", "q"])],
        counters=counters,
    )
    assert len(events) == 2
    assert events[0].pairs == ()
    assert counters.pairless_events == 1


def test_parse_event_file_duplicate_keys_collapse():
    # two mentions of one key plus one other key -> a single pair
    events = parse_event_file([event_line("2019-03-01", ["dup", "dup", "other"])])
    assert events[0].pairs == (EntityPair("dup", "other"),)


def test_naive_mention_fallback_marks_capitalized_runs():
    sentence = naive_mention_fallback("Acme Corp sued Zeta Labs in Berlin today.")
    keys = [m.entity_key for m in sentence.mentions]
    assert keys == ["acme corp", "zeta labs", "berlin"]
    assert sentence.tokens[-1] == "."
    spans = [(m.start, m.end) for m in sentence.mentions]
    assert spans == [(0, 2), (3, 5), (6, 7)]


def test_naive_mention_fallback_includes_sentence_initial_token():
    sentence = naive_mention_fallback("The quick fox")
    assert [m.entity_key for m in sentence.mentions] == ["the"]
