"""Synthetic corpus generator with known relation labels.

Builds a dated news corpus where the relation expressed by every sentence
is known, so pipeline output can be scored for label purity:

- planted events: each event introduces one entity pair expressing one
  relation in a burst of sentences dated inside the harvest window that
  follows the event date;
- noise: the same pairs reappear outside their windows expressing a
  different relation;
- decoy pairs: pairs absent from the event file that burst repeatedly,
  each burst locally consistent but with the relation changing from burst
  to burst.

Also provides a flat bulk generator for throughput tests.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from pathlib import Path
from typing import IO

from .model import (
    KIND_NAMED_ENTITY,
    KIND_NOUN,
    Document,
    EntityMention,
    EntityPair,
    Sentence,
    canonical_pair,
    extract_document_statements,
    normalize_entity_key,
)

# Relation templates: "{A}" and "{B}" are entity slots.
RELATION_TEMPLATES: dict[str, list[str]] = {
    "acquisition": ["{A}", "agreed", "to", "acquire", "{B}", "in", "a", "cash", "deal"],
    "lawsuit": ["{A}", "filed", "a", "lawsuit", "against", "{B}", "over", "contract", "claims"],
    "appointment": ["{A}", "named", "{B}", "as", "its", "new", "chief", "executive"],
    "final": ["{A}", "defeated", "{B}", "in", "the", "championship", "final"],
    "partnership": ["{A}", "signed", "a", "supply", "agreement", "with", "{B}"],
    "sanction": ["{A}", "imposed", "new", "tariffs", "on", "imports", "from", "{B}"],
    "funding": ["{A}", "led", "the", "latest", "funding", "round", "for", "{B}"],
    "visit": ["{A}", "opened", "formal", "talks", "with", "{B}", "this", "week"],
}

_TRAILERS = [
    [",", "officials", "said", "."],
    [",", "a", "spokesman", "confirmed", "."],
    ["on", "Monday", "."],
    ["late", "last", "night", "."],
    [",", "ending", "months", "of", "speculation", "."],
    ["."],
]

_NE_FIRST = [
    "Acme", "Borealis", "Cascade", "Deltaport", "Everline", "Fairmont", "Glenrock",
    "Harborview", "Ironwood", "Jetstream", "Kestrel", "Lakeshore", "Meridian",
    "Northbridge", "Osprey", "Pinnacle", "Quarry", "Redwood", "Stonegate",
    "Tidewater", "Umber", "Vantage", "Westfield", "Yellowtail", "Zephyr",
    "Altona", "Bluepeak", "Coralbay", "Dunmore", "Eastgate", "Foxglove",
    "Granville", "Hollyfield", "Inverness", "Juniper", "Kingsford", "Larkspur",
    "Montrose", "Nightingale", "Oakhurst", "Penrose", "Quillstone", "Rosewater",
    "Silverpine", "Thornbury", "Uplands", "Violetta", "Wintermere", "Yarrow",
    "Ashworth", "Briarcliff", "Coppermill", "Dovetail", "Elmsworth", "Fernbrook",
    "Goldcrest", "Hazelmere", "Ivorydale", "Jacaranda", "Kelpford",
]
_NE_SECOND = ["Corp", "Group", "Bank", "Labs", "Holdings", "Partners", "Industries", "Systems"]

_NOUNS = [
    "prosecutors", "regulators", "miners", "dockworkers", "nurses", "pilots",
    "farmers", "teachers", "publishers", "brewers", "refiners", "insurers",
    "carmakers", "retailers", "broadcasters", "shipbuilders", "growers",
    "drillers", "bakers", "printers", "weavers", "smelters", "tanners",
    "glaziers", "coopers", "masons", "foresters", "netmakers",
]


@dataclass(frozen=True, slots=True)
class PlantedSpec:
    n_events: int = 10
    sentences_per_event: tuple[int, int] = (5, 15)
    noise_per_event: tuple[int, int] = (2, 5)
    n_decoy_pairs: int = 50
    bursts_per_decoy: int = 2
    sentences_per_burst: tuple[int, int] = (3, 4)
    burst_span_days: int = 4
    start_date: Date = Date(2019, 1, 1)
    n_days: int = 90
    noun_fraction: float = 0.3
    noun_window_days: int = 4
    ne_window_days: int = 7
    background_per_day: int = 2
    relations: tuple[str, ...] = tuple(sorted(RELATION_TEMPLATES))


@dataclass(frozen=True, slots=True)
class PlantedEvent:
    event_date: Date
    pair: EntityPair
    relation: str
    kind: str
    window_days: int


@dataclass(slots=True)
class PlantedCorpus:
    spec: PlantedSpec
    documents: list[Document]
    events: list[PlantedEvent]
    event_records: list[dict]
    truth: dict[str, str] = field(default_factory=dict)

    @property
    def planted_pairs(self) -> list[EntityPair]:
        return [ev.pair for ev in self.events]

    def write_corpus(self, sink: IO[str]):
        from .ingest import document_to_record
        for doc in self.documents:
            sink.write(json.dumps(document_to_record(doc), separators=(",", ":")) + "\n")

    def write_events(self, sink: IO[str]):
        for rec in self.event_records:
            sink.write(json.dumps(rec, separators=(",", ":")) + "\n")

    def write_truth(self, sink: IO[str]):
        for stmt_id in sorted(self.truth):
            rec = {"statement_id": stmt_id, "relation": self.truth[stmt_id]}
            sink.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_truth(stream) -> dict[str, str]:
    truth = {}
    for line in stream:
        line = line.strip()
        if line:
            rec = json.loads(line)
            truth[rec["statement_id"]] = rec["relation"]
    return truth


def _render(relation: str, a_tokens: list[str], b_tokens: list[str],
            kind: str, rng: random.Random) -> Sentence:
    tokens: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    for tok in RELATION_TEMPLATES[relation]:
        if tok in ("{A}", "{B}"):
            ent = a_tokens if tok == "{A}" else b_tokens
            spans[tok] = (len(tokens), len(tokens) + len(ent))
            tokens.extend(ent)
        else:
            tokens.append(tok)
    tokens.extend(rng.choice(_TRAILERS))
    mentions = sorted(
        (
            EntityMention(start=s, end=e, kind=kind,
                          entity_key=normalize_entity_key(" ".join(tokens[s:e])))
            for s, e in spans.values()
        ),
        key=lambda m: (m.start, m.end),
    )
    return Sentence(tokens=tuple(tokens), mentions=tuple(mentions))


def _entity_surfaces(rng: random.Random, n_ne: int, n_noun: int) -> tuple[list[list[str]], list[list[str]]]:
    combos = [[first, second] for first in _NE_FIRST for second in _NE_SECOND]
    if n_ne > len(combos) or n_noun > len(_NOUNS):
        raise ValueError("not enough distinct entity surfaces for the requested sizes")
    ne = rng.sample(combos, n_ne)
    noun = [[n] for n in rng.sample(_NOUNS, n_noun)]
    return ne, noun


def _other_relation(relation: str, relations: tuple[str, ...], rng: random.Random) -> str:
    others = [r for r in relations if r != relation]
    return rng.choice(others)


def generate_planted_corpus(spec: PlantedSpec = PlantedSpec(),
                            seed: int | str = 0) -> PlantedCorpus:
    """Build the corpus, the event file records, and statement-level truth."""
    rng = random.Random(f"{seed}|planted")
    n_noun_events = round(spec.n_events * spec.noun_fraction)
    n_ne_events = spec.n_events - n_noun_events
    # Planted pairs use entities disjoint from decoy entities.
    ne_surfaces, noun_surfaces = _entity_surfaces(
        rng, n_ne_events * 2 + spec.n_decoy_pairs * 2, n_noun_events * 2)

    documents: list[Document] = []
    truth: dict[str, str] = {}

    def add_doc(doc_id: str, day: Date, sentence: Sentence, relation: str):
        doc = Document(doc_id=doc_id, date=day, lang="en", sentences=(sentence,))
        documents.append(doc)
        for stmt in extract_document_statements(doc):
            truth[stmt.statement_id] = relation

    events: list[PlantedEvent] = []
    event_records: list[dict] = []
    last_start = spec.n_days - spec.ne_window_days - 1
    for idx in range(spec.n_events):
        is_noun = idx < n_noun_events
        if is_noun:
            a, b = noun_surfaces[idx * 2], noun_surfaces[idx * 2 + 1]
            kind, window_days = KIND_NOUN, spec.noun_window_days
        else:
            ne_idx = (idx - n_noun_events) * 2
            a, b = ne_surfaces[ne_idx], ne_surfaces[ne_idx + 1]
            kind, window_days = KIND_NAMED_ENTITY, spec.ne_window_days
        relation = spec.relations[idx % len(spec.relations)]
        pair = canonical_pair(normalize_entity_key(" ".join(a)),
                              normalize_entity_key(" ".join(b)))
        event_date = spec.start_date + timedelta(days=rng.randrange(1, last_start))
        events.append(PlantedEvent(event_date=event_date, pair=pair,
                                   relation=relation, kind=kind, window_days=window_days))

        desc = _render(relation, a, b, kind, rng)
        event_records.append({
            "date": event_date.isoformat(),
            "tokens": list(desc.tokens),
            "mentions": [
                {"start": m.start, "end": m.end, "kind": m.kind, "key": m.entity_key}
                for m in desc.mentions
            ],
        })

        n_sents = rng.randint(*spec.sentences_per_event)
        for i in range(n_sents):
            day = event_date + timedelta(days=rng.randint(0, window_days))
            add_doc(f"p{idx:02d}-{i:03d}", day, _render(relation, a, b, kind, rng), relation)

        # Same pair, different relation, dated outside the event window.
        n_noise = rng.randint(*spec.noise_per_event)
        window_start = event_date
        window_end = event_date + timedelta(days=window_days)
        out_days = [
            spec.start_date + timedelta(days=d)
            for d in range(spec.n_days)
            if not window_start <= spec.start_date + timedelta(days=d) <= window_end
        ]
        for i in range(n_noise):
            noise_rel = _other_relation(relation, spec.relations, rng)
            day = rng.choice(out_days)
            add_doc(f"x{idx:02d}-{i:03d}", day, _render(noise_rel, a, b, kind, rng), noise_rel)

    # Decoy pairs: never in the event file, bursting with a per-burst relation.
    decoy_base = n_ne_events * 2
    burst_gap = max(20, spec.burst_span_days + spec.ne_window_days + 2)
    for d_idx in range(spec.n_decoy_pairs):
        a = ne_surfaces[decoy_base + d_idx * 2]
        b = ne_surfaces[decoy_base + d_idx * 2 + 1]
        burst_relations = rng.sample(spec.relations, spec.bursts_per_decoy)
        first_start = rng.randrange(
            1, max(2, spec.n_days - burst_gap * (spec.bursts_per_decoy - 1) - spec.burst_span_days - 1))
        for b_idx, relation in enumerate(burst_relations):
            start = spec.start_date + timedelta(days=first_start + b_idx * burst_gap)
            for i in range(rng.randint(*spec.sentences_per_burst)):
                day = start + timedelta(days=rng.randint(0, spec.burst_span_days))
                add_doc(f"d{d_idx:03d}-{b_idx}-{i:02d}", day,
                        _render(relation, a, b, KIND_NAMED_ENTITY, rng), relation)

    # Background articles mention one entity each: they dilute window
    # article counts without touching any pair count.
    bg_templates = [
        (["Markets", "in", "{X}", "closed", "mixed", "."], 2),
        (["Heavy", "rain", "disrupted", "traffic", "in", "{X}", "."], 5),
        (["{X}", "reported", "steady", "quarterly", "results", "."], 0),
        (["Officials", "in", "{X}", "announced", "a", "road", "upgrade", "."], 2),
    ]
    bg_entities = [f"{name}ville" for name in _NE_FIRST[:30]]
    for day_idx in range(spec.n_days):
        day = spec.start_date + timedelta(days=day_idx)
        for j in range(spec.background_per_day):
            template, slot = rng.choice(bg_templates)
            surface = rng.choice(bg_entities)
            tokens = [surface if t == "{X}" else t for t in template]
            mention = EntityMention(start=slot, end=slot + 1, kind=KIND_NAMED_ENTITY,
                                    entity_key=normalize_entity_key(surface))
            sentence = Sentence(tokens=tuple(tokens), mentions=(mention,))
            documents.append(Document(doc_id=f"g{day_idx:03d}-{j}", date=day,
                                      lang="en", sentences=(sentence,)))

    documents.sort(key=lambda doc: (doc.date, doc.doc_id))
    _check_plant_margins(documents, events)
    return PlantedCorpus(spec=spec, documents=documents, events=events,
                         event_records=event_records, truth=truth)


def _check_plant_margins(documents: list[Document], events: list[PlantedEvent],
                         min_count: int = 3, min_ppmi: float = 1.0):
    """Guard the construction: every planted pair must clear the default
    selection filter inside its own window, by direct recount."""
    for ev in events:
        window_end = ev.event_date + timedelta(days=ev.window_days)
        n_articles = 0
        pair_articles = 0
        for doc in documents:
            if not ev.event_date <= doc.date <= window_end:
                continue
            n_articles += 1
            keys = {m.entity_key for s in doc.sentences for m in s.mentions}
            if ev.pair.key_a in keys and ev.pair.key_b in keys:
                pair_articles += 1
        if pair_articles < min_count:
            raise ValueError(
                f"planted pair {ev.pair.key_a}|{ev.pair.key_b} has only "
                f"{pair_articles} in-window articles")
        # Entities are exclusive to their pair, so in-window PPMI is
        # log2(N/c); require a clear margin over the filter threshold.
        margin = math.log2(n_articles / pair_articles)
        if margin < min_ppmi + 0.1:
            raise ValueError(
                f"planted pair {ev.pair.key_a}|{ev.pair.key_b} PPMI margin "
                f"{margin:.2f} too close to the {min_ppmi} threshold")


# ---------------------------------------------------------------------------
# Bulk corpus for throughput tests.

def write_bulk_corpus(sink: IO[str], n_sentences: int, n_entities: int = 1000,
                      n_days: int = 60, seed: int | str = 0,
                      start_date: Date = Date(2019, 1, 1)) -> int:
    """Write a flat single-sentence-per-article corpus of the given size.

    Sentences rotate through a small template set with 2 or 3 entity
    mentions; returns the number of sentences written.
    """
    rng = random.Random(f"{seed}|bulk")
    entities = [f"Entity{i}" for i in range(n_entities)]
    days = [(start_date + timedelta(days=d)).isoformat() for d in range(n_days)]
    lines: list[str] = []
    written = 0
    for i in range(n_sentences):
        k = 3 if rng.random() < 0.25 else 2
        picks = rng.sample(range(n_entities), k)
        if k == 2:
            tokens = [entities[picks[0]], "met", "with", entities[picks[1]], "today", "."]
            spans = [(0, 1), (3, 4)]
        else:
            tokens = [entities[picks[0]], "joined", entities[picks[1]], "and",
                      entities[picks[2]], "for", "talks", "."]
            spans = [(0, 1), (2, 3), (4, 5)]
        mentions = [
            {"start": s, "end": e, "kind": "NE", "key": entities[p].lower()}
            for (s, e), p in zip(spans, picks)
        ]
        rec = {
            "doc_id": f"b{i:07d}",
            "date": days[i % n_days],
            "lang": "en",
            "sentences": [{"tokens": tokens, "mentions": mentions}],
        }
        lines.append(json.dumps(rec, separators=(",", ":")))
        written += 1
        if len(lines) >= 20000:
            sink.write("\n".join(lines) + "\n")
            lines = []
    if lines:
        sink.write("\n".join(lines) + "\n")
    return written


def write_bulk_corpus_file(path: str | Path, n_sentences: int, **kwargs) -> int:
    with open(path, "w", encoding="utf-8") as sink:
        return write_bulk_corpus(sink, n_sentences, **kwargs)


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="Generate the planted fixture corpus (corpus.jsonl, "
                    "events.jsonl, truth.jsonl) or a flat bulk corpus.")
    parser.add_argument("--out", required=True, help="output directory (planted) or file (bulk)")
    parser.add_argument("--seed", default="0", help="generation seed")
    parser.add_argument("--bulk", type=int, default=None, metavar="N",
                        help="write an N-sentence bulk corpus instead of the planted fixture")
    parser.add_argument("--events", type=int, default=10, help="planted event count")
    args = parser.parse_args(argv)

    if args.bulk is not None:
        n = write_bulk_corpus_file(args.out, args.bulk, seed=args.seed)
        print(f"wrote {n} sentences to {args.out}")
        return 0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate_planted_corpus(PlantedSpec(n_events=args.events), seed=args.seed)
    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        corpus.write_corpus(fh)
    with open(out / "events.jsonl", "w", encoding="utf-8") as fh:
        corpus.write_events(fh)
    with open(out / "truth.jsonl", "w", encoding="utf-8") as fh:
        corpus.write_truth(fh)
    n_sentences = sum(len(d.sentences) for d in corpus.documents)
    print(f"wrote {len(corpus.documents)} articles / {n_sentences} sentences, "
          f"{len(corpus.events)} events, {len(corpus.truth)} labeled statements to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
