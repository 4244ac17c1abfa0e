"""Shared builders for the test suite.

Randomized tests draw from seeded generators so failures reproduce; the
builders here construct structurally valid documents without going through
the JSONL parser.
"""

from __future__ import annotations

import random
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

import pytest

from reldenoise.model import Document, EntityMention, Sentence
from reldenoise.model import KIND_NAMED_ENTITY, KIND_NOUN

FIXTURES = Path(__file__).parent / "fixtures"


def make_mention(start: int, end: int, key: str, kind: str = KIND_NAMED_ENTITY) -> EntityMention:
    return EntityMention(start=start, end=end, kind=kind, entity_key=key)


def make_sentence(n_tokens: int, mentions: list[EntityMention]) -> Sentence:
    tokens = tuple(f"w{i}" for i in range(n_tokens))
    return Sentence(tokens=tokens, mentions=tuple(sorted(mentions, key=lambda m: (m.start, m.end))))


def make_doc(doc_id: str, date: Date, sentences: list[Sentence], lang: str = "en") -> Document:
    return Document(doc_id=doc_id, date=date, lang=lang, sentences=tuple(sentences))


def random_sentence(rng: random.Random, entity_pool: list[str],
                    max_mentions: int = 4) -> Sentence:
    """A sentence with random-length tokens and non-overlapping mentions."""
    n_tokens = rng.randint(6, 16)
    mentions: list[EntityMention] = []
    pos = 0
    budget = rng.randint(0, max_mentions)
    while pos < n_tokens - 1 and len(mentions) < budget:
        if rng.random() < 0.5:
            length = rng.randint(1, min(2, n_tokens - pos))
            kind = KIND_NAMED_ENTITY if rng.random() < 0.7 else KIND_NOUN
            mentions.append(EntityMention(
                start=pos, end=pos + length, kind=kind,
                entity_key=rng.choice(entity_pool)))
            pos += length
        else:
            pos += 1
    return make_sentence(n_tokens, mentions)


def random_corpus(rng: random.Random, max_articles: int = 200,
                  max_entities: int = 20, n_days: int = 30,
                  start: Date = Date(2019, 3, 1)) -> list[Document]:
    n_entities = rng.randint(2, max_entities)
    pool = [f"ent{i}" for i in range(n_entities)]
    n_articles = rng.randint(1, max_articles)
    docs = []
    for a in range(n_articles):
        day = start + timedelta(days=rng.randrange(n_days))
        sentences = [random_sentence(rng, pool) for _ in range(rng.randint(1, 3))]
        docs.append(make_doc(f"doc{a:04d}", day, sentences))
    return docs


@pytest.fixture(scope="session")
def planted_fixture_paths() -> dict[str, Path]:
    paths = {
        "corpus": FIXTURES / "corpus.jsonl",
        "events": FIXTURES / "events.jsonl",
        "truth": FIXTURES / "truth.jsonl",
        "embeddings": FIXTURES / "embeddings_separable.jsonl",
        "config": FIXTURES / "config.yaml",
    }
    for name, p in paths.items():
        assert p.is_file(), f"missing bundled fixture {name}: {p}"
    return paths
