"""Domain types and the pure sentence-level extraction/marking operations.

Everything here is an immutable value; the operations are pure functions and
safe to call concurrently from any number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

from .errors import DegeneratePairError, MalformedStatementError

# Kinds of entity mention. The kind decides which date-window length applies
# during event-guided pair selection (nouns get the shorter window).
KIND_NAMED_ENTITY = "NE"
KIND_NOUN = "NOUN"
MENTION_KINDS = (KIND_NAMED_ENTITY, KIND_NOUN)

# Literal marker tokens inserted around the two entity spans. These are part
# of the wire format and must survive corruption unaltered.
E1_OPEN = "[E1]"
E1_CLOSE = "[/E1]"
E2_OPEN = "[E2]"
E2_CLOSE = "[/E2]"
MARKER_TOKENS = (E1_OPEN, E1_CLOSE, E2_OPEN, E2_CLOSE)


def normalize_entity_key(surface: str) -> str:
    """Normalize a surface string into an entity key.

    Lowercases and collapses internal whitespace; this string identity is the
    only entity resolution the pipeline performs.
    """
    return " ".join(surface.split()).lower()


@dataclass(frozen=True, slots=True)
class EntityMention:
    """A token span ``[start, end)`` referring to one entity."""

    start: int
    end: int
    kind: str
    entity_key: str


@dataclass(frozen=True, slots=True)
class Sentence:
    tokens: tuple[str, ...]
    mentions: tuple[EntityMention, ...]


@dataclass(frozen=True, slots=True)
class Document:
    doc_id: str
    date: Date
    lang: str
    sentences: tuple[Sentence, ...]


@dataclass(frozen=True, slots=True)
class EntityPair:
    """Order-invariant pair of two distinct entity keys (``key_a <= key_b``)."""

    key_a: str
    key_b: str

    def __post_init__(self):
        if self.key_a == self.key_b:
            raise DegeneratePairError(f"pair of identical keys: {self.key_a!r}")
        if self.key_a > self.key_b:
            a, b = self.key_b, self.key_a
            object.__setattr__(self, "key_a", a)
            object.__setattr__(self, "key_b", b)

    def contains(self, key: str) -> bool:
        return key == self.key_a or key == self.key_b


def canonical_pair(key_a: str, key_b: str) -> EntityPair:
    """Build the canonical pair for two keys; commutative and idempotent.

    Raises DegeneratePairError for equal keys and ValueError for empty ones.
    """
    if not key_a or not key_b:
        raise ValueError("entity keys must be non-empty")
    return EntityPair(key_a, key_b)


@dataclass(frozen=True, slots=True)
class RelationStatement:
    """A sentence with two marked entity-mention spans.

    ``span1`` always precedes ``span2`` in token order; directionality is
    carried by the marker positions, not by the pair, which is canonical.
    """

    statement_id: str
    doc_id: str
    date: Date
    tokens: tuple[str, ...]
    span1: tuple[int, int]
    span2: tuple[int, int]
    pair: EntityPair


def statement_id(doc_id: str, sentence_index: int, mention_i: int, mention_j: int) -> str:
    """Deterministic statement id: ``<doc_id>:<sentence>:<mention_i>:<mention_j>``.

    Parsed from the right, so a doc id may itself contain colons.
    """
    return f"{doc_id}:{sentence_index}:{mention_i}:{mention_j}"


def parse_statement_id(sid: str) -> tuple[str, int, int, int]:
    """Invert statement_id: (doc_id, sentence_index, mention_i, mention_j)."""
    try:
        doc_id, sentence_index, mention_i, mention_j = sid.rsplit(":", 3)
        return doc_id, int(sentence_index), int(mention_i), int(mention_j)
    except ValueError as exc:
        raise MalformedStatementError(f"bad statement id {sid!r}") from exc


def validate_sentence(tokens, mentions) -> str | None:
    """Return a reason string if the sentence invariants are violated, else None.

    Checks span bounds, start < end, sort order by start and non-overlap.
    """
    n = len(tokens)
    prev_end = 0
    prev_start = -1
    for m in mentions:
        if m.start < 0 or m.end > n:
            return f"mention span ({m.start},{m.end}) outside token bounds 0..{n}"
        if m.start >= m.end:
            return f"mention span ({m.start},{m.end}) is empty or inverted"
        if m.start < prev_start:
            return "mentions not sorted by start index"
        if m.start < prev_end:
            return f"mention at {m.start} overlaps previous mention ending at {prev_end}"
        if not m.entity_key:
            return "mention has empty entity key"
        if m.kind not in MENTION_KINDS:
            return f"unknown mention kind {m.kind!r}"
        prev_start, prev_end = m.start, m.end
    return None


def extract_candidate_statements(
    sentence: Sentence, doc_id: str, date: Date, sentence_index: int = 0
) -> list[RelationStatement]:
    """All candidate relation statements of one sentence.

    Pairs every unordered combination of mention instances, dropping
    degenerate combinations whose two spans share one entity key. For a
    sentence whose m mentions all carry distinct keys this yields exactly
    C(m, 2) statements. span1 is always the leftmost mention of the pair.
    """
    mentions = sentence.mentions
    m = len(mentions)
    if m < 2:
        return []
    out = []
    for i in range(m - 1):
        mi = mentions[i]
        for j in range(i + 1, m):
            mj = mentions[j]
            if mi.entity_key == mj.entity_key:
                continue
            out.append(
                RelationStatement(
                    statement_id=statement_id(doc_id, sentence_index, i, j),
                    doc_id=doc_id,
                    date=date,
                    tokens=sentence.tokens,
                    span1=(mi.start, mi.end),
                    span2=(mj.start, mj.end),
                    pair=EntityPair(mi.entity_key, mj.entity_key),
                )
            )
    return out


def extract_document_statements(doc: Document) -> list[RelationStatement]:
    """Candidate statements for every sentence of a document, in order."""
    out = []
    for idx, sentence in enumerate(doc.sentences):
        out.extend(extract_candidate_statements(sentence, doc.doc_id, doc.date, idx))
    return out


def insert_markers(stmt: RelationStatement) -> list[str]:
    """Wrap the two spans in [E1]..[/E1] and [E2]..[/E2] marker tokens.

    The original tokens are preserved in order; output length is input
    length + 4. Raises MalformedStatementError for overlapping or
    out-of-order spans.
    """
    (i, j), (k, l) = stmt.span1, stmt.span2
    tokens = stmt.tokens
    if not (0 <= i < j <= k < l <= len(tokens)):
        raise MalformedStatementError(
            f"statement {stmt.statement_id}: spans ({i},{j}) and ({k},{l}) "
            f"overlap or leave token bounds 0..{len(tokens)}"
        )
    return [
        *tokens[:i],
        E1_OPEN,
        *tokens[i:j],
        E1_CLOSE,
        *tokens[j:k],
        E2_OPEN,
        *tokens[k:l],
        E2_CLOSE,
        *tokens[l:],
    ]


@dataclass(frozen=True, slots=True)
class MarkedStatement:
    """A marked token sequence plus the positions of the span contents.

    ``span1``/``span2`` index the entity tokens inside the marked sequence
    (exclusive of the markers themselves); this is the corruption input.
    """

    statement_id: str
    tokens: tuple[str, ...]
    span1: tuple[int, int]
    span2: tuple[int, int]


def mark_statement(stmt: RelationStatement) -> MarkedStatement:
    """insert_markers plus the span positions shifted into the marked sequence."""
    marked = insert_markers(stmt)
    (i, j), (k, l) = stmt.span1, stmt.span2
    return MarkedStatement(
        statement_id=stmt.statement_id,
        tokens=tuple(marked),
        span1=(i + 1, j + 1),
        span2=(k + 3, l + 3),
    )
