"""Few-shot nearest-neighbor evaluation over fixed embeddings.

Embeddings arrive as newline-delimited JSON records {"id", "label",
"vector"}. An n-way k-shot episode pairs one query with k support examples
for each of n labels; the query is assigned the label of its most cosine-
similar support example, ties broken by the smallest support id.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import EvalError, ParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class LabeledVector:
    vec_id: str
    label: str
    vector: tuple[float, ...]


class EmbeddingTable:
    """Embeddings grouped by label, with ids unique across the table."""

    def __init__(self, rows: Iterable[LabeledVector]):
        self.rows: list[LabeledVector] = []
        self.by_label: dict[str, list[LabeledVector]] = {}
        self.dim: int | None = None
        seen: set[str] = set()
        for row in rows:
            if row.vec_id in seen:
                raise EvalError(f"duplicate embedding id {row.vec_id!r}")
            seen.add(row.vec_id)
            if self.dim is None:
                self.dim = len(row.vector)
            elif len(row.vector) != self.dim:
                raise EvalError(
                    f"embedding {row.vec_id!r} has dimension {len(row.vector)}, "
                    f"expected {self.dim}")
            self.rows.append(row)
            self.by_label.setdefault(row.label, []).append(row)
        for rows_of_label in self.by_label.values():
            rows_of_label.sort(key=lambda r: r.vec_id)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def labels(self) -> list[str]:
        return sorted(self.by_label)


def read_embeddings(stream: Iterable[str]) -> EmbeddingTable:
    rows = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", line_no=line_no) from exc
        try:
            vec = tuple(float(x) for x in rec["vector"])
            rows.append(LabeledVector(str(rec["id"]), str(rec["label"]), vec))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad embedding record: {exc}", line_no=line_no) from exc
    return EmbeddingTable(rows)


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise EvalError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(av, bv) / (na * nb))


@dataclass(frozen=True, slots=True)
class Episode:
    query: LabeledVector
    support: tuple[LabeledVector, ...]

    def __post_init__(self):
        if not self.support:
            raise EvalError("episode has no support examples")
        if any(s.vec_id == self.query.vec_id for s in self.support):
            raise EvalError("query appears in its own support set")


def evaluate_episode(episode: Episode) -> str:
    """Return the predicted label: nearest support by cosine, ties to the
    smallest support id."""
    best_sim = -math.inf
    best: LabeledVector | None = None
    for cand in episode.support:
        sim = cosine_similarity(episode.query.vector, cand.vector)
        if sim > best_sim or (sim == best_sim and best is not None
                              and cand.vec_id < best.vec_id):
            best_sim = sim
            best = cand
    assert best is not None
    return best.label


def _support_capable(table: EmbeddingTable, k: int) -> list[str]:
    return [lab for lab in table.labels if len(table.by_label[lab]) >= k]


def eligible_queries(table: EmbeddingTable, n_way: int, k_shot: int) -> list[LabeledVector]:
    """Examples usable as queries: their label keeps k distinct supports
    after removing the query, and n-1 other labels can field k supports."""
    capable = set(_support_capable(table, k_shot))
    out = []
    for row in sorted(table.rows, key=lambda r: r.vec_id):
        if len(table.by_label[row.label]) < k_shot + 1:
            continue
        if len(capable - {row.label}) < n_way - 1:
            continue
        out.append(row)
    return out


def build_episode(table: EmbeddingTable, query: LabeledVector, n_way: int,
                  k_shot: int, rng: random.Random) -> Episode:
    capable = [lab for lab in _support_capable(table, k_shot) if lab != query.label]
    if len(capable) < n_way - 1:
        raise EvalError(
            f"need {n_way - 1} other labels with >= {k_shot} examples, "
            f"have {len(capable)}")
    other_labels = rng.sample(capable, n_way - 1)
    support: list[LabeledVector] = []
    own_pool = [r for r in table.by_label[query.label] if r.vec_id != query.vec_id]
    support.extend(rng.sample(own_pool, k_shot))
    for lab in other_labels:
        support.extend(rng.sample(table.by_label[lab], k_shot))
    return Episode(query=query, support=tuple(support))


def run_fewshot(
    table: EmbeddingTable,
    n_way: int,
    k_shot: int,
    trials: int = 10,
    seed: int | str = 0,
    num_queries: int | None = None,
) -> dict:
    """Run the evaluation and return a report dict.

    Each trial visits every eligible example once as the query, with fresh
    support draws. When ``num_queries`` is given, each trial instead samples
    that many queries with replacement from the eligible pool.
    """
    if n_way < 2:
        raise EvalError(f"n_way must be >= 2, got {n_way}")
    if k_shot < 1:
        raise EvalError(f"k_shot must be >= 1, got {k_shot}")
    if trials < 1:
        raise EvalError(f"trials must be >= 1, got {trials}")
    capable = _support_capable(table, k_shot)
    if len(capable) < n_way:
        short = [lab for lab in table.labels if lab not in capable]
        detail = f"; label {short[0]!r} has only {len(table.by_label[short[0]])}" if short else ""
        raise EvalError(
            f"need {n_way} labels with >= {k_shot} examples, have {len(capable)}{detail}")
    pool = eligible_queries(table, n_way, k_shot)
    if not pool:
        raise EvalError(
            f"no label has the {k_shot + 1} examples needed to field a query")

    per_trial: list[float] = []
    total_correct = 0
    total_queries = 0
    for t in range(trials):
        rng = random.Random(f"{seed}|trial|{t}")
        if num_queries is None:
            queries = list(pool)
        else:
            queries = [pool[rng.randrange(len(pool))] for _ in range(num_queries)]
            if num_queries > len(pool):
                log.warning(
                    "trial %d: %d queries requested but only %d eligible "
                    "examples; sampling with replacement", t, num_queries, len(pool))
        correct = 0
        for query in queries:
            episode = build_episode(table, query, n_way, k_shot, rng)
            if evaluate_episode(episode) == query.label:
                correct += 1
        per_trial.append(correct / len(queries))
        total_correct += correct
        total_queries += len(queries)
    mean_acc = total_correct / total_queries
    return {
        "n_way": n_way,
        "k_shot": k_shot,
        "trials": trials,
        "queries_per_trial": total_queries // trials,
        "total_queries": total_queries,
        "mean_accuracy": mean_acc,
        "per_trial_accuracy": per_trial,
    }
