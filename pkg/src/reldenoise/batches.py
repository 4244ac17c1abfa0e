"""Blank/mask corruption and training-batch serialization.

Each entity span is independently collapsed to a single [BLANK] token with
probability alpha; each remaining ordinary token is replaced by [MASK] with
probability beta, its original kept as an MLM target keyed by its position
in the corrupted sequence. Markers and [BLANK]s are never masked. The batch
file stores plain token strings so any tokenizer can sit downstream.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import IO, Iterable

from .groups import TrainingGroup
from .model import MARKER_TOKENS, MarkedStatement, mark_statement

BLANK_TOKEN = "[BLANK]"
MASK_TOKEN = "[MASK]"
# Tokens the corruption step must leave untouched.
PROTECTED_TOKENS = frozenset(MARKER_TOKENS) | {BLANK_TOKEN}

ROLE_POSITIVE = "pos"
ROLE_EASY_NEGATIVE = "easy_neg"
ROLE_HARD_NEGATIVE = "hard_neg"


@dataclass(frozen=True, slots=True)
class CorruptionConfig:
    alpha: float = 0.7
    beta: float = 0.15
    seed: int | str = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")


@dataclass(slots=True)
class CorruptedStatement:
    """A marked statement after blanking and masking.

    ``mlm_targets`` maps positions in ``tokens`` to the original token that
    was masked there; ``blanked`` records the per-entity blank decisions.
    """

    statement_id: str
    tokens: list[str]
    mlm_targets: dict[int, str]
    blanked: tuple[bool, bool]


def corrupt_statement(marked: MarkedStatement, config: CorruptionConfig,
                      rng: random.Random) -> CorruptedStatement:
    """Apply blank then mask corruption to one marked statement.

    Draw order is fixed: one blank draw per entity (first then second), then
    one mask draw per eligible token left to right over the post-blank
    sequence. That makes corruption a pure function of (statement, rng
    state).
    """
    blank1 = rng.random() < config.alpha
    blank2 = rng.random() < config.alpha
    (i1, j1), (i2, j2) = marked.span1, marked.span2
    tokens = list(marked.tokens)
    out: list[str] = []
    pos = 0
    while pos < len(tokens):
        if pos == i1:
            out.append(BLANK_TOKEN) if blank1 else out.extend(tokens[i1:j1])
            pos = j1
        elif pos == i2:
            out.append(BLANK_TOKEN) if blank2 else out.extend(tokens[i2:j2])
            pos = j2
        else:
            out.append(tokens[pos])
            pos += 1
    mlm_targets: dict[int, str] = {}
    for idx, tok in enumerate(out):
        if tok in PROTECTED_TOKENS:
            continue
        if rng.random() < config.beta:
            mlm_targets[idx] = tok
            out[idx] = MASK_TOKEN
    return CorruptedStatement(
        statement_id=marked.statement_id,
        tokens=out,
        mlm_targets=mlm_targets,
        blanked=(blank1, blank2),
    )


def decorrupt(corrupted: CorruptedStatement, original: MarkedStatement) -> list[str]:
    """Invert the corruption using the original spans; reconstructs the
    marked sequence exactly."""
    tokens = list(corrupted.tokens)
    for idx, tok in corrupted.mlm_targets.items():
        tokens[idx] = tok
    (i1, j1), (i2, j2) = original.span1, original.span2
    # Expand the second blank first so the first span's indices stay valid.
    if corrupted.blanked[1]:
        blank_at = tokens.index("[E2]") + 1
        tokens[blank_at:blank_at + 1] = list(original.tokens[i2:j2])
    if corrupted.blanked[0]:
        blank_at = tokens.index("[E1]") + 1
        tokens[blank_at:blank_at + 1] = list(original.tokens[i1:j1])
    return tokens


# ---------------------------------------------------------------------------
# Batch file and manifest.

@dataclass(slots=True)
class BatchManifest:
    alpha: float
    beta: float
    seed: int | str
    batch_size: int
    n_groups: int = 0
    n_batches: int = 0
    n_statements: int = 0
    sha256: str = ""
    format_version: int = 1

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "n_groups": self.n_groups,
            "n_batches": self.n_batches,
            "n_statements": self.n_statements,
            "sha256": self.sha256,
        }


def _item_rng(config: CorruptionConfig, group_id: str, role: str, stmt_id: str) -> random.Random:
    # Seeded per item so corruption is reproducible regardless of worker
    # scheduling or batch boundaries.
    return random.Random(f"{config.seed}|corrupt|{group_id}|{role}|{stmt_id}")


def _corrupt_group(group: TrainingGroup, config: CorruptionConfig) -> list[dict]:
    items = []
    for role, statements in (
        (ROLE_POSITIVE, group.positives),
        (ROLE_EASY_NEGATIVE, group.easy_negatives),
        (ROLE_HARD_NEGATIVE, group.hard_negatives),
    ):
        for stmt in statements:
            marked = mark_statement(stmt)
            rng = _item_rng(config, group.group_id, role, stmt.statement_id)
            corrupted = corrupt_statement(marked, config, rng)
            items.append({
                "group_id": group.group_id,
                "role": role,
                "statement_id": stmt.statement_id,
                "tokens": corrupted.tokens,
                "mlm_targets": {str(k): v for k, v in sorted(corrupted.mlm_targets.items())},
                "blanked": list(corrupted.blanked),
            })
    return items


def write_batches(
    groups: Iterable[TrainingGroup],
    config: CorruptionConfig,
    sink: IO[str],
    batch_size: int = 32,
) -> BatchManifest:
    """Corrupt groups and emit newline-delimited batch records.

    Whole groups are packed greedily into batches of at most ``batch_size``
    statements (a single oversized group still gets its own batch). Returns
    the manifest with counts and the SHA-256 of the bytes written.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    manifest = BatchManifest(alpha=config.alpha, beta=config.beta, seed=config.seed,
                             batch_size=batch_size)
    digest = hashlib.sha256()

    def flush(batch_items: list[dict]):
        record = {"batch_id": manifest.n_batches, "items": batch_items}
        line = json.dumps(record, separators=(",", ":")) + "\n"
        sink.write(line)
        digest.update(line.encode("utf-8"))
        manifest.n_batches += 1

    pending: list[dict] = []
    for group in groups:
        items = _corrupt_group(group, config)
        manifest.n_groups += 1
        manifest.n_statements += len(items)
        if pending and len(pending) + len(items) > batch_size:
            flush(pending)
            pending = []
        pending.extend(items)
        if len(pending) >= batch_size:
            flush(pending)
            pending = []
    if pending:
        flush(pending)
    manifest.sha256 = digest.hexdigest()
    return manifest


def read_batches(stream: Iterable[str]) -> list[dict]:
    batches = []
    for line in stream:
        line = line.strip()
        if line:
            batches.append(json.loads(line))
    return batches
