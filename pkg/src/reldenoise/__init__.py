"""Denoised relation-extraction corpus construction and evaluation.

The pipeline turns date-marked news articles and event descriptions into
grouped, corruption-ready training batches for relation representation
learning, and evaluates embedding files with few-shot nearest-neighbor
episodes. See the `cli` module for the command-line surface.
"""

from .batches import BLANK_TOKEN, MASK_TOKEN, CorruptionConfig, corrupt_statement, decorrupt, write_batches
from .config import PipelineConfig, config_from_dict, load_config
from .errors import (
    ConfigError,
    DegenerateCorpusError,
    DegeneratePairError,
    EmptyGroupError,
    EvalError,
    MalformedStatementError,
    MissingInputError,
    ParseError,
    PipelineError,
    UndefinedScoreError,
    WindowMismatchError,
)
from .fewshot import EmbeddingTable, Episode, cosine_similarity, evaluate_episode, read_embeddings, run_fewshot
from .groups import GroupConfig, StatementIndex, TrainingGroup, assemble_groups
from .ingest import EventRecord, parse_corpus_stream, parse_event_file
from .model import (
    Document,
    EntityMention,
    EntityPair,
    MarkedStatement,
    RelationStatement,
    Sentence,
    canonical_pair,
    extract_document_statements,
    mark_statement,
    normalize_entity_key,
)
from .pairsel import PairFilter, SelectedPair, select_date_window_pairs, select_event_guided_pairs, select_random_pairs
from .stats import DailyStatsIndex, DateWindow, PairStats, accumulate_stats, merge_stats, ppmi

__version__ = "0.1.0"

__all__ = [
    "BLANK_TOKEN",
    "MASK_TOKEN",
    "ConfigError",
    "CorruptionConfig",
    "DailyStatsIndex",
    "DateWindow",
    "DegenerateCorpusError",
    "DegeneratePairError",
    "Document",
    "EmbeddingTable",
    "EmptyGroupError",
    "EntityMention",
    "EntityPair",
    "Episode",
    "EvalError",
    "EventRecord",
    "GroupConfig",
    "MalformedStatementError",
    "MarkedStatement",
    "MissingInputError",
    "PairFilter",
    "PairStats",
    "ParseError",
    "PipelineConfig",
    "PipelineError",
    "RelationStatement",
    "SelectedPair",
    "Sentence",
    "StatementIndex",
    "TrainingGroup",
    "UndefinedScoreError",
    "WindowMismatchError",
    "accumulate_stats",
    "assemble_groups",
    "canonical_pair",
    "config_from_dict",
    "corrupt_statement",
    "cosine_similarity",
    "decorrupt",
    "evaluate_episode",
    "extract_document_statements",
    "load_config",
    "mark_statement",
    "merge_stats",
    "normalize_entity_key",
    "parse_corpus_stream",
    "parse_event_file",
    "ppmi",
    "read_embeddings",
    "run_fewshot",
    "select_date_window_pairs",
    "select_event_guided_pairs",
    "select_random_pairs",
    "write_batches",
]
