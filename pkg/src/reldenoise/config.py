"""Pipeline configuration: YAML file, strict schema, dotted-path overrides.

The key paths in the file mirror the dataclass fields below. Unknown keys
are rejected with their full dotted path. Defaults encode the reference
hyperparameters (alpha=0.7, beta=0.15, noun window 4 days, named-entity
window 7 days, 6 positives and 6 negatives) so an override-free run uses
the standard configuration.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, get_args, get_origin

import yaml

from .errors import ConfigError
from .groups import MODE_DATE_WINDOW, MODE_RANDOM
from .pairsel import FILTER_AND, FILTER_OR, PROVENANCE_DATE_WINDOW, PROVENANCE_EVENT, PROVENANCE_RANDOM

STRATEGIES = (PROVENANCE_RANDOM, PROVENANCE_DATE_WINDOW, PROVENANCE_EVENT)
SENTENCE_MODES = (MODE_RANDOM, MODE_DATE_WINDOW)


@dataclass(slots=True)
class PathsConfig:
    corpus: str = ""
    events: str = ""
    output_dir: str = "out"


@dataclass(slots=True)
class WindowsConfig:
    noun_days: int = 4
    ne_days: int = 7
    date_window_days: int = 4


@dataclass(slots=True)
class FilterSection:
    min_count: int = 3
    min_ppmi: float = 1.0
    combine: str = FILTER_AND
    smoothing_exponent: float = 1.0


@dataclass(slots=True)
class GroupsSection:
    n_pos: int = 6
    n_easy: int = 3
    n_hard: int = 3
    sentence_mode: str = MODE_DATE_WINDOW
    min_positives: int = 2


@dataclass(slots=True)
class CorruptionSection:
    alpha: float = 0.7
    beta: float = 0.15


@dataclass(slots=True)
class EvalSection:
    n_way: int = 5
    k_shot: int = 1
    trials: int = 10
    num_queries: int | None = None
    embeddings: str = ""


@dataclass(slots=True)
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    strategy: str = PROVENANCE_EVENT
    windows: WindowsConfig = field(default_factory=WindowsConfig)
    filter: FilterSection = field(default_factory=FilterSection)
    groups: GroupsSection = field(default_factory=GroupsSection)
    corruption: CorruptionSection = field(default_factory=CorruptionSection)
    eval: EvalSection = field(default_factory=EvalSection)
    batch_size: int = 32
    budget: int | None = None
    dedupe: bool = False
    seed: int | str = 0
    workers: int = 1


def _is_optional_int(tp) -> bool:
    return get_origin(tp) is not None and type(None) in get_args(tp)


def _coerce_scalar(path: str, value: Any, tp) -> Any:
    if tp is int or tp == "int":
        # bool is an int subclass; reject it explicitly.
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return value
    if tp is float or tp == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        return float(value)
    if tp is str or tp == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    if tp is bool or tp == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected boolean, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported value {value!r}")


def _build(cls, data: Any, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected mapping, got {data!r}")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            path = f"{prefix}.{key}" if prefix else str(key)
            raise ConfigError(f"{path}: unknown key")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        value = data[name]
        path = f"{prefix}.{name}" if prefix else name
        tp = f.type
        if isinstance(tp, str):
            tp = _TYPE_NAMES.get(tp, tp)
        if dataclasses.is_dataclass(tp):
            kwargs[name] = _build(tp, value, path)
        elif name == "seed":
            if isinstance(value, bool) or not isinstance(value, (int, str)):
                raise ConfigError(f"{path}: expected integer or string, got {value!r}")
            kwargs[name] = value
        elif name in ("budget", "num_queries"):
            if value is None:
                kwargs[name] = None
            else:
                kwargs[name] = _coerce_scalar(path, value, int)
        else:
            kwargs[name] = _coerce_scalar(path, value, tp)
    return cls(**kwargs)


# Field annotations are stored as strings (PEP 563 style under slots);
# resolve the ones _build needs.
_TYPE_NAMES: dict[str, Any] = {
    "int": int, "float": float, "str": str, "bool": bool,
    "PathsConfig": PathsConfig, "WindowsConfig": WindowsConfig,
    "FilterSection": FilterSection, "GroupsSection": GroupsSection,
    "CorruptionSection": CorruptionSection, "EvalSection": EvalSection,
    "int | None": int, "int | str": int,
}


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def validate_config(cfg: PipelineConfig) -> PipelineConfig:
    _require(cfg.strategy in STRATEGIES, "strategy",
             f"must be one of {sorted(STRATEGIES)}, got {cfg.strategy!r}")
    _require(0 <= cfg.windows.noun_days <= 7, "windows.noun_days",
             f"must be in 0..7, got {cfg.windows.noun_days}")
    _require(0 <= cfg.windows.ne_days <= 7, "windows.ne_days",
             f"must be in 0..7, got {cfg.windows.ne_days}")
    _require(0 <= cfg.windows.date_window_days <= 7, "windows.date_window_days",
             f"must be in 0..7, got {cfg.windows.date_window_days}")
    _require(cfg.filter.min_count >= 0, "filter.min_count",
             f"must be >= 0, got {cfg.filter.min_count}")
    _require(cfg.filter.min_ppmi >= 0, "filter.min_ppmi",
             f"must be >= 0, got {cfg.filter.min_ppmi}")
    _require(cfg.filter.combine in (FILTER_AND, FILTER_OR), "filter.combine",
             f"must be 'and' or 'or', got {cfg.filter.combine!r}")
    _require(cfg.filter.smoothing_exponent > 0, "filter.smoothing_exponent",
             f"must be > 0, got {cfg.filter.smoothing_exponent}")
    _require(cfg.groups.n_pos >= 1, "groups.n_pos",
             f"must be >= 1, got {cfg.groups.n_pos}")
    _require(cfg.groups.n_easy >= 0, "groups.n_easy",
             f"must be >= 0, got {cfg.groups.n_easy}")
    _require(cfg.groups.n_hard >= 0, "groups.n_hard",
             f"must be >= 0, got {cfg.groups.n_hard}")
    _require(1 <= cfg.groups.min_positives <= cfg.groups.n_pos, "groups.min_positives",
             f"must be in 1..n_pos, got {cfg.groups.min_positives}")
    _require(cfg.groups.sentence_mode in SENTENCE_MODES, "groups.sentence_mode",
             f"must be one of {sorted(SENTENCE_MODES)}, got {cfg.groups.sentence_mode!r}")
    _require(0.0 <= cfg.corruption.alpha <= 1.0, "corruption.alpha",
             f"must be in [0, 1], got {cfg.corruption.alpha}")
    _require(0.0 <= cfg.corruption.beta <= 1.0, "corruption.beta",
             f"must be in [0, 1], got {cfg.corruption.beta}")
    _require(cfg.eval.n_way >= 2, "eval.n_way",
             f"must be >= 2, got {cfg.eval.n_way}")
    _require(cfg.eval.k_shot >= 1, "eval.k_shot",
             f"must be >= 1, got {cfg.eval.k_shot}")
    _require(cfg.eval.trials >= 1, "eval.trials",
             f"must be >= 1, got {cfg.eval.trials}")
    _require(cfg.eval.num_queries is None or cfg.eval.num_queries >= 1,
             "eval.num_queries", f"must be >= 1, got {cfg.eval.num_queries}")
    _require(cfg.batch_size >= 1, "batch_size",
             f"must be >= 1, got {cfg.batch_size}")
    _require(cfg.budget is None or cfg.budget >= 0, "budget",
             f"must be >= 0, got {cfg.budget}")
    _require(cfg.workers >= 1, "workers",
             f"must be >= 1, got {cfg.workers}")
    return cfg


def config_from_dict(data: dict) -> PipelineConfig:
    return validate_config(_build(PipelineConfig, data, ""))


def config_to_dict(cfg: PipelineConfig) -> dict:
    def unpack(obj):
        if dataclasses.is_dataclass(obj):
            return {f.name: unpack(getattr(obj, f.name)) for f in fields(obj)}
        return obj
    return unpack(cfg)


def config_sha256(cfg: PipelineConfig) -> str:
    """Hash of the semantic configuration: the transformation knobs only.

    Input and output locations are excluded (manifests hash input content
    separately) and so is the worker count, which steers execution but
    never output.
    """
    data = config_to_dict(cfg)
    data.pop("workers", None)
    data.pop("paths", None)
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_override(spec: str) -> tuple[list[str], Any]:
    """Split a ``key.path=value`` override; the value is parsed as YAML so
    `3`, `0.5`, `true`, `null`, and quoted strings all come out typed."""
    key, sep, raw = spec.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {spec!r}: expected key.path=value")
    try:
        value = yaml.safe_load(raw) if raw.strip() else ""
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {spec!r}: unparseable value: {exc}") from exc
    return key.strip().split("."), value


def apply_override(data: dict, path: list[str], value: Any):
    node = data
    for part in path[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"{'.'.join(path)}: {part} is not a section")
        node = nxt
    node[path[-1]] = value


def load_config(path: str | Path | None = None,
                overrides: tuple[str, ...] = ()) -> PipelineConfig:
    """Load the YAML config file (defaults if ``path`` is None) and apply
    ``--set`` style overrides on top."""
    data: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: invalid YAML in {path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config: {path} must hold a mapping at top level")
        data = loaded
    for spec in overrides:
        key_path, value = parse_override(spec)
        apply_override(data, key_path, value)
    return config_from_dict(data)
