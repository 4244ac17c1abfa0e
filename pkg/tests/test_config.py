"""Tests for configuration loading, validation, overrides, and hashing."""

import pytest

from reldenoise.config import (
    PipelineConfig,
    apply_override,
    config_from_dict,
    config_sha256,
    config_to_dict,
    load_config,
    parse_override,
    validate_config,
)
from reldenoise.errors import ConfigError


class TestDefaults:
    def test_reference_hyperparameters(self):
        cfg = config_from_dict({})
        assert cfg.corruption.alpha == 0.7
        assert cfg.corruption.beta == 0.15
        assert cfg.windows.noun_days == 4
        assert cfg.windows.ne_days == 7
        assert cfg.filter.min_count == 3
        assert cfg.filter.min_ppmi == 1.0
        assert cfg.groups.n_pos == 6
        assert cfg.groups.n_easy == 3
        assert cfg.groups.n_hard == 3
        assert cfg.strategy == "EVENT"
        assert cfg.batch_size == 32
        assert cfg.seed == 0
        assert cfg.workers == 1


class TestBuild:
    def test_nested_assignment(self):
        cfg = config_from_dict({
            "paths": {"corpus": "c.jsonl", "events": "e.jsonl", "output_dir": "o"},
            "filter": {"min_count": 5, "combine": "or"},
            "corruption": {"alpha": 0.5},
            "seed": "run-1",
        })
        assert cfg.paths.corpus == "c.jsonl"
        assert cfg.filter.min_count == 5
        assert cfg.filter.combine == "or"
        assert cfg.corruption.alpha == 0.5
        assert cfg.corruption.beta == 0.15  # untouched default
        assert cfg.seed == "run-1"

    def test_unknown_key_reports_dotted_path(self):
        with pytest.raises(ConfigError, match=r"filter\.min_countt"):
            config_from_dict({"filter": {"min_countt": 3}})
        with pytest.raises(ConfigError, match="nonsense"):
            config_from_dict({"nonsense": 1})

    def test_type_errors(self):
        with pytest.raises(ConfigError, match="batch_size"):
            config_from_dict({"batch_size": "large"})
        with pytest.raises(ConfigError, match=r"corruption\.alpha"):
            config_from_dict({"corruption": {"alpha": "high"}})
        with pytest.raises(ConfigError, match="dedupe"):
            config_from_dict({"dedupe": 1})
        # bool must not satisfy an int field
        with pytest.raises(ConfigError, match="batch_size"):
            config_from_dict({"batch_size": True})

    def test_nullable_fields(self):
        cfg = config_from_dict({"budget": None, "eval": {"num_queries": None}})
        assert cfg.budget is None
        assert cfg.eval.num_queries is None
        cfg = config_from_dict({"budget": 10, "eval": {"num_queries": 50}})
        assert cfg.budget == 10
        assert cfg.eval.num_queries == 50

    def test_int_accepted_for_float_field(self):
        cfg = config_from_dict({"filter": {"min_ppmi": 2}})
        assert cfg.filter.min_ppmi == 2.0
        assert isinstance(cfg.filter.min_ppmi, float)

    def test_non_mapping_section_rejected(self):
        with pytest.raises(ConfigError, match="filter"):
            config_from_dict({"filter": [1, 2]})


class TestValidation:
    def test_window_bounds(self):
        with pytest.raises(ConfigError, match=r"windows\.noun_days"):
            config_from_dict({"windows": {"noun_days": 8}})
        with pytest.raises(ConfigError, match=r"windows\.ne_days"):
            config_from_dict({"windows": {"ne_days": -1}})

    def test_probability_bounds(self):
        with pytest.raises(ConfigError, match=r"corruption\.alpha"):
            config_from_dict({"corruption": {"alpha": 1.5}})
        with pytest.raises(ConfigError, match=r"corruption\.beta"):
            config_from_dict({"corruption": {"beta": -0.1}})

    def test_strategy_whitelist(self):
        for strategy in ("RANDOM", "DATE_WINDOW", "EVENT"):
            assert config_from_dict({"strategy": strategy}).strategy == strategy
        with pytest.raises(ConfigError, match="strategy"):
            config_from_dict({"strategy": "ORACLE"})

    def test_min_positives_vs_n_pos(self):
        with pytest.raises(ConfigError, match=r"groups\.min_positives"):
            config_from_dict({"groups": {"n_pos": 2, "min_positives": 3}})
        config_from_dict({"groups": {"n_pos": 2, "min_positives": 2}})

    def test_counts_and_workers(self):
        with pytest.raises(ConfigError, match="batch_size"):
            config_from_dict({"batch_size": 0})
        with pytest.raises(ConfigError, match="workers"):
            config_from_dict({"workers": 0})
        with pytest.raises(ConfigError, match=r"eval\.n_way"):
            config_from_dict({"eval": {"n_way": 1}})


class TestOverrides:
    def test_parse_typed_values(self):
        assert parse_override("filter.min_count=5") == (["filter", "min_count"], 5)
        assert parse_override("corruption.alpha=0.4") == (["corruption", "alpha"], 0.4)
        assert parse_override("dedupe=true") == (["dedupe"], True)
        assert parse_override("budget=null") == (["budget"], None)
        assert parse_override("paths.corpus=a.jsonl") == (["paths", "corpus"], "a.jsonl")
        assert parse_override("seed=run") == (["seed"], "run")

    def test_parse_rejects_malformed(self):
        with pytest.raises(ConfigError):
            parse_override("no-equals-sign")
        with pytest.raises(ConfigError):
            parse_override("=value")

    def test_apply_creates_sections(self):
        data = {}
        apply_override(data, ["filter", "min_count"], 7)
        assert data == {"filter": {"min_count": 7}}
        apply_override(data, ["filter", "min_ppmi"], 0.5)
        assert data["filter"] == {"min_count": 7, "min_ppmi": 0.5}

    def test_apply_rejects_scalar_in_path(self):
        data = {"filter": 3}
        with pytest.raises(ConfigError):
            apply_override(data, ["filter", "min_count"], 7)


class TestLoadConfig:
    def test_file_plus_overrides(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("filter:\n  min_count: 4\nbatch_size: 16\n")
        cfg = load_config(path, overrides=("filter.min_count=9", "workers=3"))
        assert cfg.filter.min_count == 9
        assert cfg.batch_size == 16
        assert cfg.workers == 3

    def test_defaults_without_file(self):
        assert load_config(None) == validate_config(PipelineConfig())

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("filter: [unclosed\n")
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_config(path)

    def test_non_mapping_file(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("- a\n- b\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("")
        assert load_config(path) == validate_config(PipelineConfig())


class TestHash:
    def test_round_trip_dict(self):
        cfg = config_from_dict({"filter": {"min_count": 4}, "seed": 9})
        data = config_to_dict(cfg)
        assert data["filter"]["min_count"] == 4
        assert config_from_dict(data) == cfg

    def test_hash_ignores_workers_and_paths(self):
        base = config_from_dict({})
        moved = config_from_dict({
            "workers": 8,
            "paths": {"corpus": "elsewhere.jsonl", "output_dir": "elsewhere"},
        })
        assert config_sha256(base) == config_sha256(moved)

    def test_hash_tracks_semantic_changes(self):
        base = config_from_dict({})
        assert config_sha256(base) != config_sha256(config_from_dict({"seed": 1}))
        assert config_sha256(base) != config_sha256(
            config_from_dict({"corruption": {"alpha": 0.6}}))
        assert config_sha256(base) == config_sha256(config_from_dict({}))
