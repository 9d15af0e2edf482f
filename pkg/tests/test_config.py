import os
from unittest import mock

import pytest

from heisencalc.config import CACHE_ENV, RunConfig, coerce, config_hash, load_config, parse_config_text
from heisencalc.errors import ConfigError


class TestCoerce:
    @pytest.mark.parametrize(
        "key, raw, expected",
        [
            ("m_max", "64", 64),
            ("tol", "1e-6", 1e-6),
            ("quick", "yes", True),
            ("quick", "off", False),
            ("seed", "none", None),
            ("seed", "7", 7),
            ("suites", " plancherel ", "plancherel"),
            ("threads", 4, 4),
        ],
    )
    def test_coerce(self, key, raw, expected):
        assert coerce(key, raw) == expected

    @pytest.mark.parametrize("key, raw", [("m_max", "many"), ("quick", "maybe"), ("colour", "1")])
    def test_bad_values(self, key, raw):
        with pytest.raises(ConfigError):
            coerce(key, raw)


class TestConfigFile:
    def test_parse_with_comments(self):
        text = "# run\nm_max = 32  # fewer modes\n\nquick = true\n"
        assert parse_config_text(text) == {"m_max": 32, "quick": True}

    def test_line_without_value(self):
        with pytest.raises(ConfigError):
            parse_config_text("m_max 32\n")

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("m_max = 32\ntol = 1e-3\n")
        with mock.patch.dict(os.environ, {}, clear=True):
            config = load_config(path, {"tol": 1e-6, "seed": None})
        assert config.m_max == 32
        assert config.tol == 1e-6
        assert config.seed is None
        assert config.d == 1

    def test_environment_sets_the_cache(self, tmp_path):
        with mock.patch.dict(os.environ, {CACHE_ENV: str(tmp_path)}):
            config = load_config(None, {"cache_dir": "elsewhere"})
        assert config.cache_dir == str(tmp_path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")


class TestValidation:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"d": 0},
            {"m_max": 5000},
            {"lambda_min": 1.0, "lambda_max": 3.0},
            {"panel_order": 0},
            {"n_x": 2},
            {"n_x": 64, "n_y": 64, "n_s": 65},
            {"l_s": 0.0},
            {"j_min": 3, "j_max": 1},
            {"tol": 0.0},
            {"threads": 0},
        ],
    )
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            RunConfig(**overrides).validated()

    def test_defaults_are_valid(self):
        assert RunConfig().validated() == RunConfig()
        assert list(RunConfig(j_min=-1, j_max=1).j_range) == [-1, 0, 1]


class TestHash:
    def test_render_is_sorted(self):
        lines = RunConfig().render().splitlines()
        assert lines == sorted(lines)
        assert "seed = none" in lines

    def test_hash_follows_the_values(self):
        assert len(config_hash(RunConfig())) == 12
        assert config_hash(RunConfig()) == config_hash(RunConfig())
        assert config_hash(RunConfig()) != config_hash(RunConfig(m_max=32))
