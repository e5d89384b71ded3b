import pytest

from emowalk.config import build_run_config, config_digest, read_config_file
from emowalk.errors import InvalidConfig
from emowalk.tuning import SearchSpace

FILE_MAP = {
    "paths": {"encoding": "enc.csv", "raw_dir": "raw", "out_dir": "results"},
    "ingest": {"delimiter": ";", "strict": "false",
               "prefix_map": "Mo:0,Lab:2"},
    "windowing": {"window_len": "32", "overlap": "0.25"},
    "protocol": {"task": "binary", "k": "4", "n_iter": "9", "seed": "13",
                 "contiguous_folds": "true"},
    "space": {"n_trees": "10:20", "max_depth": "none,4"},
    "synth": {"n_users": "4", "separability": "0.5"},
    "run": {"jobs": "2"},
}


class TestBuildRunConfig:
    def test_defaults(self):
        cfg = build_run_config()
        assert cfg.out_dir == "out"
        assert cfg.task == "ternary"
        assert cfg.k == 5 and cfg.n_iter == 50 and cfg.seed == 0
        assert cfg.windowing.window_len == 64
        assert cfg.windowing.overlap == 0.5
        assert cfg.space == SearchSpace()
        assert cfg.strict is True
        assert cfg.jobs == 1
        assert cfg.synth.seed == cfg.seed

    def test_file_values_applied(self):
        cfg = build_run_config(FILE_MAP)
        assert cfg.encoding == "enc.csv"
        assert cfg.delimiter == ";"
        assert cfg.strict is False
        assert cfg.prefix_dict() == {"Mo": 0, "Lab": 2}
        assert cfg.windowing.window_len == 32
        assert cfg.task == "binary"
        assert cfg.k == 4 and cfg.n_iter == 9 and cfg.seed == 13
        assert cfg.contiguous_folds is True
        assert cfg.space.n_trees == (10, 20)
        assert cfg.space.max_depth == (None, 4)
        assert cfg.synth.n_users == 4
        assert cfg.synth.separability == 0.5
        assert cfg.synth.seed == 13  # follows protocol seed unless overridden
        assert cfg.jobs == 2

    def test_overrides_beat_file(self):
        cfg = build_run_config(FILE_MAP, {"k": 7, "task": "both",
                                          "window_len": "16",
                                          "synth_seed": 99})
        assert cfg.k == 7
        assert cfg.task == "both"
        assert cfg.windowing.window_len == 16
        assert cfg.synth.seed == 99

    def test_none_overrides_ignored(self):
        cfg = build_run_config(FILE_MAP, {"k": None, "seed": None})
        assert cfg.k == 4 and cfg.seed == 13

    def test_unknown_section_rejected(self):
        with pytest.raises(InvalidConfig, match="sections"):
            build_run_config({"model": {"x": "1"}})

    @pytest.mark.parametrize("overrides", [
        {"k": 1},
        {"n_iter": 0},
        {"jobs": 0},
        {"task": "fourway"},
        {"delimiter": ";;"},
        {"window_len": "not-a-number"},
        {"strict": "perhaps"},
    ])
    def test_bad_values_rejected(self, overrides):
        with pytest.raises(InvalidConfig):
            build_run_config(FILE_MAP, overrides)


class TestReadConfigFile:
    def test_round_trip_through_parser(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(
            "[paths]\nencoding = enc.csv\n\n"
            "[protocol]\nk = 3\nseed = 5\n")
        file_map = read_config_file(str(path))
        cfg = build_run_config(file_map)
        assert cfg.encoding == "enc.csv"
        assert cfg.k == 3 and cfg.seed == 5

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(InvalidConfig):
            read_config_file(str(tmp_path / "absent.ini"))


class TestConfigDigest:
    def test_stable_and_hex(self):
        a = config_digest(build_run_config(FILE_MAP))
        b = config_digest(build_run_config(FILE_MAP))
        assert a == b
        assert len(a) == 16
        int(a, 16)

    def test_ignores_paths_and_jobs(self):
        base = build_run_config(FILE_MAP)
        moved = build_run_config(FILE_MAP, {
            "encoding": "elsewhere.csv", "raw_dir": "other", "out_dir": "x",
            "jobs": 8})
        assert config_digest(base) == config_digest(moved)

    def test_sensitive_to_protocol(self):
        base = build_run_config(FILE_MAP)
        for change in ({"seed": 14}, {"k": 5}, {"window_len": "64"},
                       {"task": "ternary"}, {"separability": "1.0"}):
            assert config_digest(build_run_config(FILE_MAP, change)) != \
                config_digest(base), change
