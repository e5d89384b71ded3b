"""Run configuration: INI file + flag overrides, with a stable digest."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields

from .errors import InvalidConfig
from .features import WindowingConfig
from .ingest import DEFAULT_PREFIX_MAP
from .synth import SynthSpec
from .tuning import SearchSpace, parse_space_mapping


@dataclass(frozen=True)
class RunConfig:
    encoding: str = ""
    raw_dir: str = ""
    out_dir: str = "out"
    delimiter: str = ","
    strict: bool = True
    prefix_map: tuple[tuple[str, int], ...] = tuple(sorted(DEFAULT_PREFIX_MAP.items()))
    windowing: WindowingConfig = field(default_factory=WindowingConfig)
    task: str = "ternary"
    k: int = 5
    n_iter: int = 50
    seed: int = 0
    contiguous_folds: bool = False
    space: SearchSpace = field(default_factory=SearchSpace)
    synth: SynthSpec = field(default_factory=SynthSpec)
    jobs: int = 1

    def prefix_dict(self) -> dict[str, int]:
        return dict(self.prefix_map)


def _parse_bool(value: str, key: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InvalidConfig(f"{key} must be a boolean, got {value!r}")


def _parse_prefix_map(value: str) -> tuple[tuple[str, int], ...]:
    pairs = []
    for tok in value.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" not in tok:
            raise InvalidConfig(f"prefix_map entry {tok!r} is not 'prefix:condition'")
        prefix, _, cond = tok.partition(":")
        try:
            pairs.append((prefix.strip(), int(cond)))
        except ValueError:
            raise InvalidConfig(f"prefix_map condition {cond!r} is not an integer") from None
    if not pairs:
        raise InvalidConfig("prefix_map is empty")
    return tuple(sorted(pairs))


def _parse_conditions(value: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in value.split(",") if tok.strip())
    except ValueError:
        raise InvalidConfig(f"conditions {value!r} must be comma-separated integers") from None


def read_config_file(path: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise InvalidConfig(f"config file {path!r} not found or unreadable")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def build_run_config(file_map: dict[str, dict[str, str]] | None = None,
                     overrides: dict[str, object] | None = None) -> RunConfig:
    """Defaults <- config file sections <- non-None CLI overrides."""
    file_map = file_map or {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    paths = file_map.get("paths", {})
    ing = file_map.get("ingest", {})
    win = file_map.get("windowing", {})
    proto = file_map.get("protocol", {})
    space_map = file_map.get("space", {})
    synth_map = file_map.get("synth", {})
    run = file_map.get("run", {})

    known = {"paths", "ingest", "windowing", "protocol", "space", "synth", "run"}
    unknown = set(file_map) - known
    if unknown:
        raise InvalidConfig(f"unknown config sections {sorted(unknown)}")

    def pick(section: dict[str, str], key: str, default, conv):
        if key in overrides:
            val = overrides[key]
            return conv(val) if isinstance(val, str) else val
        if key in section:
            return conv(section[key])
        return default

    try:
        windowing = WindowingConfig(
            window_len=pick(win, "window_len", 64, int),
            overlap=pick(win, "overlap", 0.5, float),
            frequency_rate=pick(win, "frequency_rate", 32.0, float))
        space = parse_space_mapping(space_map) if space_map else SearchSpace()
        if "space" in overrides:
            space = overrides["space"]
        seed = pick(proto, "seed", 0, int)
        synth = SynthSpec(
            n_users=pick(synth_map, "n_users", 10, int),
            conditions=pick(synth_map, "conditions", (0,), _parse_conditions),
            walk_duration_s=pick(synth_map, "walk_duration_s", 30.0, float),
            sample_rate_hz=pick(synth_map, "sample_rate_hz", 32.0, float),
            separability=pick(synth_map, "separability", 1.0, float),
            seed=pick(synth_map, "synth_seed", seed, int))
        task = pick(proto, "task", "ternary", str)
        if task not in ("binary", "ternary", "both"):
            raise InvalidConfig(f"task must be binary, ternary or both, got {task!r}")
        cfg = RunConfig(
            encoding=pick(paths, "encoding", "", str),
            raw_dir=pick(paths, "raw_dir", "", str),
            out_dir=pick(paths, "out_dir", "out", str),
            delimiter=pick(ing, "delimiter", ",", str),
            strict=pick(ing, "strict", True, lambda v: _parse_bool(v, "strict")),
            prefix_map=pick(ing, "prefix_map",
                            tuple(sorted(DEFAULT_PREFIX_MAP.items())), _parse_prefix_map),
            windowing=windowing,
            task=task,
            k=pick(proto, "k", 5, int),
            n_iter=pick(proto, "n_iter", 50, int),
            seed=seed,
            contiguous_folds=pick(proto, "contiguous_folds", False,
                                  lambda v: _parse_bool(v, "contiguous_folds")),
            space=space,
            synth=synth,
            jobs=pick(run, "jobs", 1, int))
    except ValueError as exc:
        raise InvalidConfig(f"bad config value: {exc}") from None
    if cfg.k < 2:
        raise InvalidConfig(f"k must be >= 2, got {cfg.k}")
    if cfg.n_iter < 1:
        raise InvalidConfig(f"n_iter must be >= 1, got {cfg.n_iter}")
    if cfg.jobs < 1:
        raise InvalidConfig(f"jobs must be >= 1, got {cfg.jobs}")
    if len(cfg.delimiter) != 1:
        raise InvalidConfig(f"delimiter must be one character, got {cfg.delimiter!r}")
    return cfg


def config_digest(cfg: RunConfig) -> str:
    """Stable short hash of every effective setting (paths excluded)."""
    parts = []
    skip = {"encoding", "raw_dir", "out_dir", "jobs"}
    for f in sorted(fields(cfg), key=lambda f: f.name):
        if f.name in skip:
            continue
        parts.append(f"{f.name}={getattr(cfg, f.name)!r}")
    blob = "\n".join(parts).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
