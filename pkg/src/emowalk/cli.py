"""Command-line interface: every pipeline stage plus an end-to-end run."""

from __future__ import annotations

import argparse
import os
import re
import sys

import numpy as np
import yaml

from .config import RunConfig, build_run_config, config_digest, read_config_file
from .errors import DataError, InvalidConfig, PipelineError
from .evaluation import (MODELS, Protocol, _params_to_dict, boxplot_to_csv_text,
                         format_cell, format_p, format_percent, load_results_yaml,
                         run_personal_experiment, summarize_study,
                         summary_to_csv_text, users_from_features,
                         write_results_yaml)
from .features import extract_pipeline, features_to_csv_text, read_features_csv
from .ingest import (build_walking_data, match_raw_file, parse_encoding,
                     parse_raw_stream, read_walking_csv, walking_to_csv_text)
from .io_utils import atomic_write_text, ensure_dir
from .learners.dataset import Dataset
from .learners.forest import fit_random_forest
from .learners.serialize import save_model
from .seeding import derive_seed
from .synth import generate_cohort
from .tuning import parse_space_text, random_search

_WALKING_RE = re.compile(r"^walking_(.+)_c(\d+)\.csv$")
_FEATURES_RE = re.compile(r"^features_(.+)_c(\d+)\.csv$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_manifest(out_dir: str, stage: str, cfg: RunConfig, outputs: list[str],
                    extra: dict | None = None) -> None:
    doc = {
        "stage": stage,
        "seed": cfg.seed,
        "config_digest": config_digest(cfg),
        "outputs": sorted(outputs),
    }
    if extra:
        doc.update(extra)
    atomic_write_text(os.path.join(out_dir, "manifest.yaml"),
                      yaml.safe_dump(doc, sort_keys=False))


def stage_walkgen(cfg: RunConfig, encoding: str, raw_dir: str, out_dir: str) -> list[str]:
    ensure_dir(out_dir)
    prefix = cfg.prefix_dict()
    records = parse_encoding(encoding, cfg.delimiter, prefix)
    raw_cache: dict[str, list] = {}
    outputs = []
    for rec in records:
        path = match_raw_file(rec.participant_id, raw_dir)
        if path not in raw_cache:
            raw_cache[path] = parse_raw_stream(path, cfg.delimiter, cfg.strict)
        samples = build_walking_data(raw_cache[path], rec, prefix)
        condition = samples[0].condition if samples else \
            prefix[rec.condition_code.split("-")[0]]
        name = f"walking_{rec.participant_id}_c{condition}.csv"
        atomic_write_text(os.path.join(out_dir, name), walking_to_csv_text(samples))
        outputs.append(name)
    _write_manifest(out_dir, "walkgen", cfg, outputs)
    return outputs


def stage_featex(cfg: RunConfig, walking_dir: str, out_dir: str) -> list[str]:
    ensure_dir(out_dir)
    outputs = []
    names = sorted(n for n in os.listdir(walking_dir) if _WALKING_RE.match(n))
    if not names:
        raise DataError(f"no walking_*.csv files in {walking_dir}")
    for name in names:
        samples = read_walking_csv(os.path.join(walking_dir, name), cfg.delimiter)
        fvs = extract_pipeline(samples, cfg.windowing)
        out_name = "features_" + name[len("walking_"):]
        atomic_write_text(os.path.join(out_dir, out_name), features_to_csv_text(fvs))
        outputs.append(out_name)
    _write_manifest(out_dir, "featex", cfg, outputs)
    return outputs


def _load_feature_users(features_dir: str, delimiter: str):
    groups: dict[tuple[str, int], list] = {}
    names = sorted(n for n in os.listdir(features_dir) if _FEATURES_RE.match(n))
    if not names:
        raise DataError(f"no features_*.csv files in {features_dir}")
    for name in names:
        pid = _FEATURES_RE.match(name).group(1)
        for fv in read_features_csv(os.path.join(features_dir, name), delimiter):
            groups.setdefault((pid, fv.condition), []).append(fv)
    return users_from_features(groups)


def stage_evaluate(cfg: RunConfig, features_dir: str, out_path: str) -> None:
    users = _load_feature_users(features_dir, cfg.delimiter)
    protocol = Protocol(k=cfg.k, n_iter=cfg.n_iter, seed=cfg.seed,
                        space=cfg.space, contiguous_folds=cfg.contiguous_folds)
    tasks = ["binary", "ternary"] if cfg.task == "both" else [cfg.task]
    results = [run_personal_experiment(users, task, protocol, jobs=cfg.jobs)
               for task in tasks]
    write_results_yaml(out_path, results,
                       meta={"config_digest": config_digest(cfg)})


def _summary_text(summary) -> str:
    lines = [f"task: {summary.task}"]
    for condition in summary.conditions:
        lines.append(f"condition {condition} ({summary.n_users[condition]} users)")
        lines.append(f"  {'model':<16} {'AUC':<15} {'F1':<15} {'Accuracy':<15} "
                     f"{'User Lift':<10} P-value")
        for model in MODELS:
            r = summary.rows[(condition, model)]
            lift = "" if r.user_lift is None else f"{r.user_lift:.3f}"
            p = "" if r.p_value is None else format_p(r.p_value)
            lines.append(f"  {model:<16} {format_cell(r.auc_mean, r.auc_std):<15} "
                         f"{format_cell(r.f1_mean, r.f1_std):<15} "
                         f"{format_cell(r.acc_mean, r.acc_std):<15} {lift:<10} {p}")
    for model in MODELS:
        lines.append(f"cross-condition mean accuracy {model}: "
                     f"{format_percent(summary.cross_condition[model].accuracy)}")
    return "\n".join(lines) + "\n"


def stage_report(cfg: RunConfig, results_path: str, out_dir: str) -> list[str]:
    ensure_dir(out_dir)
    _, results = load_results_yaml(results_path)
    outputs = []
    for res in results:
        summary = summarize_study(res.evaluations)
        for name, text in ((f"summary_{res.task}.csv", summary_to_csv_text(summary)),
                           (f"boxplot_{res.task}.csv", boxplot_to_csv_text(res.evaluations)),
                           (f"summary_{res.task}.txt", _summary_text(summary))):
            atomic_write_text(os.path.join(out_dir, name), text)
            outputs.append(name)
    _write_manifest(out_dir, "report", cfg, outputs)
    return outputs


def _overrides_from_args(args: argparse.Namespace) -> dict:
    keys = ("encoding", "raw_dir", "out_dir", "delimiter", "strict", "prefix_map",
            "window_len", "overlap", "frequency_rate", "task", "k", "n_iter",
            "seed", "contiguous_folds", "jobs", "n_users", "conditions",
            "walk_duration_s", "sample_rate_hz", "separability", "space")
    out = {}
    for key in keys:
        if hasattr(args, key) and getattr(args, key) is not None:
            out[key] = getattr(args, key)
    return out


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_map = read_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = _overrides_from_args(args)
    if getattr(args, "space_file", None):
        with open(args.space_file, "r", encoding="utf-8") as fh:
            overrides["space"] = parse_space_text(fh.read())
    if getattr(args, "lenient", False):
        overrides["strict"] = False
    return build_run_config(file_map, overrides)


def _cmd_walkgen(args) -> None:
    cfg = _config_from_args(args)
    if not cfg.encoding or not cfg.raw_dir:
        raise UsageError("walkgen needs --encoding and --raw-dir (or a config file)")
    stage_walkgen(cfg, cfg.encoding, cfg.raw_dir, cfg.out_dir)


def _cmd_featex(args) -> None:
    cfg = _config_from_args(args)
    stage_featex(cfg, args.walking_dir, cfg.out_dir)


def _cmd_evaluate(args) -> None:
    cfg = _config_from_args(args)
    out_path = args.out or os.path.join(cfg.out_dir, "results.yaml")
    ensure_dir(os.path.dirname(out_path) or ".")
    stage_evaluate(cfg, args.features_dir, out_path)


def _cmd_tune(args) -> None:
    cfg = _config_from_args(args)
    fvs = read_features_csv(args.features, cfg.delimiter)
    if not fvs:
        raise DataError(f"{args.features} holds no feature rows")
    task = cfg.task if cfg.task != "both" else "ternary"
    if task == "binary":
        fvs = [fv for fv in fvs if fv.emotion != 0]
    data = Dataset(np.stack([fv.values for fv in fvs]),
                   np.array([fv.emotion for fv in fvs]))
    best, results = random_search(data, cfg.space, cfg.n_iter, cfg.k, cfg.seed,
                                  cfg.contiguous_folds)
    doc = {
        "run": {"seed": cfg.seed, "k": cfg.k, "n_iter": cfg.n_iter, "task": task,
                "config_digest": config_digest(cfg)},
        "best": _params_to_dict(best),
        "results": [{"sample_index": r.sample_index,
                     "params": _params_to_dict(r.params),
                     "fold_scores": list(r.fold_scores),
                     "mean_score": r.mean_score} for r in results],
    }
    out_path = args.out or os.path.join(cfg.out_dir, "tune.yaml")
    ensure_dir(os.path.dirname(out_path) or ".")
    atomic_write_text(out_path, yaml.safe_dump(doc, sort_keys=False))
    if args.save_model:
        model = fit_random_forest(data, best, derive_seed(cfg.seed, "final-fit"))
        save_model(model, args.save_model)


def _cmd_synth(args) -> None:
    cfg = _config_from_args(args)
    paths = generate_cohort(cfg.synth, cfg.out_dir)
    outputs = [os.path.basename(paths.encoding_path)]
    outputs += [os.path.join("raw", os.path.basename(p))
                for p in paths.raw_paths.values()]
    _write_manifest(cfg.out_dir, "synth", cfg, outputs)


def _cmd_report(args) -> None:
    cfg = _config_from_args(args)
    stage_report(cfg, args.results, cfg.out_dir)


def _cmd_run_all(args) -> None:
    cfg = _config_from_args(args)
    if not cfg.encoding or not cfg.raw_dir:
        raise UsageError("run-all needs --encoding and --raw-dir (or a config file)")
    out = ensure_dir(cfg.out_dir)
    walking_dir = os.path.join(out, "walking")
    features_dir = os.path.join(out, "features")
    results_path = os.path.join(out, "results.yaml")
    report_dir = os.path.join(out, "report")
    stage_walkgen(cfg, cfg.encoding, cfg.raw_dir, walking_dir)
    stage_featex(cfg, walking_dir, features_dir)
    stage_evaluate(cfg, features_dir, results_path)
    stage_report(cfg, results_path, report_dir)


def build_parser() -> _Parser:
    parser = _Parser(prog="emowalk",
                     description="Emotion classification from wearable walking data.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p: _Parser, *, seed=True) -> None:
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")
        p.add_argument("--delimiter", help="field delimiter (default ,)")
        if seed:
            p.add_argument("--seed", type=int, help="run seed")

    p = sub.add_parser("walkgen", help="slice raw streams into labeled walking CSVs")
    common(p)
    p.add_argument("--encoding", help="encoding CSV path")
    p.add_argument("--raw-dir", dest="raw_dir", help="directory of raw per-user CSVs")
    p.add_argument("--lenient", action="store_true",
                   help="skip malformed raw rows instead of aborting")
    p.add_argument("--prefix-map", dest="prefix_map",
                   help="condition prefixes, e.g. Mo:0,Mu:1,Mw:2")
    p.set_defaults(func=_cmd_walkgen)

    p = sub.add_parser("featex", help="windowed 107-feature extraction")
    common(p)
    p.add_argument("--walking-dir", dest="walking_dir", required=True)
    p.add_argument("--window-len", dest="window_len", type=int)
    p.add_argument("--overlap", type=float)
    p.add_argument("--rate", dest="frequency_rate", type=float)
    p.set_defaults(func=_cmd_featex)

    p = sub.add_parser("evaluate", help="per-user experiment over feature CSVs")
    common(p)
    p.add_argument("--features-dir", dest="features_dir", required=True)
    p.add_argument("--task", choices=["binary", "ternary", "both"])
    p.add_argument("--k", type=int)
    p.add_argument("--n-iter", dest="n_iter", type=int)
    p.add_argument("--space-file", dest="space_file", help="search-space file")
    p.add_argument("--contiguous-folds", dest="contiguous_folds",
                   action="store_const", const=True)
    p.add_argument("--jobs", type=int, help="parallel workers")
    p.add_argument("--out", help="results YAML path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("tune", help="randomized search audit on one feature CSV")
    common(p)
    p.add_argument("--features", required=True, help="feature CSV path")
    p.add_argument("--task", choices=["binary", "ternary"])
    p.add_argument("--k", type=int)
    p.add_argument("--n-iter", dest="n_iter", type=int)
    p.add_argument("--space-file", dest="space_file")
    p.add_argument("--out", help="audit YAML path")
    p.add_argument("--save-model", dest="save_model",
                   help="serialize the best forest, refit on all rows")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    common(p)
    p.add_argument("--users", dest="n_users", type=int)
    p.add_argument("--conditions", help="comma list from 0,1,2")
    p.add_argument("--duration", dest="walk_duration_s", type=float)
    p.add_argument("--rate", dest="sample_rate_hz", type=float)
    p.add_argument("--separability", type=float)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("report", help="summary and boxplot CSVs from results YAML")
    common(p, seed=False)
    p.add_argument("--results", required=True, help="results YAML path")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("run-all", help="walkgen, featex, evaluate, report")
    common(p)
    p.add_argument("--encoding", help="encoding CSV path")
    p.add_argument("--raw-dir", dest="raw_dir")
    p.add_argument("--task", choices=["binary", "ternary", "both"])
    p.add_argument("--k", type=int)
    p.add_argument("--n-iter", dest="n_iter", type=int)
    p.add_argument("--window-len", dest="window_len", type=int)
    p.add_argument("--overlap", type=float)
    p.add_argument("--rate", dest="frequency_rate", type=float)
    p.add_argument("--space-file", dest="space_file")
    p.add_argument("--contiguous-folds", dest="contiguous_folds",
                   action="store_const", const=True)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=_cmd_run_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        args.func(args)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, PipelineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
