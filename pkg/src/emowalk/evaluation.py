"""Per-user experiment runner and Table-style study summaries."""

from __future__ import annotations

import concurrent.futures
import io
import os
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .errors import (DataError, InvalidConfig, SingleClassDataset, TooFewPerClass,
                     TooFewUsers)
from .features import CATALOG_VERSION, FeatureVector
from .io_utils import atomic_write_text
from .learners.baseline import fit_most_frequent, predict_most_frequent
from .learners.dataset import Dataset
from .learners.forest import DEFAULT_FOREST, HyperParams, fit_random_forest, predict_random_forest
from .learners.logistic import fit_logistic, predict_logistic
from .metrics import (TASK_CLASSES, TASKS, accuracy, paired_significance, roc_auc,
                      user_lift, weighted_f1)
from .seeding import derive_seed
from .tuning import DEFAULT_SPACE, SearchSpace, random_search, stratified_kfold

MODELS = ("baseline", "logistic", "forest_default", "forest_tuned")
METRIC_NAMES = ("auc", "f1_weighted", "accuracy")


@dataclass(frozen=True)
class MetricSet:
    auc: float
    f1_weighted: float
    accuracy: float


@dataclass(frozen=True)
class Protocol:
    k: int = 5
    n_iter: int = 50
    seed: int = 0
    space: SearchSpace = field(default_factory=SearchSpace)
    contiguous_folds: bool = False


@dataclass
class UserData:
    participant_id: str
    condition: int
    X: np.ndarray
    y: np.ndarray


@dataclass
class UserEvaluation:
    participant_id: str
    condition: int
    task: str
    metrics: dict[str, MetricSet]
    fold_scores: dict[str, dict[str, tuple[float, ...]]]
    tuned_params: tuple[HyperParams, ...]


@dataclass(frozen=True)
class SkipRecord:
    participant_id: str
    condition: int
    task: str
    reason: str


@dataclass
class ExperimentResult:
    task: str
    protocol: Protocol
    evaluations: list[UserEvaluation]
    skipped: list[SkipRecord]


def users_from_features(groups: dict[tuple[str, int], list[FeatureVector]]) -> list[UserData]:
    """Stack per-(participant, condition) feature vectors into UserData."""
    users = []
    for (pid, condition), fvs in sorted(groups.items()):
        X = np.stack([fv.values for fv in fvs])
        y = np.array([fv.emotion for fv in fvs], dtype=np.int64)
        users.append(UserData(participant_id=pid, condition=condition, X=X, y=y))
    return users


def _task_subset(ud: UserData, task: str) -> tuple[np.ndarray, np.ndarray]:
    if task == "binary":
        mask = ud.y != 0
        return ud.X[mask], ud.y[mask]
    return ud.X, ud.y


def evaluate_user(ud: UserData, task: str, protocol: Protocol) -> UserEvaluation | SkipRecord:
    """One user-condition: a shared stratified split scored by all four models.

    The tuned forest reruns the whole random search inside each fold's
    training part, so its test windows never touch the selection step.
    """
    if task not in TASKS:
        raise InvalidConfig(f"task must be one of {TASKS}, got {task!r}")
    X, y = _task_subset(ud, task)
    need = TASK_CLASSES[task]

    present, counts = np.unique(y, return_counts=True)
    count_by_class = dict(zip(present.tolist(), counts.tolist()))
    lacking = [c for c in need if count_by_class.get(c, 0) < protocol.k]
    if lacking:
        return SkipRecord(
            ud.participant_id, ud.condition, task,
            f"TooFewPerClass: classes {lacking} have fewer than k={protocol.k} windows")

    seed_u = derive_seed(protocol.seed, ud.participant_id, ud.condition)
    try:
        folds = stratified_kfold(y, protocol.k, derive_seed(seed_u, "folds"),
                                 protocol.contiguous_folds)
    except TooFewPerClass as exc:
        return SkipRecord(ud.participant_id, ud.condition, task, f"TooFewPerClass: {exc}")

    per_fold: dict[str, dict[str, list[float]]] = {
        m: {name: [] for name in METRIC_NAMES} for m in MODELS}
    tuned_params: list[HyperParams] = []
    n = y.size
    try:
        for i, test_idx in enumerate(folds):
            mask = np.ones(n, dtype=bool)
            mask[test_idx] = False
            train_idx = np.flatnonzero(mask)
            assert np.intersect1d(train_idx, test_idx).size == 0
            train = Dataset(X[train_idx], y[train_idx])
            X_test, y_test = X[test_idx], y[test_idx]

            base = fit_most_frequent(train)
            preds = {"baseline": predict_most_frequent(base, X_test)}

            logit = fit_logistic(train)
            preds["logistic"] = predict_logistic(logit, X_test)

            forest = fit_random_forest(train, DEFAULT_FOREST,
                                       derive_seed(seed_u, "default", i))
            preds["forest_default"] = predict_random_forest(forest, X_test)

            best, _ = random_search(train, protocol.space, protocol.n_iter,
                                    protocol.k, derive_seed(seed_u, "tune", i),
                                    protocol.contiguous_folds)
            tuned = fit_random_forest(train, best, derive_seed(seed_u, "tuned", i))
            preds["forest_tuned"] = predict_random_forest(tuned, X_test)
            tuned_params.append(best)

            for m, (labels, proba) in preds.items():
                per_fold[m]["accuracy"].append(accuracy(y_test, labels))
                per_fold[m]["f1_weighted"].append(weighted_f1(y_test, labels))
                per_fold[m]["auc"].append(roc_auc(y_test, proba, task))
    except (TooFewPerClass, SingleClassDataset) as exc:
        return SkipRecord(ud.participant_id, ud.condition, task,
                          f"{type(exc).__name__}: {exc}")

    metrics = {
        m: MetricSet(auc=float(np.mean(per_fold[m]["auc"])),
                     f1_weighted=float(np.mean(per_fold[m]["f1_weighted"])),
                     accuracy=float(np.mean(per_fold[m]["accuracy"])))
        for m in MODELS}
    fold_scores = {m: {name: tuple(vals) for name, vals in per_fold[m].items()}
                   for m in MODELS}
    return UserEvaluation(
        participant_id=ud.participant_id, condition=ud.condition, task=task,
        metrics=metrics, fold_scores=fold_scores, tuned_params=tuple(tuned_params))


def _evaluate_user_star(args):
    return evaluate_user(*args)


def run_personal_experiment(users: list[UserData], task: str, protocol: Protocol,
                            jobs: int = 1) -> ExperimentResult:
    """Evaluate every (participant, condition); failures skip, run continues.

    Per-user seeds derive from (seed, participant, condition), so the
    result is identical for any job count or user order.
    """
    ordered = sorted(users, key=lambda u: (u.participant_id, u.condition))
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_evaluate_user_star,
                                     [(ud, task, protocol) for ud in ordered]))
    else:
        outcomes = [evaluate_user(ud, task, protocol) for ud in ordered]

    evaluations = [o for o in outcomes if isinstance(o, UserEvaluation)]
    skipped = [o for o in outcomes if isinstance(o, SkipRecord)]
    return ExperimentResult(task=task, protocol=protocol,
                            evaluations=evaluations, skipped=skipped)


@dataclass(frozen=True)
class ModelSummary:
    model: str
    auc_mean: float
    auc_std: float
    f1_mean: float
    f1_std: float
    acc_mean: float
    acc_std: float
    user_lift: float | None
    p_value: float | None


@dataclass
class StudySummary:
    task: str
    conditions: tuple[int, ...]
    rows: dict[tuple[int, str], ModelSummary]
    cross_condition: dict[str, MetricSet]
    n_users: dict[int, int]

    def cross_condition_accuracy(self, model: str) -> float:
        return self.cross_condition[model].accuracy


def summarize_study(evals: list[UserEvaluation]) -> StudySummary:
    """Per (condition, model) means/stds across users, with lift and p-value.

    Stds use the n-1 denominator; lift and significance compare each
    model's per-user accuracies to the baseline's over the same users.
    """
    if not evals:
        raise TooFewUsers("no evaluations to summarize")
    tasks = {e.task for e in evals}
    if len(tasks) != 1:
        raise InvalidConfig(f"cannot summarize mixed tasks {sorted(tasks)}")
    task = tasks.pop()

    by_condition: dict[int, list[UserEvaluation]] = {}
    for e in evals:
        by_condition.setdefault(e.condition, []).append(e)

    rows: dict[tuple[int, str], ModelSummary] = {}
    n_users: dict[int, int] = {}
    for condition in sorted(by_condition):
        group = sorted(by_condition[condition], key=lambda e: e.participant_id)
        if len(group) < 2:
            raise TooFewUsers(
                f"condition {condition} has {len(group)} user(s), need >= 2")
        n_users[condition] = len(group)
        base_acc = [e.metrics["baseline"].accuracy for e in group]
        for model in MODELS:
            aucs = np.array([e.metrics[model].auc for e in group])
            f1s = np.array([e.metrics[model].f1_weighted for e in group])
            accs = np.array([e.metrics[model].accuracy for e in group])
            lift = p = None
            if model != "baseline":
                lift = user_lift(accs.tolist(), base_acc)
                if len(group) >= 5:
                    p = paired_significance(accs.tolist(), base_acc)
            rows[(condition, model)] = ModelSummary(
                model=model,
                auc_mean=float(aucs.mean()), auc_std=float(aucs.std(ddof=1)),
                f1_mean=float(f1s.mean()), f1_std=float(f1s.std(ddof=1)),
                acc_mean=float(accs.mean()), acc_std=float(accs.std(ddof=1)),
                user_lift=lift, p_value=p)

    conditions = tuple(sorted(by_condition))
    cross = {}
    for model in MODELS:
        cross[model] = MetricSet(
            auc=float(np.mean([rows[(c, model)].auc_mean for c in conditions])),
            f1_weighted=float(np.mean([rows[(c, model)].f1_mean for c in conditions])),
            accuracy=float(np.mean([rows[(c, model)].acc_mean for c in conditions])))
    return StudySummary(task=task, conditions=conditions, rows=rows,
                        cross_condition=cross, n_users=n_users)


def format_cell(mean: float, std: float) -> str:
    return f"{mean:.3f} ({std:.3f})"


def format_p(p: float) -> str:
    return "0.000" if p < 0.0005 else f"{p:.3f}"


def format_percent(x: float) -> str:
    return f"{100.0 * x:.2f}%"


def _num(x) -> str:
    return "" if x is None else f"{x:.6f}"


def summary_to_csv_text(summary: StudySummary) -> str:
    """CSV mirroring the summary tables; `all` rows hold cross-condition means."""
    buf = io.StringIO()
    buf.write("condition,model,auc_mean,auc_std,f1_mean,f1_std,"
              "acc_mean,acc_std,user_lift,p_value\n")
    for condition in summary.conditions:
        for model in MODELS:
            r = summary.rows[(condition, model)]
            buf.write(f"{condition},{model},{_num(r.auc_mean)},{_num(r.auc_std)},"
                      f"{_num(r.f1_mean)},{_num(r.f1_std)},{_num(r.acc_mean)},"
                      f"{_num(r.acc_std)},{_num(r.user_lift)},{_num(r.p_value)}\n")
    base_cross = summary.cross_condition["baseline"].accuracy
    for model in MODELS:
        ms = summary.cross_condition[model]
        lift = None if model == "baseline" else ms.accuracy - base_cross
        buf.write(f"all,{model},{_num(ms.auc)},,{_num(ms.f1_weighted)},,"
                  f"{_num(ms.accuracy)},,{_num(lift)},\n")
    return buf.getvalue()


def boxplot_to_csv_text(evals: list[UserEvaluation]) -> str:
    """Per-user accuracies per model: the data behind the accuracy boxplots."""
    buf = io.StringIO()
    buf.write("participant_id,condition,task,model,accuracy\n")
    for e in sorted(evals, key=lambda e: (e.condition, e.participant_id)):
        for model in MODELS:
            buf.write(f"{e.participant_id},{e.condition},{e.task},{model},"
                      f"{e.metrics[model].accuracy:.6f}\n")
    return buf.getvalue()


def _params_to_dict(p: HyperParams) -> dict:
    mf = p.max_features if isinstance(p.max_features, str) else float(p.max_features)
    return {"n_trees": p.n_trees, "max_depth": p.max_depth,
            "min_samples_split": p.min_samples_split,
            "min_samples_leaf": p.min_samples_leaf,
            "max_features": mf, "bootstrap": p.bootstrap}


def _params_from_dict(d: dict) -> HyperParams:
    return HyperParams(n_trees=int(d["n_trees"]),
                       max_depth=None if d["max_depth"] is None else int(d["max_depth"]),
                       min_samples_split=int(d["min_samples_split"]),
                       min_samples_leaf=int(d["min_samples_leaf"]),
                       max_features=d["max_features"],
                       bootstrap=bool(d["bootstrap"]))


def _space_to_dict(space: SearchSpace) -> dict:
    return {"n_trees": list(space.n_trees),
            "max_depth": list(space.max_depth),
            "min_samples_split": list(space.min_samples_split),
            "min_samples_leaf": list(space.min_samples_leaf),
            "max_features": list(space.max_features),
            "bootstrap": list(space.bootstrap)}


def _space_from_dict(d: dict) -> SearchSpace:
    return SearchSpace(n_trees=tuple(d["n_trees"]),
                       max_depth=tuple(d["max_depth"]),
                       min_samples_split=tuple(d["min_samples_split"]),
                       min_samples_leaf=tuple(d["min_samples_leaf"]),
                       max_features=tuple(d["max_features"]),
                       bootstrap=tuple(d["bootstrap"]))


def results_to_yaml_text(results: list[ExperimentResult], meta: dict | None = None) -> str:
    """Deterministic YAML: run metadata, then every evaluation and skip."""
    if not results:
        raise InvalidConfig("no experiment results to serialize")
    proto = results[0].protocol
    doc = {
        "run": {
            "seed": proto.seed,
            "k": proto.k,
            "n_iter": proto.n_iter,
            "contiguous_folds": proto.contiguous_folds,
            "catalog_version": CATALOG_VERSION,
            "tasks": [r.task for r in results],
            "space": _space_to_dict(proto.space),
            **(meta or {}),
        },
        "results": [],
    }
    for res in results:
        entry = {"task": res.task, "evaluations": [], "skipped": []}
        for e in sorted(res.evaluations, key=lambda e: (e.participant_id, e.condition)):
            entry["evaluations"].append({
                "participant_id": e.participant_id,
                "condition": e.condition,
                "metrics": {m: {"auc": e.metrics[m].auc,
                                "f1_weighted": e.metrics[m].f1_weighted,
                                "accuracy": e.metrics[m].accuracy}
                            for m in MODELS},
                "fold_scores": {m: {name: list(vals)
                                    for name, vals in e.fold_scores[m].items()}
                                for m in MODELS},
                "tuned_params": [_params_to_dict(p) for p in e.tuned_params],
            })
        for s in sorted(res.skipped, key=lambda s: (s.participant_id, s.condition)):
            entry["skipped"].append({
                "participant_id": s.participant_id, "condition": s.condition,
                "reason": s.reason})
        doc["results"].append(entry)
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def write_results_yaml(path: str | os.PathLike, results: list[ExperimentResult],
                       meta: dict | None = None) -> None:
    atomic_write_text(path, results_to_yaml_text(results, meta))


def load_results_yaml(path: str | os.PathLike) -> tuple[dict, list[ExperimentResult]]:
    """Rebuild (run metadata, experiment results) from a results YAML."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "run" not in doc or "results" not in doc:
        raise DataError(f"{path}: not a results file (missing run/results keys)")
    run = doc["run"]
    protocol = Protocol(k=int(run["k"]), n_iter=int(run["n_iter"]),
                        seed=int(run["seed"]),
                        space=_space_from_dict(run["space"]),
                        contiguous_folds=bool(run["contiguous_folds"]))
    results = []
    for entry in doc["results"]:
        task = entry["task"]
        evaluations = []
        for e in entry["evaluations"]:
            metrics = {m: MetricSet(auc=float(v["auc"]),
                                    f1_weighted=float(v["f1_weighted"]),
                                    accuracy=float(v["accuracy"]))
                       for m, v in e["metrics"].items()}
            fold_scores = {m: {name: tuple(float(x) for x in vals)
                               for name, vals in d.items()}
                           for m, d in e["fold_scores"].items()}
            evaluations.append(UserEvaluation(
                participant_id=str(e["participant_id"]),
                condition=int(e["condition"]), task=task,
                metrics=metrics, fold_scores=fold_scores,
                tuned_params=tuple(_params_from_dict(p) for p in e["tuned_params"])))
        skipped = [SkipRecord(str(s["participant_id"]), int(s["condition"]), task,
                              str(s["reason"]))
                   for s in entry["skipped"]]
        results.append(ExperimentResult(task=task, protocol=protocol,
                                        evaluations=evaluations, skipped=skipped))
    return run, results
