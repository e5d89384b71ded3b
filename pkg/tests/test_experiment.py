import math

import numpy as np
import pytest

from emowalk.errors import InvalidConfig, TooFewUsers
from emowalk.evaluation import (
    METRIC_NAMES,
    MODELS,
    ExperimentResult,
    MetricSet,
    Protocol,
    SkipRecord,
    UserData,
    UserEvaluation,
    boxplot_to_csv_text,
    evaluate_user,
    format_cell,
    format_p,
    format_percent,
    load_results_yaml,
    run_personal_experiment,
    summarize_study,
    summary_to_csv_text,
    users_from_features,
    write_results_yaml,
)
from emowalk.features import FeatureVector
from emowalk.tuning import SearchSpace

TINY_SPACE = SearchSpace(
    n_trees=(3, 5),
    max_depth=(None, 3),
    min_samples_split=(2, 2),
    min_samples_leaf=(1, 1),
    max_features=(0.5, 1.0),
    bootstrap=(True,),
)
TINY = Protocol(k=2, n_iter=2, seed=0, space=TINY_SPACE)


def make_user(pid: str, condition: int = 0, n_per_class: int = 6,
              classes=(-1, 0, 1), spread: float = 0.3, seed: int = 0) -> UserData:
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for j, c in enumerate(classes):
        center = np.full(4, 3.0 * j)
        xs.append(center + rng.normal(0, spread, size=(n_per_class, 4)))
        ys.append(np.full(n_per_class, c, dtype=np.int64))
    return UserData(participant_id=pid, condition=condition,
                    X=np.vstack(xs), y=np.concatenate(ys))


class TestUsersFromFeatures:
    def test_groups_stack_in_sorted_order(self):
        fv = lambda v, e, c: FeatureVector(values=np.full(3, float(v)),
                                           emotion=e, condition=c)
        groups = {
            ("p2", 0): [fv(1, 1, 0), fv(2, 0, 0)],
            ("p1", 1): [fv(3, -1, 1)],
            ("p1", 0): [fv(4, 1, 0)],
        }
        users = users_from_features(groups)
        assert [(u.participant_id, u.condition) for u in users] == \
            [("p1", 0), ("p1", 1), ("p2", 0)]
        assert users[2].X.shape == (2, 3)
        assert list(users[2].y) == [1, 0]


class TestEvaluateUser:
    def test_separable_user_all_models_perfect_but_baseline(self):
        ud = make_user("p01", n_per_class=6)
        ev = evaluate_user(ud, "ternary", TINY)
        assert isinstance(ev, UserEvaluation)
        assert set(ev.metrics) == set(MODELS)
        for m in ("logistic", "forest_default", "forest_tuned"):
            assert ev.metrics[m].accuracy == 1.0
            assert ev.metrics[m].auc == 1.0
        assert ev.metrics["baseline"].accuracy == pytest.approx(1 / 3)
        assert ev.metrics["baseline"].auc == pytest.approx(0.5)
        assert len(ev.tuned_params) == TINY.k
        for m in MODELS:
            for name in METRIC_NAMES:
                assert len(ev.fold_scores[m][name]) == TINY.k

    def test_metrics_are_fold_means(self):
        ud = make_user("p02", n_per_class=5, spread=4.0, seed=3)
        ev = evaluate_user(ud, "ternary", TINY)
        for m in MODELS:
            assert ev.metrics[m].accuracy == pytest.approx(
                np.mean(ev.fold_scores[m]["accuracy"]))
            assert ev.metrics[m].auc == pytest.approx(
                np.mean(ev.fold_scores[m]["auc"]))

    def test_binary_drops_neutral_windows(self):
        ud = make_user("p03", n_per_class=6)
        ev = evaluate_user(ud, "binary", TINY)
        assert isinstance(ev, UserEvaluation)
        assert ev.task == "binary"
        assert ev.metrics["logistic"].accuracy == 1.0

    def test_deterministic(self):
        ud = make_user("p04", n_per_class=5, spread=2.0, seed=5)
        a = evaluate_user(ud, "ternary", TINY)
        b = evaluate_user(ud, "ternary", TINY)
        assert a == b

    def test_skip_when_class_thinner_than_k(self):
        ud = make_user("p05", n_per_class=6)
        thin = UserData("p05", 0, ud.X[:-5], ud.y[:-5])  # class 1 has 1 window
        rec = evaluate_user(thin, "ternary", TINY)
        assert isinstance(rec, SkipRecord)
        assert "TooFewPerClass" in rec.reason

    def test_skip_binary_user_without_both_poles(self):
        ud = make_user("p06", classes=(0, 1), n_per_class=6)
        masked = UserData("p06", 0, ud.X[ud.y == 0], ud.y[ud.y == 0])
        rec = evaluate_user(masked, "binary", TINY)
        assert isinstance(rec, SkipRecord)

    def test_unknown_task_rejected(self):
        with pytest.raises(InvalidConfig):
            evaluate_user(make_user("p07"), "fourway", TINY)


class TestRunPersonalExperiment:
    def test_orders_users_and_collects_skips(self):
        users = [make_user("p2", seed=1), make_user("p1", seed=2)]
        thin = make_user("p0", n_per_class=6)
        users.append(UserData("p0", 0, thin.X[:4], thin.y[:4]))
        res = run_personal_experiment(users, "ternary", TINY)
        assert isinstance(res, ExperimentResult)
        assert [e.participant_id for e in res.evaluations] == ["p1", "p2"]
        assert [s.participant_id for s in res.skipped] == ["p0"]
        assert res.task == "ternary" and res.protocol == TINY

    def test_parallel_equals_serial(self):
        users = [make_user("p1", seed=7, spread=2.0),
                 make_user("p2", seed=8, spread=2.0)]
        serial = run_personal_experiment(users, "ternary", TINY, jobs=1)
        parallel = run_personal_experiment(users, "ternary", TINY, jobs=2)
        assert serial.evaluations == parallel.evaluations
        assert serial.skipped == parallel.skipped


def hand_eval(pid: str, condition: int, accs: dict[str, float],
              task: str = "ternary") -> UserEvaluation:
    metrics = {m: MetricSet(auc=0.9, f1_weighted=accs[m] - 0.01,
                            accuracy=accs[m]) for m in MODELS}
    return UserEvaluation(
        participant_id=pid, condition=condition, task=task, metrics=metrics,
        fold_scores={m: {n: (accs[m],) for n in METRIC_NAMES} for m in MODELS},
        tuned_params=())


class TestSummarizeStudy:
    def test_hand_oracle_means_stds_lift(self):
        accs = [
            {"baseline": 0.3, "logistic": 0.6, "forest_default": 0.7, "forest_tuned": 0.8},
            {"baseline": 0.4, "logistic": 0.8, "forest_default": 0.9, "forest_tuned": 0.9},
        ]
        evals = [hand_eval(f"p{i}", 0, a) for i, a in enumerate(accs)]
        s = summarize_study(evals)
        row = s.rows[(0, "forest_tuned")]
        assert row.acc_mean == pytest.approx(0.85)
        assert row.acc_std == pytest.approx(np.std([0.8, 0.9], ddof=1))
        assert row.user_lift == pytest.approx(0.85 - 0.35)
        assert row.p_value is None  # fewer than 5 users
        assert s.rows[(0, "baseline")].user_lift is None
        assert s.n_users[0] == 2

    def test_p_value_appears_at_five_users(self):
        evals = [hand_eval(f"p{i}", 0, {"baseline": 0.3, "logistic": 0.7,
                                        "forest_default": 0.75 + 0.01 * i,
                                        "forest_tuned": 0.8})
                 for i in range(5)]
        s = summarize_study(evals)
        assert s.rows[(0, "forest_default")].p_value == pytest.approx(0.0625)

    def test_cross_condition_is_mean_of_condition_means(self):
        evals = []
        for c, acc in ((0, 0.871), (1, 0.827), (2, 0.901)):
            for i in range(2):
                evals.append(hand_eval(f"p{i}", c, {
                    "baseline": 0.3, "logistic": 0.5,
                    "forest_default": 0.6, "forest_tuned": acc}))
        s = summarize_study(evals)
        want = (0.871 + 0.827 + 0.901) / 3
        assert s.cross_condition_accuracy("forest_tuned") == pytest.approx(want)
        assert format_percent(s.cross_condition_accuracy("forest_tuned")) == "86.63%"

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        evals = [hand_eval(f"p{i}", c, {
            "baseline": float(rng.uniform(0.2, 0.4)),
            "logistic": float(rng.uniform(0.5, 0.9)),
            "forest_default": float(rng.uniform(0.5, 0.9)),
            "forest_tuned": float(rng.uniform(0.5, 0.9))})
            for i in range(6) for c in (0, 1)]
        a = summarize_study(evals)
        b = summarize_study(list(reversed(evals)))
        assert a == b

    def test_mixed_tasks_rejected(self):
        evals = [hand_eval("p0", 0, {m: 0.5 for m in MODELS}, task="binary"),
                 hand_eval("p1", 0, {m: 0.5 for m in MODELS}, task="ternary")]
        with pytest.raises(InvalidConfig):
            summarize_study(evals)

    def test_too_few_users_rejected(self):
        with pytest.raises(TooFewUsers):
            summarize_study([hand_eval("p0", 0, {m: 0.5 for m in MODELS})])
        with pytest.raises(TooFewUsers):
            summarize_study([])


class TestFormatting:
    def test_format_cell(self):
        assert format_cell(0.8504, 0.0706) == "0.850 (0.071)"
        assert format_cell(0.5, 0.0) == "0.500 (0.000)"

    def test_format_p(self):
        assert format_p(0.0004) == "0.000"
        assert format_p(0.0005) == "0.001"
        assert format_p(0.023) == "0.023"
        assert format_p(1.0) == "1.000"

    def test_format_percent(self):
        assert format_percent(0.86633333) == "86.63%"
        assert format_percent(0.76333333) == "76.33%"


class TestCsvRendering:
    @pytest.fixture()
    def summary(self):
        evals = [hand_eval(f"p{i}", c, {
            "baseline": 0.3, "logistic": 0.6,
            "forest_default": 0.7, "forest_tuned": 0.8})
            for i in range(3) for c in (0, 1)]
        return summarize_study(evals), evals

    def test_summary_csv_layout(self, summary):
        s, _ = summary
        lines = summary_to_csv_text(s).strip().split("\n")
        assert lines[0] == ("condition,model,auc_mean,auc_std,f1_mean,f1_std,"
                            "acc_mean,acc_std,user_lift,p_value")
        # 4 models x 2 conditions + 4 cross-condition rows
        assert len(lines) == 1 + 8 + 4
        assert lines[1].startswith("0,baseline,")
        assert any(line.startswith("all,forest_tuned,") for line in lines)

    def test_boxplot_csv_layout(self, summary):
        _, evals = summary
        lines = boxplot_to_csv_text(evals).strip().split("\n")
        assert lines[0] == "participant_id,condition,task,model,accuracy"
        assert len(lines) == 1 + len(evals) * len(MODELS)
        assert lines[1] == "p0,0,ternary,baseline,0.300000"


class TestYamlRoundTrip:
    def test_round_trip_preserves_everything(self, tmp_path):
        users = [make_user("p1", seed=11, spread=2.0),
                 make_user("p2", seed=12, spread=2.0),
                 make_user("p3", condition=1, seed=13)]
        res = run_personal_experiment(users, "ternary", TINY)
        path = tmp_path / "results.yaml"
        write_results_yaml(path, [res], meta={"config_digest": "abc123"})
        run, loaded = load_results_yaml(path)
        assert run["seed"] == TINY.seed
        assert run["k"] == TINY.k
        assert run["n_iter"] == TINY.n_iter
        assert run["config_digest"] == "abc123"
        assert run["tasks"] == ["ternary"]
        (back,) = loaded
        assert back.task == res.task
        assert back.protocol == res.protocol
        assert back.skipped == res.skipped
        assert len(back.evaluations) == len(res.evaluations)
        for a, b in zip(res.evaluations, back.evaluations):
            assert a == b
