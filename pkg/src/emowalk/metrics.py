"""Classification metrics: accuracy, weighted F1, ROC AUC, lift, significance."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, rankdata

from .errors import (EmptyInput, InvalidConfig, LengthMismatch, SingleClassTruth,
                     TooFewPairs)

TASKS = ("binary", "ternary")
TASK_CLASSES = {"binary": (-1, 1), "ternary": (-1, 0, 1)}


def _paired(a, b, name_a="y_true", name_b="y_pred"):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(
            f"{name_a} has {a.shape[0]} entries but {name_b} has {b.shape[0]}")
    return a, b


def accuracy(y_true, y_pred) -> float:
    """Fraction of exact label matches."""
    y_true, y_pred = _paired(y_true, y_pred)
    if y_true.size == 0:
        raise EmptyInput("accuracy of empty inputs is undefined")
    return float(np.mean(y_true == y_pred))


def weighted_f1(y_true, y_pred) -> float:
    """Support-weighted mean of per-class F1, with 0/0 read as 0."""
    y_true, y_pred = _paired(y_true, y_pred)
    n = y_true.size
    if n == 0:
        raise EmptyInput("weighted F1 of empty inputs is undefined")
    total = 0.0
    for c in np.unique(y_true):
        tp = float(np.sum((y_true == c) & (y_pred == c)))
        fp = float(np.sum((y_true != c) & (y_pred == c)))
        fn = float(np.sum((y_true == c) & (y_pred != c)))
        support = tp + fn
        denom = 2 * tp + fp + fn
        f1 = 2 * tp / denom if denom > 0 else 0.0
        total += (support / n) * f1
    return float(total)


def _binary_auc(pos_mask: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based AUC; ties contribute half, so constant scores give 0.5."""
    n_pos = int(pos_mask.sum())
    n_neg = int(pos_mask.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTruth("AUC needs both positive and negative truths")
    ranks = rankdata(scores, method="average")
    r_pos = float(ranks[pos_mask].sum())
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_auc(y_true, scores, task: str = "binary") -> float:
    """Binary: pair-ordering probability of the positive-class score.

    The larger of the two observed labels is positive; scores may be a
    positive-score vector or per-class probability rows (positive column
    last).  Ternary: unweighted mean of the three one-vs-rest AUCs with
    score columns ordered by class (-1, 0, 1); all three classes must
    appear in y_true.
    """
    if task not in TASKS:
        raise InvalidConfig(f"task must be one of {TASKS}, got {task!r}")
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    if y_true.shape[0] != scores.shape[0]:
        raise LengthMismatch(
            f"y_true has {y_true.shape[0]} entries but scores has {scores.shape[0]}")
    if y_true.size == 0:
        raise EmptyInput("AUC of empty inputs is undefined")

    if task == "binary":
        classes = np.unique(y_true)
        if classes.size != 2:
            raise SingleClassTruth(
                f"binary AUC needs exactly 2 truth classes, got {classes.tolist()}")
        pos = y_true == classes[1]
        col = scores if scores.ndim == 1 else scores[:, -1]
        return float(_binary_auc(pos, col))

    classes = TASK_CLASSES["ternary"]
    if scores.ndim != 2 or scores.shape[1] != 3:
        raise InvalidConfig("ternary AUC needs score rows with 3 columns")
    present = set(np.unique(y_true).tolist())
    missing = [c for c in classes if c not in present]
    if missing:
        raise SingleClassTruth(f"ternary AUC undefined: classes {missing} absent")
    aucs = [_binary_auc(y_true == c, scores[:, j]) for j, c in enumerate(classes)]
    return float(np.mean(aucs))


def user_lift(model_user_accuracies, baseline_user_accuracies) -> float:
    """Mean model accuracy minus mean baseline accuracy over the same users."""
    model, base = _paired(model_user_accuracies, baseline_user_accuracies,
                          "model accuracies", "baseline accuracies")
    if model.size == 0:
        raise EmptyInput("user lift of empty inputs is undefined")
    return float(np.mean(np.asarray(model, dtype=np.float64))
                 - np.mean(np.asarray(base, dtype=np.float64)))


def _exact_wilcoxon_p(w2: int, ranks2: np.ndarray) -> float:
    """Two-sided exact p via the signed-rank null over doubled ranks.

    counts[s] = number of sign assignments with positive-rank sum s/2;
    integers stay below 2**53 for n <= 25, so float64 math is exact.
    """
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts += shifted
    denom = 2.0 ** len(ranks2)
    cdf_le = counts[:w2 + 1].sum() / denom
    cdf_ge = counts[w2:].sum() / denom
    return min(1.0, 2.0 * min(cdf_le, cdf_ge))


def paired_significance(model_user_accuracies, baseline_user_accuracies) -> float:
    """Two-sided Wilcoxon signed-rank p-value on paired accuracies.

    Zero differences are dropped; the null distribution is exact for up
    to 25 nonzero pairs and a tie-corrected normal approximation (no
    continuity correction) beyond; all-zero differences give p = 1.
    """
    model, base = _paired(model_user_accuracies, baseline_user_accuracies,
                          "model accuracies", "baseline accuracies")
    if model.size < 5:
        raise TooFewPairs(f"need >= 5 pairs, got {model.size}")
    diffs = np.asarray(model, dtype=np.float64) - np.asarray(base, dtype=np.float64)
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        return 1.0
    ranks = rankdata(np.abs(diffs), method="average")
    w_plus = float(ranks[diffs > 0].sum())

    if n <= 25:
        ranks2 = np.rint(2.0 * ranks).astype(np.int64)
        w2 = int(round(2.0 * w_plus))
        return _exact_wilcoxon_p(w2, ranks2)

    mu = n * (n + 1) / 4.0
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(diffs), return_counts=True)
    sigma2 -= float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts)) / 48.0
    z = (w_plus - mu) / np.sqrt(sigma2)
    return float(min(1.0, 2.0 * norm.sf(abs(z))))
