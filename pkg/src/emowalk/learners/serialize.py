"""Plain-text, versioned model serialization with exact round-trips."""

from __future__ import annotations

import os
from typing import Union

import numpy as np

from ..errors import DataError
from ..io_utils import atomic_write_text
from .baseline import MostFrequentModel
from .forest import ForestModel, HyperParams
from .logistic import LogisticModel

MAGIC = "emowalk-model v1"

Model = Union[MostFrequentModel, LogisticModel, ForestModel]


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _parse_floats(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.split()], dtype=np.float64)


def _params_line(p: HyperParams) -> str:
    depth = "none" if p.max_depth is None else str(p.max_depth)
    mf = p.max_features if isinstance(p.max_features, str) else repr(float(p.max_features))
    return (f"n_trees={p.n_trees} max_depth={depth} "
            f"min_samples_split={p.min_samples_split} "
            f"min_samples_leaf={p.min_samples_leaf} "
            f"max_features={mf} bootstrap={str(p.bootstrap).lower()}")


def _parse_params(text: str) -> HyperParams:
    kv = dict(tok.split("=", 1) for tok in text.split())
    depth = None if kv["max_depth"] == "none" else int(kv["max_depth"])
    mf: str | float = kv["max_features"]
    if mf not in ("sqrt", "log2"):
        mf = float(mf)
    return HyperParams(
        n_trees=int(kv["n_trees"]),
        max_depth=depth,
        min_samples_split=int(kv["min_samples_split"]),
        min_samples_leaf=int(kv["min_samples_leaf"]),
        max_features=mf,
        bootstrap=kv["bootstrap"] == "true",
    )


def model_to_text(model: Model) -> str:
    lines = [MAGIC]
    if isinstance(model, MostFrequentModel):
        lines.append("family: most-frequent")
        lines.append("classes: " + " ".join(str(c) for c in model.classes_))
        lines.append(f"n_features: {model.n_features}")
        lines.append(f"majority: {model.majority_label}")
        lines.append("prior: " + _floats(model.prior))
    elif isinstance(model, LogisticModel):
        lines.append("family: logistic")
        lines.append("classes: " + " ".join(str(c) for c in model.classes_))
        lines.append(f"n_features: {model.n_features}")
        lines.append(f"reg_strength: {model.reg_strength!r}")
        lines.append("mean: " + _floats(model.feat_mean))
        lines.append("std: " + _floats(model.feat_std))
        if model.binary:
            lines.append("weights: " + _floats(model.weights))
        else:
            for c, row in zip(model.classes_, model.weights):
                lines.append(f"weights {c}: " + _floats(row))
    elif isinstance(model, ForestModel):
        lines.append("family: forest")
        lines.append("classes: " + " ".join(str(c) for c in model.classes_))
        lines.append(f"n_features: {model.n_features}")
        lines.append(f"seed: {model.seed}")
        lines.append("params: " + _params_line(model.params))
        lines.append(f"trees: {model.n_trees}")
        for t in range(model.n_trees):
            base = int(model.offsets[t])
            stop = int(model.offsets[t + 1])
            lines.append(f"tree {t} nodes {stop - base}")
            for i in range(base, stop):
                if model.leaf[i] >= 0:
                    label = model.classes_[model.leaf[i]]
                    lines.append(f"{i - base} leaf {label}")
                else:
                    lines.append(
                        f"{i - base} split {model.feature[i]} "
                        f"{float(model.threshold[i])!r} "
                        f"{model.left[i] - base} {model.right[i] - base}")
    else:
        raise TypeError(f"cannot serialize {type(model)!r}")
    return "\n".join(lines) + "\n"


def save_model(model: Model, path: str | os.PathLike) -> None:
    atomic_write_text(path, model_to_text(model))


def model_from_text(text: str, source: str = "") -> Model:
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise DataError(f"{source or 'model text'}: missing '{MAGIC}' header")
    try:
        return _model_from_lines(lines, source)
    except DataError:
        raise
    except (KeyError, ValueError, IndexError) as exc:
        raise DataError(
            f"{source or 'model text'}: malformed model file ({exc})") from None


def _model_from_lines(lines: list[str], source: str) -> Model:
    fields: dict[str, str] = {}
    i = 1
    while i < len(lines) and ":" in lines[i] and not lines[i].startswith("tree "):
        key, _, val = lines[i].partition(":")
        fields[key.strip()] = val.strip()
        i += 1
    family = fields.get("family")
    classes = tuple(int(tok) for tok in fields["classes"].split())
    n_features = int(fields["n_features"])

    if family == "most-frequent":
        return MostFrequentModel(
            classes_=classes,
            majority_label=int(fields["majority"]),
            prior=tuple(float(tok) for tok in fields["prior"].split()),
            n_features=n_features,
        )
    if family == "logistic":
        if "weights" in fields:
            weights = _parse_floats(fields["weights"])
        else:
            weights = np.stack([_parse_floats(fields[f"weights {c}"]) for c in classes])
        return LogisticModel(
            classes_=classes,
            weights=weights,
            feat_mean=_parse_floats(fields["mean"]),
            feat_std=_parse_floats(fields["std"]),
            reg_strength=float(fields["reg_strength"]),
        )
    if family == "forest":
        n_trees = int(fields["trees"])
        label_to_code = {c: k for k, c in enumerate(classes)}
        feature, threshold, left, right, leaf = [], [], [], [], []
        offsets = [0]
        for _ in range(n_trees):
            header = lines[i].split()
            if header[0] != "tree":
                raise DataError(f"{source}: expected tree header, got {lines[i]!r}")
            count = int(header[3])
            base = offsets[-1]
            i += 1
            for _ in range(count):
                toks = lines[i].split()
                if toks[1] == "leaf":
                    feature.append(-1)
                    threshold.append(0.0)
                    left.append(-1)
                    right.append(-1)
                    leaf.append(label_to_code[int(toks[2])])
                else:
                    feature.append(int(toks[2]))
                    threshold.append(float(toks[3]))
                    left.append(base + int(toks[4]))
                    right.append(base + int(toks[5]))
                    leaf.append(-1)
                i += 1
            offsets.append(base + count)
        return ForestModel(
            classes_=classes,
            params=_parse_params(fields["params"]),
            seed=int(fields["seed"]),
            n_features=n_features,
            feature=np.array(feature, dtype=np.int32),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int32),
            right=np.array(right, dtype=np.int32),
            leaf=np.array(leaf, dtype=np.int32),
            offsets=np.array(offsets, dtype=np.int32),
        )
    raise DataError(f"{source or 'model text'}: unknown family {family!r}")


def load_model(path: str | os.PathLike) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read(), source=str(path))
