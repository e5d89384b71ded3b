"""Personal models: baseline, logistic regression, random forest."""

from .baseline import MostFrequentModel, fit_most_frequent, predict_most_frequent
from .dataset import Dataset
from .forest import (DEFAULT_FOREST, ForestModel, HyperParams, fit_random_forest,
                     gini_impurity, predict_random_forest, resolve_max_features)
from .logistic import (LogisticModel, fit_logistic, loss_and_grad,
                       predict_logistic, standardize)
from .serialize import load_model, model_from_text, model_to_text, save_model

__all__ = [
    "Dataset",
    "MostFrequentModel", "fit_most_frequent", "predict_most_frequent",
    "LogisticModel", "fit_logistic", "predict_logistic", "loss_and_grad",
    "standardize",
    "HyperParams", "DEFAULT_FOREST", "ForestModel", "fit_random_forest",
    "predict_random_forest", "resolve_max_features", "gini_impurity",
    "load_model", "save_model", "model_to_text", "model_from_text",
]
