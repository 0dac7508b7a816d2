"""Regression models for objective-boundary estimation."""
from .core import (DEFAULT_HYPERPARAMS, GTB, KINDS, KNN, LR, MLP, Estimation,
                   Estimator, UnsupportedCombination, estimate, is_admissible,
                   load_estimator, save_estimator, train, train_arrays)
from .losses import (OVERESTIMATE, SHIFTED, SQUARED, UNDERESTIMATE, LabelShift,
                     LossSpec, loss, loss_gradient, shift_label)

__all__ = [
    "DEFAULT_HYPERPARAMS", "GTB", "KINDS", "KNN", "LR", "MLP", "Estimation", "Estimator",
    "UnsupportedCombination", "estimate", "is_admissible", "load_estimator", "save_estimator",
    "train", "train_arrays", "OVERESTIMATE", "SHIFTED", "SQUARED", "UNDERESTIMATE",
    "LabelShift", "LossSpec", "loss", "loss_gradient", "shift_label",
]
