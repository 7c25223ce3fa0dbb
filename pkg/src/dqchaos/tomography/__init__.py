"""Process tomography with SPAM modeling."""

from .data import ShotDataset, generate_spam_dataset, generate_synthetic_dataset
from .fit import ConvergenceWarning, FitConfig, FitResult, fit, fit_channel, fit_spam, loss_and_gradient
from .model import KrausParameterization, SpamModel, loss, polar_retract, predict_batch, predict_probabilities
from .modes import MEAS_ALPHABET, PREP_ALPHABET, PauliMode, all_modes, sample_modes, spam_modes

__all__ = [
    "ConvergenceWarning",
    "FitConfig",
    "FitResult",
    "KrausParameterization",
    "MEAS_ALPHABET",
    "PREP_ALPHABET",
    "PauliMode",
    "ShotDataset",
    "SpamModel",
    "all_modes",
    "fit",
    "fit_channel",
    "fit_spam",
    "generate_spam_dataset",
    "generate_synthetic_dataset",
    "loss",
    "loss_and_gradient",
    "polar_retract",
    "predict_batch",
    "predict_probabilities",
    "sample_modes",
    "spam_modes",
]
