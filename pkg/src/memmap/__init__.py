"""Student-t membership-mapping regression.

Closed-form variational learning over inducing points, prediction, and
numerical oracles for the underlying membership identities.
"""
from .errors import (InconclusiveError, InvalidArgumentError, MemmapError,
                     ModelFormatError, NumericError, UnsupportedError, VersionError)
from .kernel_core import BACKEND, KernelConfig
from .learner import FitReport, HyperParams, fit
from .model import Dataset, ModelParams
from .predictor import predict, predict_batch, predict_gradient
from .store import load, save

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Dataset", "FitReport", "HyperParams", "KernelConfig", "ModelParams",
    "fit", "predict", "predict_batch", "predict_gradient", "load", "save",
    "MemmapError", "InvalidArgumentError", "NumericError", "UnsupportedError",
    "InconclusiveError", "ModelFormatError", "VersionError",
]
