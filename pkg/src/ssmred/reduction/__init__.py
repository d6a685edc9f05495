from .embedding import delay_embed
from .io import ModelFormatError, load_model, save_model
from .polynomial import MAX_CONDITION, PolynomialMap, RegressionError, fit_polynomial, monomials, multi_indices
from .slow_manifold import M_INV, NonMonotoneError, SlowManifoldModel, fit_slow_manifold, invert_sm, predict_sm
from .ssm import (
    AdiabaticSsmModel,
    Embedding,
    LocalSsmModel,
    PredictionDiverged,
    SsmFitError,
    build_assm,
    fit_local_ssm,
    predict_assm,
    principal_angle,
)

__all__ = [
    "AdiabaticSsmModel", "Embedding", "LocalSsmModel", "MAX_CONDITION", "M_INV",
    "ModelFormatError", "NonMonotoneError", "PolynomialMap", "PredictionDiverged",
    "RegressionError", "SlowManifoldModel", "SsmFitError", "build_assm", "delay_embed",
    "fit_local_ssm", "fit_polynomial", "fit_slow_manifold", "invert_sm", "load_model",
    "monomials", "multi_indices", "predict_assm", "predict_sm", "principal_angle", "save_model",
]
