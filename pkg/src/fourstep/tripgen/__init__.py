from .explain import Attribution, feature_importance, shapley
from .models import (
    DEFAULT_HYPERPARAMS,
    KINDS,
    ModelError,
    TripModel,
    fit_model,
    mlp_loss_and_grads,
)
from .trees import TreeNode, fit_tree, predict_tree

__all__ = [
    "Attribution",
    "DEFAULT_HYPERPARAMS",
    "KINDS",
    "ModelError",
    "TreeNode",
    "TripModel",
    "feature_importance",
    "fit_model",
    "fit_tree",
    "mlp_loss_and_grads",
    "predict_tree",
    "shapley",
]
