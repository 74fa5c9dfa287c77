"""Exact Shapley attribution by subset enumeration, plus impurity and
permutation feature importances."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial

import numpy as np

from .models import ModelError, TripModel
from .trees import accumulate_gains

MAX_SHAPLEY_FEATURES = 15


@dataclass
class Attribution:
    base_value: float
    phi: np.ndarray

    def total(self) -> float:
        return float(self.base_value + self.phi.sum())


def shapley(model: TripModel, x, background) -> Attribution:
    """Exact Shapley values with marginal-expectation value function.

    v(S) is the mean model prediction over background rows with the features
    in S taken from x and the rest from the background row. Each phi_i is the
    weighted sum of marginal contributions over all subsets not containing i,
    with weight |S|! (n - |S| - 1)! / n!.
    """
    x = np.asarray(x, dtype=float)
    background = np.asarray(background, dtype=float)
    n = model.n_features
    if n > MAX_SHAPLEY_FEATURES:
        raise ModelError(
            f"{n} features exceeds the exact enumeration bound "
            f"({MAX_SHAPLEY_FEATURES})"
        )
    if background.ndim != 2 or len(background) == 0:
        raise ModelError("background set is empty")

    def value(subset: frozenset) -> float:
        preds = []
        for b in background:
            z = b.copy()
            for i in subset:
                z[i] = x[i]
            preds.append(model.predict(z))
        return float(np.mean(preds))

    values = {}
    all_features = tuple(range(n))
    for k in range(n + 1):
        for s in combinations(all_features, k):
            values[frozenset(s)] = value(frozenset(s))

    phi = np.zeros(n)
    fact_n = factorial(n)
    for i in range(n):
        others = tuple(j for j in all_features if j != i)
        for k in range(n):
            w = factorial(k) * factorial(n - k - 1) / fact_n
            for s in combinations(others, k):
                fs = frozenset(s)
                phi[i] += w * (values[fs | {i}] - values[fs])

    return Attribution(base_value=values[frozenset()], phi=phi)


def feature_importance(
    model: TripModel,
    method: str,
    X=None,
    y=None,
    rng_seed: int = 0,
    n_shuffles: int = 5,
) -> np.ndarray:
    """Per-feature non-negative importance scores.

    impurity: variance-reduction gains summed per feature within each tree,
    averaged over trees, normalized to sum to 1. Tree-based models only.
    permutation: mean increase in squared error over n_shuffles independent
    shuffles of each feature column; deterministic for a fixed rng_seed.
    """
    if method == "impurity":
        if model.kind == "random_forest":
            trees = model.params["trees"]
        elif model.kind == "gradient_boost":
            trees = model.params["stages"]
        else:
            raise ModelError(
                f"impurity importance requires a tree-based model, got {model.kind}"
            )
        per_tree = np.zeros((len(trees), model.n_features))
        for t_idx, tree in enumerate(trees):
            accumulate_gains(tree, per_tree[t_idx])
        scores = per_tree.mean(axis=0)
        total = scores.sum()
        return scores / total if total > 0 else scores

    if method == "permutation":
        if X is None or y is None:
            raise ModelError("permutation importance requires evaluation data")
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        rng = np.random.default_rng(rng_seed)
        base_mse = float(((model.predict_many(X) - y) ** 2).mean())
        scores = np.zeros(model.n_features)
        for f in range(model.n_features):
            increases = []
            for _ in range(n_shuffles):
                Xp = X.copy()
                Xp[:, f] = Xp[rng.permutation(len(X)), f]
                mse = float(((model.predict_many(Xp) - y) ** 2).mean())
                increases.append(mse - base_mse)
            scores[f] = max(0.0, float(np.mean(increases)))
        return scores

    raise ModelError(f"unknown importance method {method!r}")
