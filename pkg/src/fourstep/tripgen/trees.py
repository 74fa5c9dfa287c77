"""Depth-limited regression trees with variance-reduction splits.

Split ties break deterministically: lower feature index first, then lower
threshold. Leaf values are means of the training targets reaching the leaf.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TreeNode:
    # leaf when feature < 0
    feature: int = -1
    threshold: float = 0.0
    value: float = 0.0
    gain: float = 0.0  # total variance reduction at this split
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def is_leaf(self) -> bool:
        return self.feature < 0

    def to_dict(self) -> dict:
        if self.is_leaf():
            return {"value": float(self.value)}
        return {
            "feature": int(self.feature),
            "threshold": float(self.threshold),
            "gain": float(self.gain),
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "feature" not in d:
            return cls(value=float(d["value"]))
        return cls(
            feature=int(d["feature"]),
            threshold=float(d["threshold"]),
            gain=float(d.get("gain", 0.0)),
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _best_split(X, y, feature_ids):
    """Return (feature, threshold, gain) maximizing variance reduction.

    gain is measured as sum of squared deviations removed, i.e.
    SSE(parent) - SSE(left) - SSE(right), which is n * variance reduction.
    """
    n = len(y)
    parent_sse = float(((y - y.mean()) ** 2).sum())
    best = (-1, 0.0, 0.0)
    for f in feature_ids:
        col = X[:, f]
        values = np.unique(col)
        if len(values) < 2:
            continue
        thresholds = (values[:-1] + values[1:]) / 2.0
        for t in thresholds:
            mask = col <= t
            nl = int(mask.sum())
            if nl == 0 or nl == n:
                continue
            yl, yr = y[mask], y[~mask]
            sse = float(((yl - yl.mean()) ** 2).sum()) + float(
                ((yr - yr.mean()) ** 2).sum()
            )
            gain = parent_sse - sse
            # strict > keeps the first (lowest feature, lowest threshold)
            if gain > best[2] + 1e-12:
                best = (f, float(t), gain)
    return best


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    min_samples_split: int = 2,
    rng: np.random.Generator | None = None,
    max_features: int | None = None,
) -> TreeNode:
    """Grow a regression tree. When rng and max_features are given, each
    split considers a random feature subset (sampled without replacement,
    then sorted so tie-breaking stays index-ordered)."""
    n_features = X.shape[1]

    def grow(idx, depth):
        y_node = y[idx]
        node = TreeNode(value=float(y_node.mean()))
        if depth >= max_depth or len(idx) < min_samples_split:
            return node
        if np.allclose(y_node, y_node[0]):
            return node
        if rng is not None and max_features is not None and max_features < n_features:
            feats = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            feats = np.arange(n_features)
        f, t, gain = _best_split(X[idx], y_node, feats)
        if f < 0 or gain <= 0:
            return node
        mask = X[idx, f] <= t
        node.feature = f
        node.threshold = t
        node.gain = gain
        node.left = grow(idx[mask], depth + 1)
        node.right = grow(idx[~mask], depth + 1)
        return node

    return grow(np.arange(len(y)), 0)


def predict_tree(node: TreeNode, x: np.ndarray) -> float:
    while not node.is_leaf():
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.value


def accumulate_gains(node: TreeNode, out: np.ndarray):
    """Add each split's variance-reduction gain to out[feature]."""
    if node.is_leaf():
        return
    out[node.feature] += node.gain
    accumulate_gains(node.left, out)
    accumulate_gains(node.right, out)
