"""Trip-count regression models: linear least squares, random forest,
gradient boosting, and a small one-hidden-layer MLP. Training files are
columnar text: n 0/1 feature columns then a target column.

All fits are deterministic for a fixed rng_seed; fitted models are immutable
value objects safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .trees import TreeNode, fit_tree, predict_tree

MODEL_FORMAT_VERSION = 1

KINDS = ("linear", "random_forest", "gradient_boost", "mlp")

DEFAULT_HYPERPARAMS = {
    "linear": {"ridge": 0.0},
    "random_forest": {"n_trees": 50, "max_depth": 6, "max_features": None},
    "gradient_boost": {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3},
    "mlp": {"hidden_width": 8, "epochs": 500, "step_size": 0.05},
}


class ModelError(ValueError):
    pass


@dataclass
class TripModel:
    kind: str
    n_features: int
    hyperparams: dict
    params: dict = field(repr=False)

    def predict(self, x) -> float:
        """Raw model output for one feature vector."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ModelError(
                f"feature vector has length {x.size}, model expects {self.n_features}"
            )
        return _PREDICTORS[self.kind](self.params, x)

    def predict_clamped(self, x) -> float:
        """Non-negative prediction used by the pipeline (trip counts)."""
        return max(0.0, self.predict(x))

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([self.predict(row) for row in X])

    def to_json(self) -> str:
        params = dict(self.params)
        if "trees" in params:
            params["trees"] = [t.to_dict() for t in params["trees"]]
        if "stages" in params:
            params["stages"] = [t.to_dict() for t in params["stages"]]
        for k in ("coefs", "w1", "b1", "w2"):
            if k in params:
                params[k] = np.asarray(params[k]).tolist()
        return json.dumps(
            {
                "format_version": MODEL_FORMAT_VERSION,
                "kind": self.kind,
                "n_features": self.n_features,
                "hyperparams": self.hyperparams,
                "params": params,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "TripModel":
        d = json.loads(text)
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ModelError(
                f"unsupported model format version {d.get('format_version')}"
            )
        params = d["params"]
        if "trees" in params:
            params["trees"] = [TreeNode.from_dict(t) for t in params["trees"]]
        if "stages" in params:
            params["stages"] = [TreeNode.from_dict(t) for t in params["stages"]]
        for k in ("coefs", "w1", "b1", "w2"):
            if k in params:
                params[k] = np.asarray(params[k], dtype=float)
        return cls(
            kind=d["kind"],
            n_features=int(d["n_features"]),
            hyperparams=d["hyperparams"],
            params=params,
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TripModel":
        with open(path) as fh:
            return cls.from_json(fh.read())


# ---------------------------------------------------------------------------
# prediction


def _predict_linear(params, x):
    return float(params["intercept"] + params["coefs"] @ x)


def _predict_forest(params, x):
    return float(np.mean([predict_tree(t, x) for t in params["trees"]]))


def _predict_boost(params, x):
    lr = params["learning_rate"]
    return float(
        params["init"] + lr * sum(predict_tree(t, x) for t in params["stages"])
    )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _predict_mlp(params, x):
    h = _sigmoid(params["w1"] @ x + params["b1"])
    return float(params["w2"] @ h + params["b2"])


_PREDICTORS = {
    "linear": _predict_linear,
    "random_forest": _predict_forest,
    "gradient_boost": _predict_boost,
    "mlp": _predict_mlp,
}


# ---------------------------------------------------------------------------
# fitting


def fit_model(kind, X, y, hyperparams=None, rng_seed: int = 0) -> TripModel:
    """Fit a trip model of the given kind on (X, y)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ModelError("training set is empty")
    if len(X) != len(y):
        raise ModelError("X and y row counts differ")
    if kind not in KINDS:
        raise ModelError(f"unknown model kind {kind!r}")
    hp = dict(DEFAULT_HYPERPARAMS[kind])
    if hyperparams:
        hp.update(hyperparams)
    params = _FITTERS[kind](X, y, hp, rng_seed)
    return TripModel(kind=kind, n_features=X.shape[1], hyperparams=hp, params=params)


def _fit_linear(X, y, hp, rng_seed):
    n = X.shape[0]
    A = np.hstack([np.ones((n, 1)), X])
    gram = A.T @ A
    ridge = hp.get("ridge", 0.0)
    try:
        if ridge:
            raise np.linalg.LinAlgError
        beta = np.linalg.solve(gram, A.T @ y)
    except np.linalg.LinAlgError:
        lam = ridge if ridge else 1e-8
        beta = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), A.T @ y)
    return {"intercept": float(beta[0]), "coefs": beta[1:]}


def _fit_forest(X, y, hp, rng_seed):
    n_trees = int(hp["n_trees"])
    if n_trees < 1:
        raise ModelError("random forest needs at least one tree")
    rng = np.random.default_rng(rng_seed)
    n = len(y)
    max_features = hp.get("max_features")
    trees = []
    for _ in range(n_trees):
        idx = rng.integers(0, n, size=n)  # bootstrap resample
        trees.append(
            fit_tree(
                X[idx],
                y[idx],
                max_depth=int(hp["max_depth"]),
                rng=rng,
                max_features=max_features,
            )
        )
    return {"trees": trees}


def _fit_boost(X, y, hp, rng_seed):
    stages = int(hp["n_stages"])
    lr = float(hp["learning_rate"])
    if stages < 1:
        raise ModelError("gradient boosting needs at least one stage")
    if not 0 < lr <= 1:
        raise ModelError("learning rate must be in (0, 1]")
    init = float(y.mean())
    pred = np.full(len(y), init)
    learners = []
    for _ in range(stages):
        residual = y - pred
        tree = fit_tree(X, residual, max_depth=int(hp["max_depth"]))
        learners.append(tree)
        pred = pred + lr * np.array([predict_tree(tree, row) for row in X])
    return {"init": init, "learning_rate": lr, "stages": learners}


def _mlp_forward(w1, b1, w2, b2, X):
    h = _sigmoid(X @ w1.T + b1)
    return h @ w2 + b2, h


def mlp_loss_and_grads(w1, b1, w2, b2, X, y):
    """Mean squared error and its analytic gradients for the 1-hidden-layer
    sigmoid network. Shared with the finite-difference gradient check."""
    n = len(y)
    yhat, h = _mlp_forward(w1, b1, w2, b2, X)
    err = yhat - y
    loss = float((err**2).mean())
    dy = 2.0 * err / n
    gw2 = h.T @ dy
    gb2 = float(dy.sum())
    dh = np.outer(dy, w2) * h * (1 - h)
    gw1 = dh.T @ X
    gb1 = dh.sum(axis=0)
    return loss, gw1, gb1, gw2, gb2


def _fit_mlp(X, y, hp, rng_seed):
    width = int(hp["hidden_width"])
    epochs = int(hp["epochs"])
    step = float(hp["step_size"])
    if width < 1 or epochs < 1 or step <= 0:
        raise ModelError("degenerate MLP hyperparameters")
    rng = np.random.default_rng(rng_seed)
    n_features = X.shape[1]
    w1 = rng.normal(0, 0.5, size=(width, n_features))
    b1 = rng.normal(0, 0.5, size=width)
    # zero output weights: the net starts at the target mean, which it fits
    # exactly for constant targets
    w2 = np.zeros(width)
    b2 = float(y.mean())
    for _ in range(epochs):
        _, gw1, gb1, gw2, gb2 = mlp_loss_and_grads(w1, b1, w2, b2, X, y)
        w1 -= step * gw1
        b1 -= step * gb1
        w2 -= step * gw2
        b2 -= step * gb2
    return {"w1": w1, "b1": b1, "w2": w2, "b2": float(b2)}


def load_training_data(path):
    """Read a training file: every column but the last is a feature, the
    last is the target. Returns (X, y, feature_names)."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ModelError(f"training file {path} has no rows")
    arr = np.array(rows)
    return arr[:, :-1], arr[:, -1], header[:-1]


_FITTERS = {
    "linear": _fit_linear,
    "random_forest": _fit_forest,
    "gradient_boost": _fit_boost,
    "mlp": _fit_mlp,
}
