"""Naive Bayes mode choice: mode posterior proportional to the prior times
the product of per-feature conditional likelihoods, computed in log space
with max-shift normalization."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

NB_FORMAT_VERSION = 1

DEFAULT_MODES = ("transit", "drive", "walk")


class ModeChoiceError(ValueError):
    pass


@dataclass
class NBModel:
    modes: list  # declared order; argmax ties break by this order
    priors: np.ndarray  # (n_modes,)
    likelihoods: np.ndarray  # (n_features, n_values, n_modes)
    alpha: float

    @property
    def n_features(self) -> int:
        return self.likelihoods.shape[0]

    def posterior(self, x) -> np.ndarray:
        """P(mode | features), normalized to sum to 1."""
        x = np.asarray(x, dtype=int)
        if x.shape != (self.n_features,):
            raise ModeChoiceError(
                f"feature vector has length {x.size}, model expects {self.n_features}"
            )
        with np.errstate(divide="ignore"):
            log_scores = np.log(self.priors)
            for i, v in enumerate(x):
                log_scores = log_scores + np.log(self.likelihoods[i, v])
        if np.all(np.isinf(log_scores)):
            # every mode has a zero factor; fall back to uniform
            return np.full(len(self.modes), 1.0 / len(self.modes))
        shifted = np.exp(log_scores - log_scores.max())
        return shifted / shifted.sum()

    def predict(self, x) -> str:
        """Mode with the highest posterior; ties break by declared order."""
        post = self.posterior(x)
        return self.modes[int(np.argmax(post))]

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": NB_FORMAT_VERSION,
                "modes": list(self.modes),
                "priors": self.priors.tolist(),
                "likelihoods": self.likelihoods.tolist(),
                "alpha": self.alpha,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "NBModel":
        d = json.loads(text)
        if d.get("format_version") != NB_FORMAT_VERSION:
            raise ModeChoiceError(
                f"unsupported mode model format version {d.get('format_version')}"
            )
        return cls(
            modes=list(d["modes"]),
            priors=np.asarray(d["priors"], dtype=float),
            likelihoods=np.asarray(d["likelihoods"], dtype=float),
            alpha=float(d["alpha"]),
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NBModel":
        with open(path) as fh:
            return cls.from_json(fh.read())


def fit_nb(X, labels, modes=None, alpha: float = 1.0, n_values: int = 2) -> NBModel:
    """Counting fit with Laplace smoothing.

    priors = (count(mode) + alpha) / (N + alpha * n_modes)
    P(feature_i = v | mode) = (count(i=v, mode) + alpha)
                              / (count(mode) + alpha * n_values)
    """
    X = np.asarray(X, dtype=int)
    labels = list(labels)
    if X.ndim != 2 or len(X) == 0:
        raise ModeChoiceError("training set is empty")
    if len(labels) != len(X):
        raise ModeChoiceError("features and labels differ in length")
    if alpha < 0:
        raise ModeChoiceError("smoothing alpha must be >= 0")
    if modes is None:
        modes = list(DEFAULT_MODES)
    mode_idx = {m: k for k, m in enumerate(modes)}
    for lab in labels:
        if lab not in mode_idx:
            raise ModeChoiceError(f"unknown mode label {lab!r}")

    n, n_features = X.shape
    n_modes = len(modes)
    mode_counts = np.zeros(n_modes)
    feat_counts = np.zeros((n_features, n_values, n_modes))
    for row, lab in zip(X, labels):
        k = mode_idx[lab]
        mode_counts[k] += 1
        for i, v in enumerate(row):
            feat_counts[i, v, k] += 1

    priors = (mode_counts + alpha) / (n + alpha * n_modes)
    denom = mode_counts[None, None, :] + alpha * n_values
    with np.errstate(invalid="ignore"):
        likelihoods = np.where(denom > 0, (feat_counts + alpha) / denom, 0.0)
    return NBModel(modes=list(modes), priors=priors, likelihoods=likelihoods, alpha=alpha)


def load_mode_training(path, feature_names) -> tuple:
    X, labels = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            X.append([int(row[f]) for f in feature_names])
            labels.append(row["mode"])
    if not X:
        raise ModeChoiceError(f"mode training file {path} has no rows")
    return np.array(X, dtype=int), labels
