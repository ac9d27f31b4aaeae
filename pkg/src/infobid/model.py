"""Logistic pCTR model, synthetic data generation, and dataset CSV serialization.

The predictor is intercept-free logistic regression: p = sigmoid(w . x).
Datasets are dense float matrices with an optional binary label column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

# Probabilities are clamped away from {0, 1} so log loss stays finite.
PROB_FLOOR = 1e-12

# 17 significant digits round-trip any float64 exactly.
FLOAT_FORMAT = "%.17g"


def format_real(v: float) -> str:
    return FLOAT_FORMAT % float(v)


@dataclass
class Dataset:
    """Feature matrix with an optional binary label vector.

    Row order is stable: the row index identifies a sample everywhere.
    """

    X: np.ndarray  # (n, d) float64
    y: Optional[np.ndarray] = None  # (n,) ints in {0, 1}, None when unlabeled

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("feature matrix must be 2-dimensional")
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.int64)
            if self.y.shape != (self.X.shape[0],):
                raise ValueError("label vector length must match sample count")
            if self.y.size and not np.isin(self.y, (0, 1)).all():
                raise ValueError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx], None if self.y is None else self.y[idx])


def concat(a: Dataset, b: Dataset) -> Dataset:
    """Stack two datasets; both must be labeled or both unlabeled."""
    if a.n == 0:
        return Dataset(b.X.copy(), None if b.y is None else b.y.copy())
    if b.n == 0:
        return Dataset(a.X.copy(), None if a.y is None else a.y.copy())
    if a.dim != b.dim:
        raise ValueError("dimension mismatch in concat")
    if (a.y is None) != (b.y is None):
        raise ValueError("cannot concat labeled with unlabeled data")
    y = None if a.y is None else np.concatenate([a.y, b.y])
    return Dataset(np.vstack([a.X, b.X]), y)


@dataclass
class LogisticModel:
    weights: np.ndarray  # (d,) float64

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1:
            raise ValueError("weights must be a vector")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 150
    batch_size: int = 64
    l2_reg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.l2_reg < 0:
            raise ValueError("l2_reg must be non-negative")


@dataclass
class SynthConfig:
    n: int = 2000
    d: int = 20
    separation: float = 2.0  # scale of the true weight vector
    label_noise: float = 0.1  # probability of flipping each label
    seed: int = 0

    def __post_init__(self):
        if self.n < 0 or self.d < 1:
            raise ValueError("n must be >= 0 and d >= 1")
        if self.separation < 0:
            raise ValueError("separation must be non-negative")
        if not 0 <= self.label_noise <= 1:
            raise ValueError("label_noise must lie in [0, 1]")


@dataclass
class EvalResult:
    auc: Optional[float]  # None when the dataset has a single class
    logloss: float


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_batch(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    """Clamped sigmoid scores for each row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.dim:
        raise ValueError("feature dimension does not match model")
    p = _stable_sigmoid(X @ model.weights)
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def predict(model: LogisticModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError("feature dimension does not match model")
    return float(predict_batch(model, x[None, :])[0])


def log_loss(p: float, y: int) -> float:
    """Binary cross entropy for a single prediction; p must be in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError("probability must lie strictly inside (0, 1)")
    if y not in (0, 1):
        raise ValueError("label must be 0 or 1")
    return float(-(y * np.log(p) + (1 - y) * np.log1p(-p)))


def loss_gradient(model: LogisticModel, x: np.ndarray, y: int) -> np.ndarray:
    """Exact per-sample log-loss gradient (sigma - y) * x."""
    p = predict(model, x)
    return (p - float(y)) * np.asarray(x, dtype=np.float64)


def loss_gradient_batch(model: LogisticModel, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample gradients stacked row-wise, (n, d)."""
    p = predict_batch(model, X)
    return (p - np.asarray(y, dtype=np.float64))[:, None] * np.asarray(X, dtype=np.float64)


def train(model: LogisticModel, data: Dataset, cfg: TrainConfig) -> LogisticModel:
    """Mini-batch gradient descent on mean log loss plus (l2_reg / 2) ||w||^2.

    Deterministic given cfg.seed; epochs = 0 returns the weights unchanged.
    """
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.y is None:
        raise ValueError("training data must be labeled")
    if data.dim != model.dim:
        raise ValueError("data dimension does not match model")
    w = model.weights.copy()
    rng = np.random.default_rng(cfg.seed)
    yf = data.y.astype(np.float64)
    for _ in range(cfg.epochs):
        perm = rng.permutation(data.n)
        for start in range(0, data.n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            Xb = data.X[idx]
            p = np.clip(_stable_sigmoid(Xb @ w), PROB_FLOOR, 1.0 - PROB_FLOOR)
            g = Xb.T @ (p - yf[idx]) / idx.size + cfg.l2_reg * w
            w -= cfg.learning_rate * g
    return LogisticModel(w)


def mean_log_loss(model: LogisticModel, data: Dataset) -> float:
    p = predict_batch(model, data.X)
    yf = data.y.astype(np.float64)
    return float(np.mean(-(yf * np.log(p) + (1 - yf) * np.log1p(-p))))


def auc_score(scores: np.ndarray, labels: np.ndarray) -> Optional[float]:
    """Rank-statistic AUC with average ranks for exactly tied scores.

    Returns None when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts)
    avg_rank = cum - (counts - 1) / 2.0  # mean of the 1-based ranks in each tie group
    ranks = avg_rank[inverse]
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate(model: LogisticModel, data: Dataset) -> EvalResult:
    """Test AUC and mean log loss; AUC is None for single-class data."""
    if data.n == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if data.y is None:
        raise ValueError("evaluation data must be labeled")
    scores = predict_batch(model, data.X)
    return EvalResult(auc=auc_score(scores, data.y), logloss=mean_log_loss(model, data))


def generate_synthetic(cfg: SynthConfig) -> Tuple[Dataset, np.ndarray]:
    """Gaussian features with Bernoulli labels from a planted weight vector.

    Returns (dataset, w_star) where w_star is a unit direction scaled by
    cfg.separation; labels are flipped independently with prob label_noise.
    """
    rng = np.random.default_rng(cfg.seed)
    direction = rng.standard_normal(cfg.d)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        direction = np.zeros(cfg.d)
        direction[0] = 1.0
        norm = 1.0
    w_star = cfg.separation * direction / norm
    X = rng.standard_normal((cfg.n, cfg.d))
    p = _stable_sigmoid(X @ w_star)
    y = (rng.random(cfg.n) < p).astype(np.int64)
    flips = rng.random(cfg.n) < cfg.label_noise
    y = np.where(flips, 1 - y, y)
    return Dataset(X, y), w_star


def save_csv(data: Dataset, path) -> None:
    """Headerless CSV: one row per sample, 17-significant-digit reals,
    plus a final integer label column when the dataset is labeled."""
    with open(path, "w") as fh:
        for i in range(data.n):
            cells = [format_real(v) for v in data.X[i]]
            if data.y is not None:
                cells.append(str(int(data.y[i])))
            fh.write(",".join(cells) + "\n")


def save_matrix_csv(matrix: np.ndarray, path) -> None:
    """Dense real matrix in the same headerless CSV dialect as datasets."""
    save_csv(Dataset(np.asarray(matrix, dtype=np.float64)), path)


def load_csv(path, has_label: bool) -> Dataset:
    """Parse a headerless CSV of reals, last column as a 0/1 label if has_label.

    Raises ValueError naming the 1-based row on any parse or shape problem.
    """
    rows = []
    labels = []
    dim = None
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if has_label:
                if len(cells) < 2:
                    raise ValueError(f"row {lineno}: expected features plus a label column")
                feat_cells, label_cell = cells[:-1], cells[-1]
                try:
                    label = int(label_cell)
                except ValueError:
                    raise ValueError(f"row {lineno}: label {label_cell!r} is not an integer")
                if label not in (0, 1):
                    raise ValueError(f"row {lineno}: label must be 0 or 1, got {label}")
                labels.append(label)
            else:
                feat_cells = cells
            try:
                feats = [float(c) for c in feat_cells]
            except ValueError:
                raise ValueError(f"row {lineno}: could not parse features as reals")
            if dim is None:
                dim = len(feats)
            elif len(feats) != dim:
                raise ValueError(f"row {lineno}: expected {dim} features, got {len(feats)}")
            rows.append(feats)
    if not rows:
        return Dataset(np.zeros((0, 0)), np.zeros(0, dtype=np.int64) if has_label else None)
    X = np.asarray(rows, dtype=np.float64)
    return Dataset(X, np.asarray(labels, dtype=np.int64) if has_label else None)
