"""Label-free marginal-utility estimation with a confidence gate.

At bid time the true label is unknown. When the model's predictive entropy
is low enough, the per-label hypothetical gradients are computed (exactly,
or via a zeroth-order two-point scheme) and the smaller-norm one is used to
price the impression against the coverage objective; otherwise a fixed
exploration utility is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .coverage import CoverageState
from .model import LogisticModel, log_loss, predict


@dataclass
class GradEstConfig:
    mode: str = "analytical"  # "analytical" or "zeroth_order"
    entropy_threshold: float = 0.3  # zeta, in bits
    exploration_utility: float = 1.0  # u_bar, used when the gate is open
    zo_mu: float = 0.01
    zo_dirs: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("analytical", "zeroth_order"):
            raise ValueError("mode must be 'analytical' or 'zeroth_order'")
        if not 0.0 <= self.entropy_threshold <= 1.0:
            raise ValueError("entropy_threshold must lie in [0, 1] bits")
        if self.exploration_utility < 0:
            raise ValueError("exploration_utility must be non-negative")
        if self.zo_mu <= 0:
            raise ValueError("zo_mu must be positive")
        if self.zo_dirs < 1:
            raise ValueError("zo_dirs must be at least 1")


@dataclass
class GradEstimate:
    gradient: Optional[np.ndarray]  # None on the exploration path
    utility: float
    pctr: float
    entropy: float
    provenance: str  # analytical | zeroth_order | exploration


def binary_entropy(p: float) -> float:
    """Entropy of Bernoulli(p) in bits, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return float(-(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p)))


def hypothetical_gradients(model: LogisticModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-label log-loss gradients (g0, g1) = (sigma x, (sigma - 1) x)."""
    x = np.asarray(x, dtype=np.float64)
    p = predict(model, x)
    return p * x, (p - 1.0) * x


def norm_select(g0: np.ndarray, g1: np.ndarray) -> Tuple[np.ndarray, int]:
    """Pick the smaller-L2-norm hypothetical gradient; ties go to g0.

    Returns (gradient, picked_label).
    """
    n0 = float(np.linalg.norm(g0))
    n1 = float(np.linalg.norm(g1))
    return (g0, 0) if n0 <= n1 else (g1, 1)


def zo_gradient(
    loss_eval: Callable[[np.ndarray], float],
    theta: np.ndarray,
    mu: float,
    n_dirs: int,
    seed=0,
) -> np.ndarray:
    """Two-point Gaussian-direction gradient estimate of a black-box loss.

    ghat = mean_i (L(theta + mu u_i) - L(theta - mu u_i)) / (2 mu) * u_i
    with u_i iid standard normal; deterministic given the seed.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if n_dirs < 1:
        raise ValueError("n_dirs must be at least 1")
    theta = np.asarray(theta, dtype=np.float64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dirs = rng.standard_normal((n_dirs, theta.shape[0]))
    est = np.zeros_like(theta)
    for u in dirs:
        plus = loss_eval(theta + mu * u)
        minus = loss_eval(theta - mu * u)
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise ValueError("loss_eval returned a non-finite value")
        est += (plus - minus) / (2.0 * mu) * u
    return est / n_dirs


def pctr_weighted(g0: np.ndarray, g1: np.ndarray, p: float) -> np.ndarray:
    """Expected gradient under the model's own label distribution."""
    return p * np.asarray(g1, dtype=np.float64) + (1.0 - p) * np.asarray(g0, dtype=np.float64)


def random_guess(g0: np.ndarray, g1: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return g1 if rng.random() < 0.5 else g0


def random_unit(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d)
    n = np.linalg.norm(v)
    while n == 0.0:
        v = rng.standard_normal(d)
        n = np.linalg.norm(v)
    return v / n


def _zo_pair(model: LogisticModel, x: np.ndarray, cfg: GradEstConfig, rng) -> Tuple[np.ndarray, np.ndarray]:
    """ZO estimates of both hypothetical gradients, sharing directions."""
    x = np.asarray(x, dtype=np.float64)
    dirs_rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    dirs = dirs_rng.standard_normal((cfg.zo_dirs, model.dim))
    out = []
    for y in (0, 1):
        est = np.zeros(model.dim)
        for u in dirs:
            plus = log_loss(predict(LogisticModel(model.weights + cfg.zo_mu * u), x), y)
            minus = log_loss(predict(LogisticModel(model.weights - cfg.zo_mu * u), x), y)
            est += (plus - minus) / (2.0 * cfg.zo_mu) * u
        out.append(est / cfg.zo_dirs)
    return out[0], out[1]


def estimate_marginal_utility(
    model: LogisticModel,
    x: np.ndarray,
    state: CoverageState,
    cfg: GradEstConfig,
    index: int = 0,
) -> GradEstimate:
    """Confidence-gated utility of an unlabeled impression.

    High-entropy impressions get the fixed exploration utility and no
    gradient. Otherwise the smaller-norm hypothetical gradient (exact or
    zeroth-order) prices the impression via the coverage marginal gain.
    The ZO stream is keyed by (cfg.seed, index) so campaigns replay exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    p = predict(model, x)
    h = binary_entropy(p)
    if h > cfg.entropy_threshold:
        return GradEstimate(gradient=None, utility=cfg.exploration_utility,
                            pctr=p, entropy=h, provenance="exploration")
    if cfg.mode == "analytical":
        g0, g1 = hypothetical_gradients(model, x)
    else:
        rng = np.random.default_rng((cfg.seed, index))
        g0, g1 = _zo_pair(model, x, cfg, rng)
    ghat, _ = norm_select(g0, g1)
    return GradEstimate(gradient=ghat, utility=state.marginal_gain(ghat, p),
                        pctr=p, entropy=h, provenance=cfg.mode)


def cosine_similarity(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Cosine of the angle between estimate and truth.

    A zero-norm estimate is scored 0 (no alignment); callers must exclude
    zero-norm truths before asking.
    """
    nt = float(np.linalg.norm(truth))
    if nt == 0.0:
        raise ValueError("truth gradient has zero norm")
    ne = float(np.linalg.norm(estimate))
    if ne == 0.0:
        return 0.0
    if np.array_equal(estimate, truth):
        # Identical vectors are exactly aligned; skip the rounding in
        # dot/(norm*norm), which can land 1 ulp off 1.0.
        return 1.0
    c = float(np.dot(estimate, truth) / (ne * nt))
    return min(1.0, max(-1.0, c))


@dataclass
class AccuracyReport:
    mean_cosine: Optional[float]  # None when every truth had zero norm
    mean_l2: float
    n_zero_truth: int


def estimator_accuracy(estimates: np.ndarray, truths: np.ndarray) -> AccuracyReport:
    """Mean cosine (zero-norm truths excluded but counted) and mean L2 error."""
    estimates = np.asarray(estimates, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if estimates.shape != truths.shape:
        raise ValueError("estimates and truths must have matching shapes")
    l2 = float(np.mean(np.linalg.norm(estimates - truths, axis=1)))
    cosines = []
    n_zero = 0
    for e, t in zip(estimates, truths):
        if np.linalg.norm(t) == 0.0:
            n_zero += 1
            continue
        cosines.append(cosine_similarity(e, t))
    mean_cos = float(np.mean(cosines)) if cosines else None
    return AccuracyReport(mean_cosine=mean_cos, mean_l2=l2, n_zero_truth=n_zero)
