"""Auction simulation: mechanisms, bidding strategies, and the campaign loop.

Impressions arrive as a fixed stream with exogenous market prices. The
bidder's ranking score is pctr * bid; first_price_cpm charges the score,
second_price charges the market price. True labels stay hidden until a win,
at which point the realized gradient is committed to the coverage state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .coverage import CoverageState, GradientBank
from .gradest import GradEstConfig, estimate_marginal_utility
from .model import Dataset, LogisticModel, TrainConfig, concat, format_real, loss_gradient, predict, train
from .pacing import PacingController, UniformWinCurve, optimal_bid_fpa, optimal_bid_spa

MECHANISMS = ("first_price_cpm", "second_price")

STRATEGY_KINDS = ("proposed", "value_only", "uncertainty_only", "uniform", "pctr_linear")

CAMPAIGN_LOG_HEADER = "t,bid,won,price_paid,delta,lambda,cum_spend,provenance"


@dataclass
class Impression:
    t: int
    x: np.ndarray
    true_label: int  # hidden from the bidder until the auction is won
    market_price: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.true_label not in (0, 1):
            raise ValueError("true_label must be 0 or 1")
        if self.market_price < 0:
            raise ValueError("market_price must be non-negative")


@dataclass
class Strategy:
    kind: str
    beta: Optional[float] = None  # proposed only
    c: Optional[float] = None  # uniform only: constant per-click bid
    m: Optional[float] = None  # pctr_linear only: bid = m * pctr

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "proposed":
            if self.beta is None or not 0.0 <= self.beta <= 1.0:
                raise ValueError("proposed strategy needs beta in [0, 1]")
        if self.kind == "uniform" and (self.c is None or self.c < 0):
            raise ValueError("uniform strategy needs c >= 0")
        if self.kind == "pctr_linear" and (self.m is None or self.m < 0):
            raise ValueError("pctr_linear strategy needs m >= 0")

    def effective_beta(self, default: float) -> float:
        """Composite-objective mix actually used by this strategy.

        value_only and uncertainty_only are exact aliases of proposed with
        beta pinned to 1 and 0; price-based baselines fall back to default
        (their bids ignore it, only the logged delta depends on it).
        """
        if self.kind == "proposed":
            return float(self.beta)
        if self.kind == "value_only":
            return 1.0
        if self.kind == "uncertainty_only":
            return 0.0
        return float(default)

    @property
    def paces(self) -> bool:
        return self.kind in ("proposed", "value_only", "uncertainty_only")


@dataclass
class LogRecord:
    t: int
    bid: float
    won: bool
    price_paid: float
    delta: float
    dual_lambda: float
    cum_spend: float
    provenance: str


@dataclass
class CampaignLog:
    records: List[LogRecord] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(CAMPAIGN_LOG_HEADER + "\n")
            for r in self.records:
                fh.write(
                    ",".join(
                        [
                            str(r.t),
                            format_real(r.bid),
                            str(int(r.won)),
                            format_real(r.price_paid),
                            format_real(r.delta),
                            format_real(r.dual_lambda),
                            format_real(r.cum_spend),
                            r.provenance,
                        ]
                    )
                    + "\n"
                )

    @property
    def total_spend(self) -> float:
        return self.records[-1].cum_spend if self.records else 0.0

    @property
    def won_delta_sum(self) -> float:
        return float(sum(r.delta for r in self.records if r.won))

    def check_consistency(self, budget: float) -> List[str]:
        """Internal invariants: cumulative-spend bookkeeping and hard budget
        safety (spend <= budget + max single payment). Returns violations."""
        problems = []
        cum = 0.0
        max_pay = 0.0
        for r in self.records:
            if not r.won and r.price_paid != 0.0:
                problems.append(f"t={r.t}: lost auction with nonzero payment")
            cum += r.price_paid
            max_pay = max(max_pay, r.price_paid)
            if abs(cum - r.cum_spend) > 1e-9:
                problems.append(f"t={r.t}: cum_spend drifts from summed payments")
                cum = r.cum_spend
        if self.records and self.total_spend > budget + max_pay + 1e-9:
            problems.append("total spend exceeds budget plus one payment")
        return problems


@dataclass
class CampaignConfig:
    budget: float
    mechanism: str = "first_price_cpm"
    beta: float = 0.5  # coverage mix used when the strategy has no beta of its own
    kernel_lambda: float = 0.1
    lambda0: float = 0.01
    eta: float = 0.1
    lambda_min: float = 1e-6
    lambda_max: float = 100.0
    period_len: int = 100
    dual_update: str = "period"  # "period" (schedule) or "perwin" (telescoping)
    market_p_max: float = 1.0  # score-space ceiling of the uniform market prior
    entropy_threshold: float = 0.3
    exploration_utility: float = 1.0
    estimator_mode: str = "analytical"
    zo_mu: float = 0.01
    zo_dirs: int = 5
    tie_wins: bool = False  # whether score == market price counts as a win
    seed: int = 0

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.dual_update not in ("period", "perwin"):
            raise ValueError("dual_update must be 'period' or 'perwin'")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.market_p_max <= 0:
            raise ValueError("market_p_max must be positive")

    def gradest_config(self) -> GradEstConfig:
        return GradEstConfig(
            mode=self.estimator_mode,
            entropy_threshold=self.entropy_threshold,
            exploration_utility=self.exploration_utility,
            zo_mu=self.zo_mu,
            zo_dirs=self.zo_dirs,
            seed=self.seed,
        )


def competitor_uniform(lo: float, hi: float, n: int, seed: int) -> np.ndarray:
    """Market price stream: n iid uniform draws from [lo, hi)."""
    if not 0 <= lo < hi:
        raise ValueError("need 0 <= lo < hi")
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random(n)


def build_stream(features: np.ndarray, labels: np.ndarray, prices: np.ndarray) -> List[Impression]:
    features = np.asarray(features, dtype=np.float64)
    if not len(features) == len(labels) == len(prices):
        raise ValueError("features, labels, and prices must have equal length")
    return [
        Impression(t=i, x=features[i], true_label=int(labels[i]), market_price=float(prices[i]))
        for i in range(len(features))
    ]


def resolve(mechanism: str, bid: float, pctr: float, market_price: float,
            tie_wins: bool = False) -> Tuple[bool, float]:
    """Outcome of one auction: (won, price_paid). Ranking score is pctr * bid."""
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    if bid < 0:
        raise ValueError("bid must be non-negative")
    score = pctr * bid
    if bid == 0.0:
        return False, 0.0
    won = score >= market_price if tie_wins else score > market_price
    if not won:
        return False, 0.0
    return True, score if mechanism == "first_price_cpm" else market_price


def strategy_bid(
    strategy: Strategy,
    pctr: float,
    delta: float,
    controller: PacingController,
    cfg: CampaignConfig,
) -> float:
    """Per-click bid for one impression; 0 once the budget is exhausted.

    Pacing strategies optimize the surplus in score (eCPM) space against the
    uniform market prior on [0, market_p_max] and convert back per click.
    """
    if controller.remaining <= 0:
        return 0.0
    if strategy.kind == "uniform":
        return float(strategy.c)
    if strategy.kind == "pctr_linear":
        return float(strategy.m) * pctr
    if cfg.mechanism == "first_price_cpm":
        curve = UniformWinCurve(0.0, cfg.market_p_max)
        score = optimal_bid_fpa(delta, controller.dual_lambda, curve)
    else:
        score = optimal_bid_spa(delta, controller.dual_lambda)
    return score / pctr


def run_campaign(
    stream: List[Impression],
    cfg: CampaignConfig,
    strategy: Strategy,
    model: LogisticModel,
    bank: GradientBank,
) -> Tuple[CampaignLog, Dataset]:
    """Run the full auction loop; returns the log and the labeled won set.

    Every auction logs the confidence-gated marginal-utility estimate, even
    for price-based baselines (their bids ignore it). Wins reveal the true
    label, commit the realized gradient to the coverage state, and spend
    budget; the bidder goes silent once spend reaches the budget, so spend
    can overshoot by at most one payment.
    """
    beta = strategy.effective_beta(cfg.beta)
    # Coverage enters bids as a fraction of the bank so the composite delta
    # shares the pCTR scale the price knobs are sized for.
    state = CoverageState(bank, cfg.kernel_lambda, beta, coverage_scale=1.0 / max(bank.k, 1))
    total_periods = max(1, -(-len(stream) // cfg.period_len))  # ceil
    controller = PacingController(
        budget=cfg.budget,
        eta=cfg.eta,
        lambda0=cfg.lambda0,
        lambda_min=cfg.lambda_min,
        lambda_max=cfg.lambda_max,
        period_len=cfg.period_len,
        total_periods=total_periods,
    )
    gradcfg = cfg.gradest_config()
    log = CampaignLog()
    won_x: List[np.ndarray] = []
    won_y: List[int] = []
    for imp in stream:
        est = estimate_marginal_utility(model, imp.x, state, gradcfg, index=imp.t)
        lam_at_bid = controller.dual_lambda
        bid = strategy_bid(strategy, est.pctr, est.utility, controller, cfg)
        won, paid = resolve(cfg.mechanism, bid, est.pctr, imp.market_price, cfg.tie_wins)
        if won:
            controller.record_spend(paid)
            if cfg.dual_update == "perwin":
                controller.update_dual_perwin(paid)
            g_true = loss_gradient(model, imp.x, imp.true_label)
            state.commit(g_true, est.pctr)
            won_x.append(imp.x)
            won_y.append(imp.true_label)
        log.records.append(
            LogRecord(
                t=imp.t,
                bid=bid,
                won=won,
                price_paid=paid,
                delta=est.utility,
                dual_lambda=lam_at_bid,
                cum_spend=controller.spent,
                provenance=est.provenance,
            )
        )
        if cfg.dual_update == "period" and (imp.t + 1) % cfg.period_len == 0 \
                and controller.period_index < controller.total_periods:
            controller.update_dual_period(controller.spent)
    won_set = (
        Dataset(np.asarray(won_x), np.asarray(won_y, dtype=np.int64))
        if won_x
        else Dataset(np.zeros((0, bank.dim)), np.zeros(0, dtype=np.int64))
    )
    return log, won_set


def retrain_with_won(initial: Dataset, won: Dataset, cfg: TrainConfig) -> LogisticModel:
    """Train a fresh zero-initialized model on initial plus won data."""
    data = concat(initial, won) if won.n else initial
    fresh = LogisticModel(np.zeros(data.dim))
    return train(fresh, data, cfg)


def offline_opt_fractional(deltas, prices, budget: float) -> float:
    """Fractional-knapsack optimum: greedy by delta / price, one split item.

    Non-positive deltas are never taken; a non-positive price with positive
    delta is a free win and is always taken.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    deltas = np.asarray(deltas, dtype=np.float64)
    prices = np.asarray(prices, dtype=np.float64)
    if deltas.shape != prices.shape:
        raise ValueError("deltas and prices must have equal length")
    total = 0.0
    free = (prices <= 0) & (deltas > 0)
    total += float(deltas[free].sum())
    mask = (prices > 0) & (deltas > 0)
    d, p = deltas[mask], prices[mask]
    order = np.argsort(-(d / p), kind="mergesort")
    remaining = float(budget)
    for i in order:
        if remaining <= 0:
            break
        if p[i] <= remaining:
            total += float(d[i])
            remaining -= float(p[i])
        else:
            total += float(d[i]) * remaining / float(p[i])
            remaining = 0.0
    return total
