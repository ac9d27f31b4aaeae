"""Budget pacing via multiplicative dual updates, plus optimal bid rules.

The dual price lambda scales the cost term in the per-auction surplus
W(b) (delta - lambda b). A period update compares realized cumulative cost
to a linear spend schedule; a per-win update reacts to each payment and
telescopes exactly: sum of payments = (B / eta) ln(lambda_T / lambda_0)
while the ceiling clamp stays inactive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

DEFAULT_LAMBDA_MIN = 1e-6
DEFAULT_LAMBDA_MAX = 100.0

# math.exp overflows past ~709.8; the dual is clamped anyway, so cap the
# exponent instead of raising on pathological pacing gaps.
_EXP_CAP = 700.0


@dataclass
class PacingController:
    budget: float
    eta: float
    lambda0: float = 0.01
    lambda_min: float = DEFAULT_LAMBDA_MIN
    lambda_max: float = DEFAULT_LAMBDA_MAX
    period_len: int = 100
    total_periods: int = 1
    dual_lambda: float = field(init=False)
    spent: float = field(init=False, default=0.0)
    period_index: int = field(init=False, default=0)

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if not 0 < self.lambda_min <= self.lambda0 <= self.lambda_max:
            raise ValueError("need 0 < lambda_min <= lambda0 <= lambda_max")
        if self.period_len < 1 or self.total_periods < 1:
            raise ValueError("period_len and total_periods must be at least 1")
        self.dual_lambda = float(self.lambda0)

    def paced_budget(self, k: int) -> float:
        """Target cumulative spend after k of total_periods periods."""
        if not 0 <= k <= self.total_periods:
            raise ValueError("period index out of range")
        return self.budget * k / self.total_periods

    @property
    def remaining(self) -> float:
        return self.budget - self.spent

    def record_spend(self, amount: float) -> None:
        if amount < 0:
            raise ValueError("spend must be non-negative")
        self.spent += amount

    def update_dual_period(self, realized_cost_so_far: float) -> float:
        """Close the current period against the linear schedule.

        lambda <- clamp(lambda * exp(eta (cost - paced) / budget)); raises
        once every period has been closed.
        """
        if self.period_index >= self.total_periods:
            raise ValueError("all periods already closed")
        done = self.period_index + 1
        gap = realized_cost_so_far - self.paced_budget(done)
        lam = self.dual_lambda * math.exp(min(self.eta * gap / self.budget, _EXP_CAP))
        self.dual_lambda = min(max(lam, self.lambda_min), self.lambda_max)
        self.period_index = done
        return self.dual_lambda

    def update_dual_perwin(self, payment: float) -> float:
        """React to one realized payment; only the ceiling clamp applies."""
        if payment < 0:
            raise ValueError("payment must be non-negative")
        lam = self.dual_lambda * math.exp(min(self.eta * payment / self.budget, _EXP_CAP))
        self.dual_lambda = min(lam, self.lambda_max)
        return self.dual_lambda

    def state_dict(self) -> dict:
        return {
            "lambda": self.dual_lambda,
            "eta": self.eta,
            "budget": self.budget,
            "spent": self.spent,
            "period_index": self.period_index,
        }

    def to_json(self) -> str:
        return json.dumps(self.state_dict(), sort_keys=True)

    def restore_state(self, state: dict) -> None:
        """Load a state_dict snapshot; structural fields must already match."""
        for key in ("lambda", "eta", "budget", "spent", "period_index"):
            if key not in state:
                raise ValueError(f"missing key {key!r} in controller state")
        if state["eta"] != self.eta or state["budget"] != self.budget:
            raise ValueError("snapshot does not match this controller")
        self.dual_lambda = float(state["lambda"])
        self.spent = float(state["spent"])
        self.period_index = int(state["period_index"])


@dataclass
class WinCurve:
    """Win probability as a function of the submitted amount."""

    prob: Callable[[np.ndarray], np.ndarray]
    b_max: float

    def __post_init__(self):
        if self.b_max <= 0:
            raise ValueError("b_max must be positive")


@dataclass
class UniformWinCurve:
    """Single competitor drawn uniformly from [lo, hi]; ties lose."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise ValueError("need 0 <= lo < hi")

    @property
    def b_max(self) -> float:
        return self.hi

    def prob(self, b):
        return np.clip((np.asarray(b, dtype=np.float64) - self.lo) / (self.hi - self.lo), 0.0, 1.0)


def optimal_bid_fpa(delta: float, dual_lambda: float, curve, grid_step: Optional[float] = None) -> float:
    """First-price bid maximizing W(b) (delta - lambda b); 0 when nothing profits.

    Uniform competitor curves are solved in closed form; anything else is a
    grid search over {0, step, ..., b_max} with step defaulting to 1e-4 b_max.
    """
    if dual_lambda <= 0:
        raise ValueError("dual_lambda must be positive")
    if delta <= 0:
        return 0.0
    if isinstance(curve, UniformWinCurve):
        if delta <= dual_lambda * curve.lo:
            return 0.0
        b = (curve.lo + delta / dual_lambda) / 2.0
        b = min(max(b, curve.lo), curve.hi)
        surplus = float(curve.prob(b)) * (delta - dual_lambda * b)
        return b if surplus > 0 else 0.0
    step = grid_step if grid_step is not None else 1e-4 * curve.b_max
    if step <= 0:
        raise ValueError("grid_step must be positive")
    grid = np.arange(0.0, curve.b_max + step / 2.0, step)
    surplus = np.asarray(curve.prob(grid)) * (delta - dual_lambda * grid)
    best = int(np.argmax(surplus))
    return float(grid[best]) if surplus[best] > 0 else 0.0


def optimal_bid_spa(delta: float, dual_lambda: float) -> float:
    """Second-price bid: truthful in the shaded value, max(delta / lambda, 0)."""
    if dual_lambda <= 0:
        raise ValueError("dual_lambda must be positive")
    return max(delta / dual_lambda, 0.0)


def recommended_eta(lambda_max: float, lambda0: float, horizon: int, cost_bound: float) -> float:
    """Step size sqrt(ln(lambda_max / lambda0) / T) / C for payments <= C."""
    if not 0 < lambda0 < lambda_max:
        raise ValueError("need 0 < lambda0 < lambda_max")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if cost_bound <= 0:
        raise ValueError("cost_bound must be positive")
    return math.sqrt(math.log(lambda_max / lambda0) / horizon) / cost_bound


def feasibility_slack(lambda_max: float, lambda0: float, eta: float) -> float:
    """ln(lambda_max / lambda0) / eta.

    Two spend guarantees for the per-win controller are phrased with this
    quantity: the additive form B + slack, and the telescoped product form
    B * slack (exact while the ceiling clamp stays inactive).
    """
    if not 0 < lambda0 <= lambda_max:
        raise ValueError("need 0 < lambda0 <= lambda_max")
    if eta <= 0:
        raise ValueError("eta must be positive")
    return math.log(lambda_max / lambda0) / eta
