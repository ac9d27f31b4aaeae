"""Gradient-coverage objective and Fisher-information selection utilities.

The coverage of a selected set S against a validation gradient bank is
U(S) = sum_x max_{z in S} exp(-lambda ||g_x - g_z||^2), combined with a
predicted-value term V(S) = sum of committed pCTRs into
F(S) = (1 - beta) U(S) + beta V(S).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np


@dataclass
class GradientBank:
    """Validation gradients, one per row, frozen at a model anchor."""

    grads: np.ndarray  # (k, d)
    anchor_id: str = "anchor"

    def __post_init__(self):
        self.grads = np.asarray(self.grads, dtype=np.float64)
        if self.grads.ndim != 2:
            raise ValueError("gradient bank must be a 2-d array")

    @property
    def k(self) -> int:
        return self.grads.shape[0]

    @property
    def dim(self) -> int:
        return self.grads.shape[1]


def kernel_to_bank(bank_grads: np.ndarray, g: np.ndarray, kernel_lambda: float) -> np.ndarray:
    """exp(-lambda ||g_x - g||^2) for every bank row g_x."""
    diff = bank_grads - np.asarray(g, dtype=np.float64)[None, :]
    return np.exp(-kernel_lambda * np.einsum("ij,ij->i", diff, diff))


def kernel_matrix(rows: np.ndarray, bank_grads: np.ndarray, kernel_lambda: float) -> np.ndarray:
    """Pairwise kernel, shape (len(rows), k)."""
    rows = np.asarray(rows, dtype=np.float64)
    sq = (
        np.sum(rows * rows, axis=1)[:, None]
        + np.sum(bank_grads * bank_grads, axis=1)[None, :]
        - 2.0 * rows @ bank_grads.T
    )
    return np.exp(-kernel_lambda * np.maximum(sq, 0.0))


@dataclass
class CoverageValue:
    U: float
    V: float
    F: float


class CoverageState:
    """Incremental evaluator of the composite objective.

    Keeps the per-validation-point kernel maxima so marginal gains and
    commits cost O(k d). Single-owner mutable: commit is not reentrant.
    """

    def __init__(
        self,
        bank: GradientBank,
        kernel_lambda: float,
        beta: float,
        coverage_scale: float = 1.0,
    ):
        if kernel_lambda <= 0:
            raise ValueError("kernel_lambda must be positive")
        if not 0.0 <= beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if coverage_scale <= 0:
            raise ValueError("coverage_scale must be positive")
        self.bank = bank
        self.kernel_lambda = float(kernel_lambda)
        self.beta = float(beta)
        # Rescales the coverage term of marginal gains; 1/bank-size turns the
        # raw sum into a coverage fraction so bid-time deltas share the pCTR
        # scale. Reported values() stay raw.
        self.coverage_scale = float(coverage_scale)
        self.maxima = np.zeros(bank.k)  # running max kernel per validation point
        self.value_sum = 0.0
        self.selected_count = 0

    def clone(self) -> "CoverageState":
        other = CoverageState(self.bank, self.kernel_lambda, self.beta, self.coverage_scale)
        other.maxima = self.maxima.copy()
        other.value_sum = self.value_sum
        other.selected_count = self.selected_count
        return other

    def marginal_gain(self, gradient: np.ndarray, pctr: float) -> float:
        """F(S + {z}) - F(S); read-only, always >= 0 for pctr >= 0."""
        k = kernel_to_bank(self.bank.grads, gradient, self.kernel_lambda)
        du = float(np.sum(np.maximum(k - self.maxima, 0.0)))
        return (1.0 - self.beta) * self.coverage_scale * du + self.beta * float(pctr)

    def commit(self, gradient: np.ndarray, pctr: float) -> "CoverageState":
        k = kernel_to_bank(self.bank.grads, gradient, self.kernel_lambda)
        np.maximum(self.maxima, k, out=self.maxima)
        self.value_sum += float(pctr)
        self.selected_count += 1
        return self

    def values(self) -> CoverageValue:
        u = float(np.sum(self.maxima))
        v = self.value_sum
        return CoverageValue(U=u, V=v, F=(1.0 - self.beta) * u + self.beta * v)


def coverage_value_scratch(
    bank: GradientBank,
    selected_grads: Sequence[np.ndarray],
    pctrs: Sequence[float],
    kernel_lambda: float,
    beta: float,
) -> CoverageValue:
    """From-scratch evaluation of (U, V, F); oracle for the incremental path."""
    if len(selected_grads) == 0:
        return CoverageValue(U=0.0, V=0.0, F=0.0)
    km = kernel_matrix(np.asarray(selected_grads), bank.grads, kernel_lambda)
    u = float(np.sum(np.max(km, axis=0)))
    v = float(np.sum(np.asarray(pctrs, dtype=np.float64)))
    return CoverageValue(U=u, V=v, F=(1.0 - beta) * u + beta * v)


def greedy_select(
    bank: GradientBank,
    cand_grads: np.ndarray,
    cand_pctrs: Optional[np.ndarray] = None,
    budget_count: int = 0,
    mode: str = "surrogate",
    *,
    kernel_lambda: float = 0.1,
    beta: float = 0.0,
    gamma: float = 1.0,
    seed: int = 0,
) -> List[int]:
    """Select budget_count candidate indices.

    surrogate: greedy argmax of the composite marginal gain (ties -> lowest
    index). fim_oracle: greedy argmin of the ridged Fisher uncertainty
    G_gamma(S + {z}) via rank-one inverse updates. random: seeded uniform
    draw without replacement, in draw order.
    """
    cand_grads = np.asarray(cand_grads, dtype=np.float64)
    n = cand_grads.shape[0]
    if budget_count < 0 or budget_count > n:
        raise ValueError("budget_count must lie in [0, number of candidates]")
    if cand_pctrs is None:
        cand_pctrs = np.zeros(n)
    cand_pctrs = np.asarray(cand_pctrs, dtype=np.float64)

    if mode == "random":
        rng = np.random.default_rng(seed)
        return [int(i) for i in rng.choice(n, size=budget_count, replace=False)]

    if mode == "surrogate":
        km = kernel_matrix(cand_grads, bank.grads, kernel_lambda)  # (n, k)
        maxima = np.zeros(bank.k)
        taken = np.zeros(n, dtype=bool)
        picks: List[int] = []
        for _ in range(budget_count):
            gains = (1.0 - beta) * np.sum(np.maximum(km - maxima[None, :], 0.0), axis=1)
            gains = gains + beta * cand_pctrs
            gains[taken] = -np.inf
            pick = int(np.argmax(gains))
            taken[pick] = True
            picks.append(pick)
            np.maximum(maxima, km[pick], out=maxima)
        return picks

    if mode == "fim_oracle":
        d = bank.dim
        inv = np.eye(d) / gamma  # inverse of gamma I, grows by rank-one updates
        taken = np.zeros(n, dtype=bool)
        picks = []
        for _ in range(budget_count):
            w = cand_grads @ inv  # (n, d); inv is symmetric
            denom = 1.0 + np.einsum("ij,ij->i", w, cand_grads)
            proj = bank.grads @ w.T  # (k, n)
            reduction = np.einsum("ij,ij->j", proj, proj) / denom
            reduction[taken] = -np.inf
            pick = int(np.argmax(reduction))
            taken[pick] = True
            picks.append(pick)
            wp = w[pick]
            inv = inv - np.outer(wp, wp) / denom[pick]
        return picks

    raise ValueError(f"unknown selection mode {mode!r}")


def fisher_uncertainty(bank: GradientBank, selected_grads: np.ndarray, gamma: float) -> float:
    """G_gamma(S) = sum_x g_x^T (sum_z g_z g_z^T + gamma I)^{-1} g_x."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    selected_grads = np.asarray(selected_grads, dtype=np.float64)
    d = bank.dim
    info = gamma * np.eye(d)
    if selected_grads.size:
        info = info + selected_grads.T @ selected_grads
    solved = np.linalg.solve(info, bank.grads.T)  # (d, k)
    return float(np.einsum("ij,ji->i", bank.grads, solved).sum())


@dataclass
class FisherConfig:
    gamma: float = 1.0
    tau: Optional[float] = None  # None -> min selected norm squared
    grad_bound_L: Optional[float] = None  # override for the norm ceiling
    grad_floor_m: Optional[float] = None  # override for the selected-norm floor

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass
class Theorem1Report:
    lhs: float
    rhs: float
    holds: Optional[bool]  # None when the norm-floor assumption is violated
    L: float
    m: float
    tau: float
    skipped_reason: Optional[str] = None


def theorem1_bound(
    bank: GradientBank,
    selected_grads: np.ndarray,
    cfg: FisherConfig,
    kernel_lambda: float,
) -> Theorem1Report:
    """Certificate relating coverage to ridged Fisher uncertainty.

    G_gamma(S) <= k L^2/gamma
                  - (2 m^2 - tau)^2 / (4 gamma^2 (1 + L^2/gamma))
                    * (U(S) - k e^{-lambda tau}) / (1 - e^{-lambda tau})
    with L a ceiling on every gradient norm (bank and selected), m a floor
    on selected norms, and tau in (0, 2 m^2].
    """
    selected_grads = np.asarray(selected_grads, dtype=np.float64)
    if selected_grads.ndim != 2 or selected_grads.shape[0] == 0:
        raise ValueError("selected set must be a non-empty 2-d array")
    if kernel_lambda <= 0:
        raise ValueError("kernel_lambda must be positive")

    bank_norms = np.linalg.norm(bank.grads, axis=1)
    sel_norms = np.linalg.norm(selected_grads, axis=1)
    L_obs = float(max(bank_norms.max(initial=0.0), sel_norms.max(initial=0.0)))
    m_obs = float(sel_norms.min())

    gamma = cfg.gamma
    lhs = fisher_uncertainty(bank, selected_grads, gamma)

    if m_obs == 0.0:
        return Theorem1Report(
            lhs=lhs, rhs=float("nan"), holds=None, L=L_obs, m=0.0,
            tau=float("nan"), skipped_reason="zero-norm selected gradient",
        )

    L = L_obs if cfg.grad_bound_L is None else float(cfg.grad_bound_L)
    if L < L_obs:
        raise ValueError("grad_bound_L is below an observed gradient norm")
    m = m_obs if cfg.grad_floor_m is None else float(cfg.grad_floor_m)
    if m > m_obs:
        raise ValueError("grad_floor_m exceeds an observed selected norm")
    if m <= 0:
        raise ValueError("grad_floor_m must be positive")

    tau = m * m if cfg.tau is None else float(cfg.tau)
    if not 0.0 < tau <= 2.0 * m * m:
        raise ValueError("tau must lie in (0, 2 m^2]")

    km = kernel_matrix(selected_grads, bank.grads, kernel_lambda)
    u = float(np.sum(np.max(km, axis=0)))
    k = bank.k
    decay = np.exp(-kernel_lambda * tau)
    covered_lb = (u - k * decay) / (1.0 - decay)
    coeff = (2.0 * m * m - tau) ** 2 / (4.0 * gamma * gamma * (1.0 + L * L / gamma))
    rhs = k * L * L / gamma - coeff * covered_lb
    return Theorem1Report(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + 1e-9), L=L, m=m, tau=tau)
