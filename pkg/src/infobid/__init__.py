"""Information-aware auto-bidding: coverage objectives, confidence-gated
gradient estimation, dual pacing, and a full auction simulation harness."""

from .model import (
    Dataset,
    EvalResult,
    LogisticModel,
    SynthConfig,
    TrainConfig,
    auc_score,
    evaluate,
    generate_synthetic,
    load_csv,
    predict,
    save_csv,
    train,
)
from .coverage import (
    CoverageState,
    FisherConfig,
    GradientBank,
    coverage_value_scratch,
    fisher_uncertainty,
    greedy_select,
    theorem1_bound,
)
from .gradest import (
    GradEstConfig,
    GradEstimate,
    estimate_marginal_utility,
    estimator_accuracy,
    zo_gradient,
)
from .pacing import (
    PacingController,
    UniformWinCurve,
    WinCurve,
    feasibility_slack,
    optimal_bid_fpa,
    optimal_bid_spa,
    recommended_eta,
)
from .auction import (
    CampaignConfig,
    CampaignLog,
    Impression,
    Strategy,
    competitor_uniform,
    offline_opt_fractional,
    resolve,
    retrain_with_won,
    run_campaign,
)

__version__ = "0.1.0"
