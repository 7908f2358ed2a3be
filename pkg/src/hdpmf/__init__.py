"""Heterogeneous differentially private matrix factorization (HDPMF).

A library and experiment CLI for privacy-weighted matrix factorization
against an untrusted recommender: ratings are stretched by per-user,
per-item privacy weights on simulated user devices, item gradients are
perturbed by once-per-run Laplace noise assembled from per-device shares,
and predictions are rescaled back to the rating scale. Includes the plain
MF / uniform-noise / sample-mechanism baselines and a multi-seed
evaluation harness.
"""

from .baselines import (
    BaselineKind,
    min_observed_budget,
    pdp_sample_ratings,
    run_dpmf,
    run_mf,
    run_pdpmf,
)
from .config import ExperimentConfig, parse_config
from .data import (
    RatingDataset,
    SplitPlan,
    kfold_splits,
    load_csv,
    load_movielens_100k,
    load_movielens_1m,
    split_leave_n_out,
    split_leave_one_out,
    subsample_per_user,
)
from .diagnostics import NoiseCheckReport, check_noise_composition
from .evaluation import (
    ExperimentResult,
    emit_results,
    grid_search_cv,
    mae,
    mse,
    paired_t_test,
    run_experiment,
)
from .exceptions import (
    ConfigError,
    DivergedRunError,
    HdpmfError,
    ParseError,
    ProtocolError,
)
from .kernels import backend_name
from .model import (
    FactorModel,
    TrainConfig,
    init_model,
    item_gradient,
    learning_rate,
    predict_raw,
    private_objective,
    project_unit_ball,
    user_gradient,
)
from .privacy import (
    NoisePlan,
    PrivacySpec,
    WeightAssignment,
    allocate_weights,
    build_noise_plan,
    laplace_scale,
    personalized_budget,
    rescale_prediction,
    sample_laplace,
    stretch,
    weight,
)
from .protocol import (
    GradientMessage,
    MessageChannel,
    RecommenderState,
    UserDevice,
    device_emit_gradient,
    device_update_user,
    predict_all,
    recommender_update_item,
    run_hdpmf,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineKind",
    "ConfigError",
    "DivergedRunError",
    "ExperimentConfig",
    "ExperimentResult",
    "FactorModel",
    "GradientMessage",
    "HdpmfError",
    "MessageChannel",
    "NoiseCheckReport",
    "NoisePlan",
    "ParseError",
    "PrivacySpec",
    "ProtocolError",
    "RatingDataset",
    "RecommenderState",
    "SplitPlan",
    "TrainConfig",
    "UserDevice",
    "WeightAssignment",
    "allocate_weights",
    "backend_name",
    "build_noise_plan",
    "check_noise_composition",
    "device_emit_gradient",
    "device_update_user",
    "emit_results",
    "grid_search_cv",
    "init_model",
    "item_gradient",
    "kfold_splits",
    "laplace_scale",
    "learning_rate",
    "load_csv",
    "load_movielens_100k",
    "load_movielens_1m",
    "mae",
    "min_observed_budget",
    "mse",
    "paired_t_test",
    "parse_config",
    "pdp_sample_ratings",
    "personalized_budget",
    "predict_all",
    "predict_raw",
    "private_objective",
    "project_unit_ball",
    "recommender_update_item",
    "rescale_prediction",
    "run_dpmf",
    "run_experiment",
    "run_hdpmf",
    "run_mf",
    "run_pdpmf",
    "sample_laplace",
    "split_leave_n_out",
    "split_leave_one_out",
    "stretch",
    "subsample_per_user",
    "user_gradient",
    "weight",
]
