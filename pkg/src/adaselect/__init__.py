"""Adaptive minibatch subsampling: pick the most informative samples per batch.

A pool of loss-based selection strategies scores every minibatch; an online
combiner blends their per-sample importance vectors with multiplicatively
updated trust weights and keeps the top fraction of samples for the backward
pass. Includes a minimal deterministic trainer, scikit-learn style
estimators, and a benchmark CLI.
"""

from .combiner import (
    AccumulationBuffer,
    AdaSelectConfig,
    CombinerState,
    SelectionResult,
    combined_scores,
    curriculum_reward,
    init_state,
    select,
    subset_size,
    update_method_weights,
)
from .data import MiniBatch, PerSampleStats, Sample
from .datasets import (
    Dataset,
    gen_classification_blobs,
    gen_regression_simple,
    load_csv_dataset,
    write_dataset_csv,
)
from .estimators import SubsampledSGDClassifier, SubsampledSGDRegressor
from .models import (
    GradNormMode,
    LossKind,
    Model,
    evaluate,
    forward_per_sample_losses,
    make_model,
    per_sample_grad_norms,
    predict,
)
from .ranking import normalize_losses_unit, softmax, top_k_indices
from .rng import RngStream
from .scorers import ScorerKind, adaboost_weights, score, select_standalone
from .sweep import ExperimentConfig, ResultRow, rank_table, run_sweep
from .training import (
    AdaSelectStrategy,
    DivergenceError,
    FullTraining,
    SGDMomentum,
    StandaloneStrategy,
    TrainReport,
    sgd_momentum_step,
    strategy_from_token,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AccumulationBuffer",
    "AdaSelectConfig",
    "AdaSelectStrategy",
    "CombinerState",
    "Dataset",
    "DivergenceError",
    "ExperimentConfig",
    "FullTraining",
    "GradNormMode",
    "LossKind",
    "MiniBatch",
    "Model",
    "PerSampleStats",
    "ResultRow",
    "RngStream",
    "Sample",
    "SGDMomentum",
    "ScorerKind",
    "SelectionResult",
    "SubsampledSGDClassifier",
    "SubsampledSGDRegressor",
    "StandaloneStrategy",
    "TrainReport",
    "adaboost_weights",
    "combined_scores",
    "curriculum_reward",
    "evaluate",
    "forward_per_sample_losses",
    "gen_classification_blobs",
    "gen_regression_simple",
    "init_state",
    "load_csv_dataset",
    "make_model",
    "normalize_losses_unit",
    "per_sample_grad_norms",
    "predict",
    "rank_table",
    "run_sweep",
    "score",
    "select",
    "select_standalone",
    "sgd_momentum_step",
    "softmax",
    "strategy_from_token",
    "subset_size",
    "top_k_indices",
    "train",
    "update_method_weights",
    "write_dataset_csv",
]
