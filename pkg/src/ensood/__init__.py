"""Uncertainty scores for single models and deep ensembles, and their evaluation as OOD detectors."""

from .core import (
    InvalidInputError,
    LogitMatrix,
    ToolkitError,
    entropy,
    kl_divergence,
    log_sum_exp,
    stable_softmax,
)
from .metrics import (
    BinaryProbMap,
    DetectionSplit,
    MetricReport,
    auroc,
    auroc_pairwise_oracle,
    binary_prob_map,
    detect,
    ensemble_nll_gap,
    fpr_at_95_tpr,
    threshold_at_tpr,
    top1_error,
)
from .scores import (
    SCORE_IDS,
    EnsembleBatch,
    ScoreSeries,
    average_energy,
    average_entropy,
    energy_uncertainty,
    ensemble_entropy,
    ensemble_msp,
    ensemble_posterior,
    msp_uncertainty,
    mutual_information,
    mutual_information_kl,
    score_batch,
)
from .simgen import SimConfig, make_scenario, simulate_batch, simulate_experiment

__version__ = "0.1.0"
