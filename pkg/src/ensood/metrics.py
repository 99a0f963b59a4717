"""OOD detection treated as binary classification.

ID is the positive class throughout: the true-positive rate is the fraction
of ID samples kept, and FPR@95 is the fraction of OOD samples admitted as ID.
All values are fractions in [0, 1]; percentages belong to the report layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from .core import InvalidInputError, ToolkitError

ID = "ID"
OOD = "OOD"


class CalibrationError(InvalidInputError):
    """A binary probability map produced a value outside [0, 1]."""


class InfiniteNLLError(InvalidInputError):
    """A member gave zero probability to the true detection label."""


@dataclass
class DetectionSplit:
    id_scores: np.ndarray
    ood_scores: np.ndarray

    def __post_init__(self):
        self.id_scores = np.asarray(self.id_scores, dtype=np.float64).ravel()
        self.ood_scores = np.asarray(self.ood_scores, dtype=np.float64).ravel()
        if self.id_scores.size == 0 or self.ood_scores.size == 0:
            raise InvalidInputError("both ID and OOD score sets must be non-empty")
        if not (np.all(np.isfinite(self.id_scores)) and np.all(np.isfinite(self.ood_scores))):
            raise InvalidInputError("detection scores must be finite")

    def swapped(self) -> "DetectionSplit":
        return DetectionSplit(self.ood_scores, self.id_scores)


def _split(split_or_id, ood=None) -> DetectionSplit:
    if isinstance(split_or_id, DetectionSplit):
        return split_or_id
    return DetectionSplit(split_or_id, ood)


def detect(u: float, t: float) -> str:
    """Threshold detector: ID below ``t``, OOD at or above it."""
    return ID if u < t else OOD


def _doubled_average_ranks(values: np.ndarray) -> np.ndarray:
    """Twice the 1-based average rank of each value, as exact integers."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    n = values.size
    # start of each tie group in sorted order
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    ends = np.r_[starts[1:], n]  # exclusive
    # group occupies 1-based positions starts+1 .. ends; doubled mean = starts+1+ends
    group_rank2 = starts + 1 + ends
    sizes = ends - starts
    ranks2 = np.empty(n, dtype=np.int64)
    ranks2[order] = np.repeat(group_rank2, sizes)
    return ranks2


def auroc(split_or_id, ood=None) -> float:
    """Mann-Whitney AUROC: P(OOD score > ID score), ties counted 1/2.

    Uses the rank-sum identity with integer arithmetic, so the result is the
    correctly rounded quotient of the exact statistic.
    """
    s = _split(split_or_id, ood)
    n_id, n_ood = s.id_scores.size, s.ood_scores.size
    ranks2 = _doubled_average_ranks(np.concatenate([s.id_scores, s.ood_scores]))
    rank_sum2 = int(ranks2[n_id:].sum())
    u2 = rank_sum2 - n_ood * (n_ood + 1)  # 2 * U_ood
    return (u2 / 2.0) / (n_id * n_ood)


def auroc_pairwise_oracle(split_or_id, ood=None) -> float:
    """O(N_id * N_ood) enumeration of every (ID, OOD) pair."""
    s = _split(split_or_id, ood)
    o = s.ood_scores[:, None]
    i = s.id_scores[None, :]
    total = float(np.count_nonzero(o > i)) + 0.5 * float(np.count_nonzero(o == i))
    return total / (s.id_scores.size * s.ood_scores.size)


def threshold_at_tpr(id_scores, level: float = 0.95) -> float:
    """Smallest threshold keeping at least ``level`` of ID scores strictly below it.

    Candidates are the observed ID values plus ``+inf``; there is no
    interpolation between scores.
    """
    if not 0.0 < level < 1.0:
        raise InvalidInputError(f"level must be in (0, 1), got {level}")
    x = np.sort(np.asarray(id_scores, dtype=np.float64).ravel())
    if x.size == 0:
        raise InvalidInputError("id_scores must be non-empty")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("id_scores must be finite")
    candidates = np.unique(x)
    below = np.searchsorted(x, candidates, side="left")
    ok = np.flatnonzero(below / x.size >= level)
    return float(candidates[ok[0]]) if ok.size else math.inf


def fpr_at_tpr(split_or_id, ood=None, level: float = 0.95) -> float:
    s = _split(split_or_id, ood)
    t = threshold_at_tpr(s.id_scores, level)
    return np.count_nonzero(s.ood_scores < t) / s.ood_scores.size


def fpr_at_95_tpr(split_or_id, ood=None) -> float:
    """Fraction of OOD samples admitted as ID at the 95%-TPR threshold."""
    return fpr_at_tpr(split_or_id, ood, 0.95)


METRICS = {
    "auroc": auroc,
    "fpr95": fpr_at_95_tpr,
}


@dataclass(frozen=True)
class BinaryProbMap:
    """Affine map from an uncertainty score to P(s = OOD)."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise CalibrationError(f"slope a must be positive, got {self.a}")


def binary_prob_map(u: float, prob_map: BinaryProbMap) -> float:
    p = prob_map.a * u + prob_map.b
    if not 0.0 <= p <= 1.0:
        raise CalibrationError(f"a*u + b = {p} is not a probability (u={u})")
    return p


class NLLGap(NamedTuple):
    ens_nll: float
    avg_nll: float


def ensemble_nll_gap(member_ood_probs, s_true: str) -> NLLGap:
    """Detection NLL of the averaged ensemble vs. the members' average NLL.

    By Jensen's inequality ``ens_nll <= avg_nll``, with equality iff all
    members agree.
    """
    p_ood = np.asarray(member_ood_probs, dtype=np.float64).ravel()
    if p_ood.size == 0:
        raise InvalidInputError("need at least one member probability")
    if np.any(~np.isfinite(p_ood)) or np.any(p_ood < 0.0) or np.any(p_ood > 1.0):
        raise InvalidInputError("member probabilities must lie in [0, 1]")
    if s_true == OOD:
        p = p_ood
    elif s_true == ID:
        p = 1.0 - p_ood
    else:
        raise InvalidInputError(f"s_true must be {ID!r} or {OOD!r}, got {s_true!r}")
    if np.any(p <= 0.0):
        raise InfiniteNLLError("a member assigns zero probability to the true label")
    ens = -math.log(float(np.mean(p)))
    avg = float(np.mean(-np.log(p)))
    return NLLGap(ens, avg)


def top1_error(probs, labels) -> float:
    """Fraction of argmax predictions that miss the label (ties -> lowest index)."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise InvalidInputError("expected (N, K) probabilities and N labels")
    if labels.size == 0:
        raise InvalidInputError("need at least one sample")
    if np.any(labels < 0) or np.any(labels >= probs.shape[1]):
        raise InvalidInputError("label out of range")
    return float(np.mean(np.argmax(probs, axis=1) != labels))


@dataclass
class MetricCell:
    value: float
    pm2std: Optional[float] = None


@dataclass
class MetricReport:
    """Rows keyed by (score_id, dataset_id); each holds metric_id -> MetricCell.

    ``kinds`` records whether a score row is ``single`` (mean over members) or
    ``ensemble``. ``errors`` holds top-1 error rates keyed by ``single`` /
    ``ensemble`` when labels were available.
    """

    rows: Dict[Tuple[str, str], Dict[str, MetricCell]] = field(default_factory=dict)
    kinds: Dict[str, str] = field(default_factory=dict)
    errors: Dict[str, MetricCell] = field(default_factory=dict)
    id_dataset: Optional[str] = None

    def add(self, score_id: str, dataset: str, metric: str, cell: MetricCell):
        if not 0.0 <= cell.value <= 1.0:
            raise ToolkitError(f"{metric}={cell.value} outside [0, 1]")
        self.rows.setdefault((score_id, dataset), {})[metric] = cell

    def get(self, score_id: str, dataset: str, metric: str) -> MetricCell:
        return self.rows[(score_id, dataset)][metric]
