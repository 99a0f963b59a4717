"""Single-model and deep-ensemble uncertainty scores.

All scores are oriented so that a higher value means "more likely OOD".
Ensemble operations take member probabilities (or logits) stacked along
axis -2, i.e. ``(M, K)`` for one sample or ``(N, M, K)`` for a batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    InvalidInputError,
    LogitMatrix,
    _entropy_unchecked,
    _kl_unchecked,
    _scalar,
    as_logits,
    as_probs,
    log_sum_exp,
    stable_softmax,
)

SCORE_IDS = (
    "msp",
    "entropy",
    "energy",
    "ens-msp",
    "ens-entropy",
    "avg-entropy",
    "mi",
    "avg-energy",
)
SINGLE_MODEL_SCORES = frozenset({"msp", "entropy", "energy"})
ENSEMBLE_SCORES = tuple(s for s in SCORE_IDS if s not in SINGLE_MODEL_SCORES)


class UnknownScoreError(InvalidInputError):
    """Score name outside the fixed enumeration."""


def _members(x, checker) -> np.ndarray:
    try:
        arr = checker(x)
    except ValueError as exc:  # ragged input from np.asarray
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"members disagree on class count: {exc}") from None
    if arr.ndim < 2:
        raise InvalidInputError("expected members stacked as (M, K)")
    if arr.shape[-2] < 1:
        raise InvalidInputError("need at least one ensemble member")
    return arr


def member_mean(x: np.ndarray, axis: int = -2) -> np.ndarray:
    """Mean over members, written as first member plus mean deviation.

    Identical members therefore average to exactly that member, which keeps
    degenerate ensembles (M = 1, no disagreement) at exactly zero MI.
    """
    x = np.asarray(x)
    first = np.take(x, [0], axis=axis)
    return np.squeeze(first, axis=axis) + (x - first).mean(axis=axis)


# -- single model -------------------------------------------------------------

def msp_uncertainty(p):
    """Negated maximum softmax probability, in [-1, -1/K]."""
    return _scalar(-as_probs(p).max(axis=-1))


def energy_uncertainty(v):
    """Energy score ``-log sum_k exp(v_k)`` on raw logits."""
    return -log_sum_exp(v)


# -- ensemble -----------------------------------------------------------------

def ensemble_posterior(probs) -> np.ndarray:
    """Average of member softmax outputs."""
    return member_mean(_members(probs, as_probs))


def ensemble_entropy(probs):
    return _scalar(_entropy_unchecked(ensemble_posterior(probs)))


def average_entropy(probs):
    p = _members(probs, as_probs)
    return _scalar(member_mean(_entropy_unchecked(p), axis=-1))


def mutual_information(probs):
    """Ensemble entropy minus average member entropy."""
    p = _members(probs, as_probs)
    ens = _entropy_unchecked(member_mean(p))
    avg = member_mean(_entropy_unchecked(p), axis=-1)
    return _scalar(ens - avg)


def mutual_information_kl(probs):
    """Mean KL divergence from each member to the ensemble posterior.

    Algebraically identical to :func:`mutual_information`; kept as an
    independent route for cross-checking.
    """
    p = _members(probs, as_probs)
    pbar = np.expand_dims(member_mean(p), -2)
    return _scalar(_kl_unchecked(p, np.broadcast_to(pbar, p.shape)).mean(axis=-1))


def average_energy(logits):
    """Mean of per-member energies (not the energy of averaged logits)."""
    v = _members(logits, as_logits)
    return _scalar(-member_mean(np.asarray(log_sum_exp(v)), axis=-1))


def ensemble_msp(probs):
    return _scalar(-ensemble_posterior(probs).max(axis=-1))


# -- batches ------------------------------------------------------------------

@dataclass
class EnsembleBatch:
    """M member outputs aligned on the same samples and classes."""

    members: Sequence[LogitMatrix]

    def __post_init__(self):
        self.members = list(self.members)
        if not self.members:
            raise InvalidInputError("an ensemble needs at least one member")
        first = self.members[0]
        for i, m in enumerate(self.members[1:], start=1):
            if m.n_classes != first.n_classes:
                raise InvalidInputError(
                    f"member {i} has K={m.n_classes}, expected {first.n_classes}")
            if m.sample_ids != first.sample_ids:
                raise InvalidInputError(f"member {i} is not aligned by sample_id")
        self._stacked = None

    @classmethod
    def from_array(cls, logits, sample_ids=None, labels=None) -> "EnsembleBatch":
        """Build from an ``(N, M, K)`` array."""
        logits = np.asarray(logits, dtype=np.float64)
        if logits.ndim != 3:
            raise InvalidInputError("expected an (N, M, K) logit array")
        if sample_ids is None:
            sample_ids = [str(i) for i in range(logits.shape[0])]
        return cls([LogitMatrix(sample_ids, logits[:, m, :], labels)
                    for m in range(logits.shape[1])])

    @property
    def sample_ids(self) -> tuple:
        return self.members[0].sample_ids

    @property
    def labels(self) -> Optional[np.ndarray]:
        return self.members[0].labels

    @property
    def n_members(self) -> int:
        return len(self.members)

    @property
    def n_classes(self) -> int:
        return self.members[0].n_classes

    @property
    def n_samples(self) -> int:
        return self.members[0].n_samples

    @property
    def logits(self) -> np.ndarray:
        """Stacked ``(N, M, K)`` view of all member logits."""
        if self._stacked is None:
            self._stacked = np.stack([m.logits for m in self.members], axis=1)
        return self._stacked


@dataclass
class ScoreSeries:
    score_id: str
    sample_ids: Sequence[str]
    values: np.ndarray

    def __post_init__(self):
        self.sample_ids = tuple(self.sample_ids)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.sample_ids),):
            raise InvalidInputError("values and sample_ids differ in length")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError(f"score {self.score_id!r} produced non-finite values")

    def __len__(self):
        return len(self.sample_ids)


def check_score_id(score_id: str) -> str:
    if score_id not in SCORE_IDS:
        raise UnknownScoreError(
            f"unknown score id {score_id!r}; expected one of {', '.join(SCORE_IDS)}")
    return score_id


def _score_values(logits: np.ndarray, score_id: str, member: Optional[int]) -> np.ndarray:
    if score_id in SINGLE_MODEL_SCORES:
        v = logits[:, member, :]
        if score_id == "energy":
            return -log_sum_exp(v)
        p = stable_softmax(v)
        if score_id == "msp":
            return -p.max(axis=-1)
        return _entropy_unchecked(p)

    if score_id == "avg-energy":
        return -member_mean(log_sum_exp(logits), axis=-1)
    p = stable_softmax(logits)
    pbar = member_mean(p)
    if score_id == "ens-msp":
        return -pbar.max(axis=-1)
    if score_id == "ens-entropy":
        return _entropy_unchecked(pbar)
    avg = member_mean(_entropy_unchecked(p), axis=-1)
    if score_id == "avg-entropy":
        return avg
    return _entropy_unchecked(pbar) - avg  # mi


def score_batch(batch: EnsembleBatch, score_id: str,
                member: Optional[int] = None) -> ScoreSeries:
    """Apply one named score to every sample of ``batch``.

    Single-model scores (``msp``, ``entropy``, ``energy``) need ``member`` when
    the batch holds more than one model.
    """
    check_score_id(score_id)
    if score_id in SINGLE_MODEL_SCORES:
        if member is None:
            if batch.n_members != 1:
                raise InvalidInputError(
                    f"single-model score {score_id!r} on an ensemble of "
                    f"{batch.n_members} needs a member index")
            member = 0
        if not 0 <= member < batch.n_members:
            raise InvalidInputError(f"member index {member} out of range")
    values = _score_values(batch.logits, score_id, member)
    return ScoreSeries(score_id, batch.sample_ids, values)
