"""Numerically stable primitives on logits and categorical distributions.

Every function works along the last axis, so a single vector of shape ``(K,)``
returns a Python float and a stacked array ``(..., K)`` returns an array of
shape ``(...)``. All logarithms are natural (nats).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

PROB_SUM_TOL = 1e-9


class ToolkitError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(ToolkitError, ValueError):
    """Input violates a numeric contract (non-finite values, bad distributions, shape mismatch)."""


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def as_logits(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0:
        raise InvalidInputError("logits must have a class axis")
    if v.shape[-1] < 2:
        raise InvalidInputError(f"need at least 2 classes, got K={v.shape[-1]}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("logits contain non-finite values")
    return v


def as_probs(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 0:
        raise InvalidInputError("probabilities must have a class axis")
    if p.shape[-1] < 2:
        raise InvalidInputError(f"need at least 2 classes, got K={p.shape[-1]}")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > PROB_SUM_TOL):
        raise InvalidInputError("probabilities must sum to 1")
    return p


def log_sum_exp(v):
    """``max(v) + log(sum(exp(v - max(v))))`` along the last axis."""
    v = as_logits(v)
    vmax = v.max(axis=-1, keepdims=True)
    out = vmax[..., 0] + np.log(np.exp(v - vmax).sum(axis=-1))
    return _scalar(out)


def log_softmax(v) -> np.ndarray:
    v = as_logits(v)
    vmax = v.max(axis=-1, keepdims=True)
    shifted = v - vmax
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def stable_softmax(v) -> np.ndarray:
    """Softmax with the max-shift trick; never overflows for finite input."""
    v = as_logits(v)
    e = np.exp(v - v.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _entropy_unchecked(p: np.ndarray) -> np.ndarray:
    # 0 * log 0 := 0
    safe = np.where(p > 0.0, p, 1.0)
    return -(p * np.log(safe)).sum(axis=-1)


def entropy(p):
    """Shannon entropy in nats, with the 0·ln 0 = 0 convention."""
    return _scalar(_entropy_unchecked(as_probs(p)))


def _kl_unchecked(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    support = p > 0.0
    with np.errstate(divide="ignore"):
        ratio = np.where(support, p / np.where(q > 0.0, q, 1.0), 1.0)
        terms = np.where(support, p * np.log(ratio), 0.0)
    bad = np.any(support & (q <= 0.0), axis=-1)
    out = terms.sum(axis=-1)
    if np.any(bad):
        warnings.warn("KL divergence is infinite: q has zeros where p does not",
                      RuntimeWarning, stacklevel=3)
        out = np.where(bad, np.inf, out)
    return out


def kl_divergence(p, q):
    """KL(p || q) in nats.

    Returns ``+inf`` (with a ``RuntimeWarning``) when q assigns zero mass to a
    class that p supports.
    """
    p = as_probs(p)
    q = as_probs(q)
    if p.shape != q.shape:
        raise InvalidInputError(f"shape mismatch: {p.shape} vs {q.shape}")
    return _scalar(_kl_unchecked(p, q))


@dataclass
class LogitMatrix:
    """Raw outputs of one model on one dataset: ``logits`` has shape (N, K)."""

    sample_ids: Sequence[str]
    logits: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.sample_ids = tuple(str(s) for s in self.sample_ids)
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.logits.ndim != 2:
            raise InvalidInputError("logits must be a 2-D (N, K) array")
        if self.logits.shape[1] < 2:
            raise InvalidInputError("need at least 2 classes")
        if not np.all(np.isfinite(self.logits)):
            raise InvalidInputError("logits contain non-finite values")
        if len(self.sample_ids) != self.logits.shape[0]:
            raise InvalidInputError("sample_ids and logit rows differ in length")
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise InvalidInputError("sample_ids must be unique")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.logits.shape[0],):
                raise InvalidInputError("labels must have one entry per sample")

    @property
    def n_samples(self) -> int:
        return self.logits.shape[0]

    @property
    def n_classes(self) -> int:
        return self.logits.shape[1]

    def __len__(self):
        return self.n_samples
