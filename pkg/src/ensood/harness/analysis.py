"""Binned exports of one score against another (e.g. MI given average entropy).

Values outside the bin range are assigned to the nearest edge bin, so counts
always add up to the number of samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..core import InvalidInputError
from ..scores import ScoreSeries

Bins = Union[int, Sequence[float]]


@dataclass
class HistogramTable:
    """Counts over (x-bin, y-bin) cells.

    ``kind`` is ``conditional`` (``frequency[i]`` is the distribution of y
    within x-bin i, zero and flagged ``empty`` when the bin has no samples) or
    ``joint`` (``frequency`` is counts / N and ``level`` holds
    ``x_center + y_center``, i.e. the ensemble entropy when x and y are
    average entropy and MI).
    """

    kind: str
    x_name: str
    y_name: str
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    frequency: np.ndarray
    empty: Optional[np.ndarray] = None
    level: Optional[np.ndarray] = None

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def make_edges(bins: Bins, values: Optional[np.ndarray] = None,
               value_range: Optional[Tuple[float, float]] = None) -> np.ndarray:
    if np.ndim(bins) == 0:
        n = int(bins)
        if n < 1:
            raise InvalidInputError("need at least one bin")
        if value_range is None:
            if values is None or len(values) == 0:
                raise InvalidInputError("a bin range or data is required")
            value_range = (float(np.min(values)), float(np.max(values)))
        lo, hi = value_range
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, n + 1)
    else:
        edges = np.asarray(bins, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise InvalidInputError("bin edges must be strictly increasing with at least one bin")
    return edges


def bin_index(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, edges.size - 2)


def _aligned(x: ScoreSeries, y: ScoreSeries):
    if tuple(x.sample_ids) != tuple(y.sample_ids):
        raise InvalidInputError(f"series {x.score_id!r} and {y.score_id!r} are not aligned by sample_id")


def _counts(x, y, x_bins, y_bins, x_range, y_range):
    _aligned(x, y)
    xe = make_edges(x_bins, x.values, x_range)
    ye = make_edges(y_bins, y.values, y_range)
    counts = np.zeros((xe.size - 1, ye.size - 1), dtype=np.int64)
    np.add.at(counts, (bin_index(x.values, xe), bin_index(y.values, ye)), 1)
    return xe, ye, counts


def conditional_histogram(x: ScoreSeries, y: ScoreSeries, x_bins: Bins, y_bins: Bins,
                          x_range=None, y_range=None) -> HistogramTable:
    xe, ye, counts = _counts(x, y, x_bins, y_bins, x_range, y_range)
    row_tot = counts.sum(axis=1, keepdims=True)
    empty = row_tot[:, 0] == 0
    freq = np.divide(counts, row_tot, out=np.zeros(counts.shape), where=row_tot > 0)
    return HistogramTable("conditional", x.score_id, y.score_id, xe, ye, counts, freq, empty=empty)


def joint_histogram2d(x: ScoreSeries, y: ScoreSeries, x_bins: Bins, y_bins: Bins,
                      x_range=None, y_range=None) -> HistogramTable:
    xe, ye, counts = _counts(x, y, x_bins, y_bins, x_range, y_range)
    xc = 0.5 * (xe[:-1] + xe[1:])
    yc = 0.5 * (ye[:-1] + ye[1:])
    level = xc[:, None] + yc[None, :]
    return HistogramTable("joint", x.score_id, y.score_id, xe, ye, counts,
                          counts / max(len(x), 1), level=level)


HIST_HEADER = ["kind", "dataset", "x_score", "y_score", "x_bin", "x_lo", "x_hi",
               "y_bin", "y_lo", "y_hi", "count", "frequency", "level", "empty"]


def _g(v) -> str:
    return f"{float(v):.17g}"


def write_histograms_csv(tables: Iterable[Tuple[str, HistogramTable]], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(HIST_HEADER)
        for dataset, t in tables:
            for i in range(t.counts.shape[0]):
                for j in range(t.counts.shape[1]):
                    wr.writerow([
                        t.kind, dataset, t.x_name, t.y_name,
                        i, _g(t.x_edges[i]), _g(t.x_edges[i + 1]),
                        j, _g(t.y_edges[j]), _g(t.y_edges[j + 1]),
                        int(t.counts[i, j]), _g(t.frequency[i, j]),
                        "" if t.level is None else _g(t.level[i, j]),
                        "" if t.empty is None else int(t.empty[i]),
                    ])


def entropy_range(n_classes: int) -> Tuple[float, float]:
    """Default [0, ln K] range for entropy-derived scores."""
    return 0.0, math.log(n_classes)
