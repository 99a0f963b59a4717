"""Logit and score CSV files.

Logit files have the header ``sample_id,logit_0,...,logit_{K-1}[,label]``.
Floats are written with 17 significant digits so a write/read round trip is
exact for 64-bit values.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np

from ..core import LogitMatrix, ToolkitError
from ..scores import ScoreSeries

FLOAT_FMT = "{:.17g}"


class ParseError(ToolkitError):
    """Malformed input file; ``line`` is 1-based (header = line 1)."""

    def __init__(self, path, line: int, msg: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {msg}")


class HeaderError(ParseError):
    pass


class RaggedRowError(ParseError):
    pass


class NumericCellError(ParseError):
    pass


class DuplicateIdError(ParseError):
    pass


def fmt_float(x: float) -> str:
    return FLOAT_FMT.format(float(x))


def _parse_header(path, header: List[str]) -> Tuple[int, bool]:
    if not header or header[0] != "sample_id":
        raise HeaderError(path, 1, "first column must be 'sample_id'")
    cols = header[1:]
    has_label = bool(cols) and cols[-1] == "label"
    if has_label:
        cols = cols[:-1]
    expected = [f"logit_{k}" for k in range(len(cols))]
    if cols != expected:
        raise HeaderError(path, 1, "expected columns logit_0..logit_{K-1} in order, optionally followed by 'label'")
    if len(cols) < 2:
        raise HeaderError(path, 1, f"need at least 2 logit columns, got {len(cols)}")
    return len(cols), has_label


def load_logits_csv(path) -> LogitMatrix:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderError(path, 1, "empty file") from None
        K, has_label = _parse_header(path, header)
        width = 1 + K + int(has_label)
        ids, rows, labels, seen = [], [], [], set()
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise RaggedRowError(path, line, f"expected {width} fields, got {len(row)}")
            sid = row[0]
            if sid in seen:
                raise DuplicateIdError(path, line, f"duplicate sample_id {sid!r}")
            seen.add(sid)
            try:
                vals = [float(c) for c in row[1:1 + K]]
            except ValueError:
                raise NumericCellError(path, line, "non-numeric logit") from None
            if has_label:
                try:
                    lab = int(row[-1])
                except ValueError:
                    raise NumericCellError(path, line, f"non-integer label {row[-1]!r}") from None
                if not 0 <= lab < K:
                    raise NumericCellError(path, line, f"label {lab} outside 0..{K - 1}")
                labels.append(lab)
            ids.append(sid)
            rows.append(vals)
    if not rows:
        raise RaggedRowError(path, 2, "no data rows")
    return LogitMatrix(ids, np.array(rows, dtype=np.float64),
                       np.array(labels, dtype=np.int64) if has_label else None)


def write_logits_csv(matrix: LogitMatrix, path) -> None:
    K = matrix.n_classes
    header = ["sample_id"] + [f"logit_{k}" for k in range(K)]
    if matrix.labels is not None:
        header.append("label")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for i, sid in enumerate(matrix.sample_ids):
            row = [sid] + [fmt_float(x) for x in matrix.logits[i]]
            if matrix.labels is not None:
                row.append(int(matrix.labels[i]))
            wr.writerow(row)


SCORE_HEADER = ["sample_id", "dataset", "score_id", "value"]


def write_scores_csv(series: Iterable[Tuple[str, ScoreSeries]], path) -> None:
    """Write (dataset, series) pairs in long format."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SCORE_HEADER)
        for dataset, s in series:
            for sid, v in zip(s.sample_ids, s.values):
                wr.writerow([sid, dataset, s.score_id, fmt_float(v)])


def read_scores_csv(path) -> Dict[Tuple[str, str], ScoreSeries]:
    """Inverse of :func:`write_scores_csv`, keyed by (dataset, score_id)."""
    path = Path(path)
    acc: Dict[Tuple[str, str], Tuple[list, list]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCORE_HEADER:
            raise HeaderError(path, 1, f"expected header {','.join(SCORE_HEADER)}")
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise RaggedRowError(path, reader.line_num, f"expected 4 fields, got {len(row)}")
            sid, ds, score_id, val = row
            try:
                v = float(val)
            except ValueError:
                raise NumericCellError(path, reader.line_num, "non-numeric value") from None
            if not math.isfinite(v):
                raise NumericCellError(path, reader.line_num, "non-finite value")
            ids, vals = acc.setdefault((ds, score_id), ([], []))
            ids.append(sid)
            vals.append(v)
    return {k: ScoreSeries(k[1], ids, vals) for k, (ids, vals) in acc.items()}
