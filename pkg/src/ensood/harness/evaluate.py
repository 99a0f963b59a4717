"""Batch evaluation: scores x OOD datasets -> AUROC / FPR@95 report."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core import InvalidInputError, stable_softmax
from ..metrics import METRICS, MetricCell, MetricReport, top1_error
from ..scores import SINGLE_MODEL_SCORES, EnsembleBatch, check_score_id, score_batch
from .manifest import Manifest

OOD_MEAN = "OOD mean"
DEFAULT_METRICS = ("auroc", "fpr95")
REPORT_HEADER = ["score_id", "kind", "dataset", "metric", "value", "pm2std"]


def _mean_pm(values: np.ndarray, with_pm: bool) -> MetricCell:
    # population std across members
    return MetricCell(float(np.mean(values)), float(2.0 * np.std(values)) if with_pm else None)


def _metric_grid(batches: Dict[str, EnsembleBatch], id_name: str, ood_names: Sequence[str],
                 score_id: str, member: Optional[int], metric_ids: Sequence[str]) -> np.ndarray:
    """(n_metrics, n_ood) metric values for one score / member."""
    id_scores = score_batch(batches[id_name], score_id, member).values
    out = np.empty((len(metric_ids), len(ood_names)))
    for j, name in enumerate(ood_names):
        ood_scores = score_batch(batches[name], score_id, member).values
        for i, mid in enumerate(metric_ids):
            out[i, j] = METRICS[mid](id_scores, ood_scores)
    return out


def run_eval(manifest: Manifest, score_ids: Iterable[str],
             metric_ids: Sequence[str] = DEFAULT_METRICS, threads: int = 1) -> MetricReport:
    """Evaluate every requested score on every OOD dataset of ``manifest``.

    Ensemble scores give one value per dataset. Single-model scores are
    evaluated per member and reported as mean and 2 * (population) std; with
    M = 1 the spread is omitted. ``OOD mean`` is the unweighted mean over
    datasets of the per-dataset values.
    """
    score_ids = [check_score_id(s) for s in score_ids]
    for mid in metric_ids:
        if mid not in METRICS:
            raise InvalidInputError(f"unknown metric id {mid!r}; expected one of {', '.join(METRICS)}")
    batches = manifest.load_batches()
    id_name = manifest.id_dataset.name
    ood_names = [d.name for d in manifest.ood_datasets]
    M = manifest.M

    tasks: List[Tuple[str, Optional[int]]] = []
    for s in score_ids:
        if s in SINGLE_MODEL_SCORES:
            tasks.extend((s, m) for m in range(M))
        else:
            tasks.append((s, None))

    def run(task):
        return _metric_grid(batches, id_name, ood_names, task[0], task[1], metric_ids)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            grids = list(pool.map(run, tasks))
    else:
        grids = [run(t) for t in tasks]
    by_task = dict(zip(tasks, grids))

    report = MetricReport(id_dataset=id_name)
    for s in score_ids:
        single = s in SINGLE_MODEL_SCORES
        report.kinds[s] = "single" if single else "ensemble"
        if single:
            stack = np.stack([by_task[(s, m)] for m in range(M)])  # (M, n_metrics, n_ood)
        else:
            stack = by_task[(s, None)][None]
        with_pm = single and M > 1
        for i, mid in enumerate(metric_ids):
            for j, name in enumerate(ood_names):
                report.add(s, name, mid, _mean_pm(stack[:, i, j], with_pm))
            report.add(s, OOD_MEAN, mid, _mean_pm(stack[:, i, :].mean(axis=1), with_pm))

    labels = batches[id_name].labels
    if labels is not None:
        probs = stable_softmax(batches[id_name].logits)  # (N, M, K)
        member_err = np.array([top1_error(probs[:, m], labels) for m in range(M)])
        report.errors["single"] = _mean_pm(member_err, M > 1)
        report.errors["ensemble"] = MetricCell(top1_error(probs.mean(axis=1), labels))
    return report


def _pct(x: Optional[float]) -> str:
    return "" if x is None else f"{100.0 * x:.2f}"


def report_rows(report: MetricReport) -> List[List[str]]:
    """Long-format rows in deterministic order (score order, then dataset order)."""
    rows = []
    for (score_id, dataset), cells in report.rows.items():
        for metric, cell in cells.items():
            rows.append([score_id, report.kinds[score_id], dataset, metric,
                         _pct(cell.value), _pct(cell.pm2std)])
    for kind in ("single", "ensemble"):
        if kind in report.errors:
            cell = report.errors[kind]
            rows.append(["top1", kind, report.id_dataset, "err", _pct(cell.value), _pct(cell.pm2std)])
    return rows


def write_report_csv(report: MetricReport, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(REPORT_HEADER)
        wr.writerows(report_rows(report))


def format_table(report: MetricReport) -> str:
    """Plain-text table: one line per score, AUROC / FPR@95 per dataset (percent)."""
    datasets: List[str] = []
    metrics: List[str] = []
    for (_, ds), cells in report.rows.items():
        if ds not in datasets:
            datasets.append(ds)
        metrics.extend(m for m in cells if m not in metrics)
    # OOD mean first, as in the usual layout
    datasets.sort(key=lambda d: d != OOD_MEAN)
    head = ["score", "kind"] + [f"{d}:{m}" for d in datasets for m in metrics]
    lines = ["\t".join(head)]
    for s, kind in report.kinds.items():
        cells = []
        for d in datasets:
            for m in metrics:
                c = report.rows[(s, d)][m]
                cells.append(_pct(c.value) + (f"±{_pct(c.pm2std)}" if c.pm2std is not None else ""))
        lines.append("\t".join([s, kind] + cells))
    for kind, c in report.errors.items():
        lines.append(f"%Err ({kind}): {_pct(c.value)}" + (f"±{_pct(c.pm2std)}" if c.pm2std is not None else ""))
    return "\n".join(lines)
