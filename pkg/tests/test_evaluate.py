import csv
import io

import numpy as np
import pytest

from ensood.core import InvalidInputError, stable_softmax
from ensood.harness.evaluate import OOD_MEAN, format_table, report_rows, run_eval, write_report_csv
from ensood.harness.manifest import load_manifest
from ensood.metrics import auroc, fpr_at_95_tpr, top1_error
from ensood.scores import SCORE_IDS, SINGLE_MODEL_SCORES, UnknownScoreError, score_batch
from ensood.simgen import make_scenario, simulate_experiment

from helpers import separated, write_manifest

METRIC_FN = {"auroc": auroc, "fpr95": fpr_at_95_tpr}


@pytest.fixture
def sim_manifest(tmp_path):
    out = simulate_experiment(
        make_scenario("id-confident", 300),
        {n: make_scenario(n, 200) for n in ("ood-high-avh", "ood-confident-disagreement")},
        seed=2)
    arrays = {k: b.logits for k, b in out.items()}
    labels = out["id-confident"].labels
    return load_manifest(write_manifest(tmp_path, arrays, id_labels=labels)), out


def test_separated_gives_perfect_rows(tmp_path):
    m = load_manifest(write_manifest(tmp_path, separated(np.random.default_rng(0))))
    rep = run_eval(m, SCORE_IDS)
    rows = report_rows(rep)
    assert rows
    for score, kind, ds, metric, value, pm in rows:
        assert value == ("100.00" if metric == "auroc" else "0.00"), (score, ds, metric)


def test_m1_ensemble_equals_single(tmp_path):
    rng = np.random.default_rng(1)
    data = {"id": rng.normal(0, 3, (60, 1, 6)), "a": rng.normal(0, 1, (50, 1, 6)), "b": rng.normal(0, 2, (40, 1, 6))}
    rep = run_eval(load_manifest(write_manifest(tmp_path, data)), SCORE_IDS)
    pairs = [("msp", "ens-msp"), ("entropy", "ens-entropy"), ("entropy", "avg-entropy"), ("energy", "avg-energy")]
    for single, ens in pairs:
        for ds in ("a", "b", OOD_MEAN):
            for metric in ("auroc", "fpr95"):
                s, e = rep.get(single, ds, metric), rep.get(ens, ds, metric)
                assert s.pm2std is None and e.pm2std is None
                assert s.value == pytest.approx(e.value, abs=1e-12)


def test_composition_oracle(sim_manifest):
    m, out = sim_manifest
    rep = run_eval(m, SCORE_IDS)
    idb = out["id-confident"]
    for s in SCORE_IDS:
        members = range(m.M) if s in SINGLE_MODEL_SCORES else [None]
        for ds in ("ood-high-avh", "ood-confident-disagreement"):
            for metric, fn in METRIC_FN.items():
                vals = [fn(score_batch(idb, s, k).values, score_batch(out[ds], s, k).values) for k in members]
                cell = rep.get(s, ds, metric)
                assert cell.value == pytest.approx(np.mean(vals), abs=1e-12)
                if s in SINGLE_MODEL_SCORES:
                    assert cell.pm2std == pytest.approx(2 * np.std(vals), abs=1e-12)
                else:
                    assert cell.pm2std is None


def test_top1_errors(sim_manifest):
    m, out = sim_manifest
    rep = run_eval(m, ["mi"])
    p = stable_softmax(out["id-confident"].logits)
    y = out["id-confident"].labels
    assert rep.errors["ensemble"].value == top1_error(p.mean(axis=1), y)
    assert rep.errors["single"].value == pytest.approx(np.mean([top1_error(p[:, k], y) for k in range(5)]))


def parse_report(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_printed_values_and_ood_mean(sim_manifest, tmp_path):
    m, _ = sim_manifest
    rep = run_eval(m, SCORE_IDS)
    write_report_csv(rep, tmp_path / "r.csv")
    rows = parse_report((tmp_path / "r.csv").read_text())
    for r in rows:
        v = r["value"]
        assert len(v.split(".")[1]) == 2
        assert 0.0 <= float(v) <= 100.0
    for s in SCORE_IDS:
        for metric in ("auroc", "fpr95"):
            per = [float(r["value"]) for r in rows if r["score_id"] == s and r["metric"] == metric
                   and r["dataset"] != OOD_MEAN]
            mean = [float(r["value"]) for r in rows if r["score_id"] == s and r["metric"] == metric
                    and r["dataset"] == OOD_MEAN]
            assert len(per) == 2 and len(mean) == 1
            assert abs(mean[0] - np.mean(per)) <= 0.01 + 1e-9


def test_row_order_follows_request(sim_manifest):
    m, _ = sim_manifest
    rows = report_rows(run_eval(m, ["mi", "msp"]))
    seen = []
    for r in rows:
        if r[0] not in seen:
            seen.append(r[0])
    assert seen == ["mi", "msp", "top1"]
    assert [r[2] for r in rows if r[0] == "mi" and r[3] == "auroc"] == \
        ["ood-high-avh", "ood-confident-disagreement", OOD_MEAN]


def test_thread_invariance(sim_manifest, tmp_path):
    m, _ = sim_manifest
    write_report_csv(run_eval(m, SCORE_IDS), tmp_path / "a.csv")
    write_report_csv(run_eval(m, SCORE_IDS, threads=4), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_format_table(sim_manifest):
    m, _ = sim_manifest
    table = format_table(run_eval(m, ["msp", "mi"]))
    head = table.splitlines()[0].split("\t")
    assert head[2].startswith(OOD_MEAN)
    assert "±" in table.splitlines()[1]
    assert "%Err" in table


def test_unknown_ids(sim_manifest):
    m, _ = sim_manifest
    with pytest.raises(UnknownScoreError):
        run_eval(m, ["odin"])
    with pytest.raises(InvalidInputError):
        run_eval(m, ["mi"], ["aupr"])
