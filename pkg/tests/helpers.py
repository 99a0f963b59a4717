"""Builders for on-disk fixtures shared by the harness tests."""

import json

import numpy as np

from ensood.core import LogitMatrix
from ensood.harness.io import write_logits_csv


def write_manifest(root, datasets, K=None, id_labels=None):
    """datasets: {name: array (N, M, K)}; the first entry is the ID set."""
    names = list(datasets)
    M = datasets[names[0]].shape[1]
    K = K or datasets[names[0]].shape[2]
    specs = []
    for d, name in enumerate(names):
        arr = datasets[name]
        (root / name).mkdir(parents=True, exist_ok=True)
        files = []
        for m in range(arr.shape[1]):
            ids = [f"{name}-{i}" for i in range(arr.shape[0])]
            labels = id_labels if d == 0 else None
            rel = f"{name}/m{m}.csv"
            write_logits_csv(LogitMatrix(ids, arr[:, m], labels), root / rel)
            files.append(rel)
        specs.append({"name": name, "files": files, "n_samples": int(arr.shape[0])})
    data = {"K": K, "ensemble": [f"m{m}" for m in range(M)],
            "id_dataset": specs[0], "ood_datasets": specs[1:]}
    path = root / "manifest.json"
    path.write_text(json.dumps(data))
    return path


def separated(rng, n=40, M=3, K=5, n_ood=2):
    """Confident ID logits and flat OOD logits: every score separates them."""
    idl = np.zeros((n, M, K))
    idl[:, :, 0] = 30.0
    idl += rng.normal(0, 0.01, idl.shape)
    out = {"id": idl}
    for j in range(n_ood):
        out[f"ood{j}"] = rng.normal(0, 0.01, (n + 5 * j, M, K))
    return out
